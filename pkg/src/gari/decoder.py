"""Normalized min-sum decoding on the augmented matrix.

One iteration processes the bottom part as two layers (U rows, then V rows)
and then the D_X and D_Z units, each with a randomized serial schedule.
LLRs are ``ln((1-p)/p)``: positive means "no error", and a hard decision of
exactly 0 reads as no error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .augment import GariModel
from .rng import xoshiro_state

ALPHA_DEFAULT = 0.96875   # 1 - 2**-5
ALPHA_FINE = 0.9921875    # 1 - 2**-7
MAX_ITERS_DEFAULT = 400
CAP_DEFAULT = 1e6


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder hyperparameters.

    ``check_both`` switches early stopping from the memory-side syndrome
    alone to both syndromes.
    """

    alpha: float = ALPHA_DEFAULT
    max_iters: int = MAX_ITERS_DEFAULT
    seed: int = 0
    magnitude_cap: float = CAP_DEFAULT
    check_both: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.magnitude_cap > 0:
            raise ValueError("magnitude_cap must be positive")


@dataclass
class DecodeOutcome:
    """Per-shot result.

    ``ebar_hat`` is the decoded memory-side error (eb_X in Z-memory) and
    ``weight`` its cost ``sum ln((1-p)/p)`` under the merged priors.
    """

    converged: bool
    iterations: int
    ebar_hat: np.ndarray
    predicted_obs: int
    weight: float
    member: int = 0

    @property
    def support(self) -> list[int]:
        return np.flatnonzero(self.ebar_hat).tolist()


@dataclass
class DecoderState:
    lam: np.ndarray
    msg: np.ndarray
    rng: np.ndarray  # (2, 4) uint64: D_X stream, D_Z stream
    iteration: int = 0
    perm_x: np.ndarray = field(default=None)
    perm_z: np.ndarray = field(default=None)


class _Graph:
    """CSR arrays and initial LLRs derived once per model."""

    def __init__(self, gm: GariModel):
        aug = gm.augmented.csr
        self.indptr = aug.indptr.astype(np.int64)
        self.indices = aug.indices.astype(np.int64)
        self.nx = gm.num_x_rows
        self.nz = gm.num_z_rows
        self.n_u = gm.layout.n_ebz
        self.n_v = gm.layout.n_ebx
        p = gm.priors_aug
        lam0 = np.zeros(p.size, dtype=np.float64)
        orig = gm.layout.num_original
        lam0[:orig] = np.log((1.0 - p[:orig]) / p[:orig])
        self.lam0 = lam0
        mp = gm.memory_priors
        with np.errstate(divide="ignore"):
            self.mem_cost = np.log((1.0 - mp) / mp)
        self.mem_slice = gm.memory_slice
        self.mem_obs = gm.memory_obs


def graph(gm: GariModel) -> _Graph:
    g = gm.__dict__.get("_decoder_graph")
    if g is None:
        g = _Graph(gm)
        gm.__dict__["_decoder_graph"] = g
    return g


def stream_states(seed: int) -> np.ndarray:
    """The D_X and D_Z permutation streams of a decoder seed."""
    return xoshiro_state(seed, 2)


def init_state(gm: GariModel, seed: int = 0) -> DecoderState:
    g = graph(gm)
    return DecoderState(lam=g.lam0.copy(), msg=np.zeros(g.indices.size),
                        rng=stream_states(seed),
                        perm_x=np.empty(g.nx, dtype=np.int64),
                        perm_z=np.empty(g.nz, dtype=np.int64))


def check_update(gm: GariModel, state: DecoderState, row: int, syndrome_bit: int,
                 alpha: float = ALPHA_DEFAULT, cap: float = CAP_DEFAULT) -> DecoderState:
    """Normalized min-sum update of one augmented row (in place)."""
    g = graph(gm)
    K.check_update(g.indptr, g.indices, int(row), bool(syndrome_bit), state.lam, state.msg,
                   float(alpha), float(cap))
    return state


def iterate_bottom(gm: GariModel, state: DecoderState, alpha: float = ALPHA_DEFAULT,
                   cap: float = CAP_DEFAULT) -> DecoderState:
    g = graph(gm)
    K.iterate_bottom(g.indptr, g.indices, state.lam, state.msg, float(alpha), float(cap),
                     g.nx + g.nz, g.n_u, g.n_v)
    return state


def iterate_top(gm: GariModel, state: DecoderState, s_x, s_z, alpha: float = ALPHA_DEFAULT,
                cap: float = CAP_DEFAULT) -> DecoderState:
    g = graph(gm)
    K.iterate_top(g.indptr, g.indices, state.lam, state.msg, float(alpha), float(cap),
                  g.nx, g.nz, _bits(s_x, g.nx, "s_X"), _bits(s_z, g.nz, "s_Z"),
                  state.perm_x, state.perm_z, state.rng[0], state.rng[1])
    state.iteration += 1
    return state


def _bits(s, n: int, name: str) -> np.ndarray:
    a = np.ascontiguousarray(s, dtype=np.uint8).reshape(-1)
    if a.size != n:
        raise ValueError(f"{name} has length {a.size}, expected {n}")
    return a


def outcome_from_llr(gm: GariModel, lam: np.ndarray, converged: bool,
                     iterations: int) -> DecodeOutcome:
    g = graph(gm)
    hard = (lam[g.mem_slice] < 0.0).astype(np.uint8)
    idx = np.flatnonzero(hard)
    obs = 0
    for i in idx:
        obs ^= int(g.mem_obs[i])
    return DecodeOutcome(converged=bool(converged), iterations=int(iterations), ebar_hat=hard,
                         predicted_obs=obs, weight=float(g.mem_cost[idx].sum()))


def decode(gm: GariModel, s_x, s_z, config: DecoderConfig = DecoderConfig()) -> DecodeOutcome:
    """Decode one shot.

    Each iteration runs the bottom layers and then both top units; after
    it, the memory-side hard decision is tested against its syndrome (and
    the other side too when ``config.check_both``).
    """
    g = graph(gm)
    s_x = _bits(s_x, g.nx, "s_X")
    s_z = _bits(s_z, g.nz, "s_Z")
    rng = stream_states(config.seed)
    zmem = gm.memory_basis == "Z"
    ok, iters, lam = K.decode_loop(
        g.indptr, g.indices, g.lam0, float(config.alpha), float(config.magnitude_cap),
        g.nx, g.nz, g.n_u, g.n_v, s_x, s_z, rng[0], rng[1], int(config.max_iters),
        bool(config.check_both or not zmem), bool(config.check_both or zmem))
    return outcome_from_llr(gm, lam, ok, iters)
