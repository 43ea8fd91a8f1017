"""Ensembles of differently seeded decoders with first-convergence stopping.

Members are defined to advance in lockstep, one iteration at a time. As soon
as any member converges, all stop; among the members that converged at that
same iteration, the lowest-weight solution wins, with ties going to the
lowest member index.

Lockstep is simulated sequentially here: member ``k`` runs with an iteration
cap equal to the earliest stop found among members ``0..k-1``, which yields
the same result while skipping work that lockstep would cut short.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

from .augment import GariModel
from .decoder import DecodeOutcome, DecoderConfig, decode
from .rng import mix_seed


@dataclass(frozen=True)
class EnsembleConfig:
    size: int = 24
    base_seed: int = 0
    decoder: DecoderConfig = DecoderConfig()
    member_seeds: Sequence[int] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("ensemble size must be at least 1")
        if self.member_seeds is not None and len(self.member_seeds) != self.size:
            raise ValueError("member_seeds must have one seed per member")

    def seed_of(self, member: int) -> int:
        if self.member_seeds is not None:
            return int(self.member_seeds[member])
        return mix_seed(self.base_seed, member)


def ensemble_decode(gm: GariModel, s_x, s_z, cfg: EnsembleConfig) -> DecodeOutcome:
    """Decode with ``cfg.size`` members; ``outcome.member`` names the winner.

    If no member converges within ``max_iters``, member 0's failed outcome is
    returned.
    """
    best: DecodeOutcome | None = None
    first: DecodeOutcome | None = None
    for k in range(cfg.size):
        cap = cfg.decoder.max_iters if best is None else best.iterations
        dcfg = dataclasses.replace(cfg.decoder, seed=cfg.seed_of(k), max_iters=cap)
        out = decode(gm, s_x, s_z, dcfg)
        out.member = k
        if k == 0:
            first = out
        if not out.converged:
            continue
        if (best is None or out.iterations < best.iterations
                or (out.iterations == best.iterations and out.weight < best.weight)):
            best = out
    return best if best is not None else first
