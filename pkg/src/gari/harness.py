"""Monte-Carlo memory experiments on a detector error model.

Shots are sampled directly from the DEM's independent mechanisms. Shot ``i``
uses sampling seed ``mix_seed(seed, 2i)`` and decoder seed
``mix_seed(seed, 2i + 1)``, so results do not depend on how shots are split
across worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import multiprocessing as mp

import numpy as np

from . import _kernels as K
from .augment import CorrelatedModel, GariModel
from .decoder import DecoderConfig, decode
from .ensemble import EnsembleConfig, ensemble_decode
from .rng import mix_seed, xoshiro_state

Z99 = 2.5758
WORKERS_ENV = "GARI_WORKERS"


@dataclass(frozen=True)
class ExperimentConfig:
    shots: int
    rounds: int = 1
    seed: int = 0
    decoder: DecoderConfig = DecoderConfig()
    ensemble_size: int = 1
    physical_p: float | None = None
    per_iter_ns: float | None = None
    budget_ns_per_round: float | None = None
    output_format: str = "json"

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be at least 1")
        if self.output_format not in ("json", "csv"):
            raise ValueError(f"unknown output format {self.output_format!r}")


@dataclass
class ExperimentReport:
    shots: int
    failures: int
    non_convergences: int
    mis_corrections: int
    ler: float
    ler_per_round: float
    ci99: tuple[float, float]
    ci99_per_round: tuple[float, float]
    low_confidence: bool
    iteration_histogram: dict[int, int]
    avg_iterations: float
    member_wins: dict[int, int] = field(default_factory=dict)
    latency_projection: dict | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["ci99"] = list(self.ci99)
        d["ci99_per_round"] = list(self.ci99_per_round)
        d["iteration_histogram"] = {str(k): v for k, v in sorted(self.iteration_histogram.items())}
        d["member_wins"] = {str(k): v for k, v in sorted(self.member_wins.items())}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        for key, val in sorted(self.to_dict().items()):
            if isinstance(val, dict):
                for k, v in val.items():
                    w.writerow([f"{key}.{k}", v])
            elif isinstance(val, list):
                w.writerow([f"{key}.lo", val[0]])
                w.writerow([f"{key}.hi", val[1]])
            else:
                w.writerow([key, val])
        return buf.getvalue()

    def render(self, fmt: str = "json") -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()


# -- statistics -------------------------------------------------------------------

def compose_rounds(p: float, r: int) -> float:
    """Overall flip probability after ``r`` rounds of per-round rate ``p``."""
    if p >= 0.5:
        return 0.5
    return -math.expm1(r * math.log1p(-2.0 * p)) / 2.0


def ler_per_round(ler: float, r: int) -> float:
    """Per-round logical error rate, ``(1 - (1 - 2 LER)^(1/r)) / 2``."""
    if r < 1:
        raise ValueError("rounds must be at least 1")
    if not 0.0 <= ler <= 0.5:
        raise ValueError(f"LER {ler} outside [0, 0.5]")
    # -expm1(log1p(-2x)/r)/2 avoids cancellation for tiny LER
    return -math.expm1(math.log1p(-2.0 * ler) / r) / 2.0 if ler < 0.5 else 0.5


def ci99(failures: int, shots: int) -> tuple[float, float]:
    """Wilson score interval at 99% confidence."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    z2 = Z99 * Z99
    phat = failures / shots
    denom = 1.0 + z2 / shots
    center = (phat + z2 / (2 * shots)) / denom
    half = Z99 * math.sqrt(phat * (1 - phat) / shots + z2 / (4 * shots * shots)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def latency_projection(avg_iters: float, per_iter_ns: float, rounds: int,
                       hist: dict[int, int] | None = None,
                       budget_ns_per_round: float | None = None) -> dict:
    """Per-round latency and the share of runs inside a per-round budget."""
    out = {"per_round_avg_ns": avg_iters * per_iter_ns / rounds}
    if budget_ns_per_round is not None:
        budget_iters = math.floor(budget_ns_per_round * rounds / per_iter_ns)
        out["budget_iters"] = budget_iters
        if hist:
            total = sum(hist.values())
            inside = sum(c for it, c in hist.items() if it <= budget_iters)
            out["fraction_within_budget"] = inside / total
    return out


# -- sampling -----------------------------------------------------------------------

class _Sampler:
    def __init__(self, cm: CorrelatedModel):
        csc = cm.dxyz.csc
        self.col_ptr = csc.indptr.astype(np.int64)
        self.col_rows = csc.indices.astype(np.int64)
        self.priors = cm.priors
        self.masks = cm.obs_mask
        self.n_rows = cm.dxyz.num_rows
        self.nx = cm.num_x_rows

    def sample(self, seed: int):
        fired = np.empty(self.priors.size, dtype=np.uint8)
        syn = np.empty(self.n_rows, dtype=np.uint8)
        K.sample_errors(self.col_ptr, self.col_rows, self.priors, self.n_rows,
                        xoshiro_state(seed)[0], fired, syn)
        obs = 0
        for j in np.flatnonzero(fired):
            obs ^= int(self.masks[j])
        return fired, syn[: self.nx], syn[self.nx:], obs


def sample_shot(cm: CorrelatedModel, seed: int):
    """Draw one shot: ``(error bits, s_X, s_Z, true observable mask)``."""
    return _Sampler(cm).sample(seed)


# -- experiment -----------------------------------------------------------------------

def _run_block(gm: GariModel, cm: CorrelatedModel, cfg: ExperimentConfig,
               start: int, stop: int) -> np.ndarray:
    sampler = _Sampler(cm)
    out = np.zeros((stop - start, 4), dtype=np.int64)  # converged, iters, member, failed
    for n, i in enumerate(range(start, stop)):
        _, s_x, s_z, true_obs = sampler.sample(mix_seed(cfg.seed, 2 * i))
        dseed = mix_seed(cfg.seed, 2 * i + 1)
        if cfg.ensemble_size == 1:
            res = decode(gm, s_x, s_z, dataclasses.replace(cfg.decoder, seed=dseed))
        else:
            res = ensemble_decode(gm, s_x, s_z, EnsembleConfig(
                size=cfg.ensemble_size, base_seed=dseed, decoder=cfg.decoder))
        failed = (not res.converged) or res.predicted_obs != true_obs
        out[n] = (res.converged, res.iterations, res.member, failed)
    return out


def _block_worker(args):
    return _run_block(*args)


def default_workers() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def run_shots(gm: GariModel, cm: CorrelatedModel, cfg: ExperimentConfig,
              workers: int | None = None) -> np.ndarray:
    """Per-shot records ``(converged, iterations, member, failed)``, in shot order."""
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or cfg.shots < 2:
        return _run_block(gm, cm, cfg, 0, cfg.shots)
    nblocks = min(cfg.shots, workers * 4)
    edges = np.linspace(0, cfg.shots, nblocks + 1).astype(int)
    jobs = [(gm, cm, cfg, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
        return np.concatenate(list(ex.map(_block_worker, jobs)))


def summarize(records: np.ndarray, cfg: ExperimentConfig) -> ExperimentReport:
    shots = int(records.shape[0])
    converged = records[:, 0].astype(bool)
    failed = records[:, 3].astype(bool)
    non_conv = int(np.count_nonzero(~converged))
    failures = int(np.count_nonzero(failed))
    its, counts = np.unique(records[:, 1], return_counts=True)
    hist = {int(i): int(c) for i, c in zip(its, counts)}
    wins = {}
    if cfg.ensemble_size > 1:
        m, c = np.unique(records[converged, 2], return_counts=True)
        wins = {int(a): int(b) for a, b in zip(m, c)}
    ler = failures / shots
    lo, hi = ci99(failures, shots)
    r = cfg.rounds
    avg = float(records[:, 1].sum()) / shots
    lat = None
    if cfg.per_iter_ns is not None:
        lat = latency_projection(avg, cfg.per_iter_ns, r, hist, cfg.budget_ns_per_round)
    return ExperimentReport(
        shots=shots,
        failures=failures,
        non_convergences=non_conv,
        mis_corrections=failures - non_conv,
        ler=ler,
        ler_per_round=ler_per_round(min(ler, 0.5), r),
        ci99=(lo, hi),
        ci99_per_round=(ler_per_round(min(lo, 0.5), r), ler_per_round(min(hi, 0.5), r)),
        low_confidence=failures < 100,
        iteration_histogram=hist,
        avg_iterations=avg,
        member_wins=wins,
        latency_projection=lat,
        config={
            "shots": cfg.shots, "rounds": r, "seed": cfg.seed,
            "alpha": cfg.decoder.alpha, "max_iters": cfg.decoder.max_iters,
            "check_both": cfg.decoder.check_both, "ensemble_size": cfg.ensemble_size,
            "physical_p": cfg.physical_p,
        },
    )


def run_experiment(gm: GariModel, cm: CorrelatedModel, cfg: ExperimentConfig,
                   workers: int | None = None) -> ExperimentReport:
    """Sample, decode and score ``cfg.shots`` shots.

    A shot fails when the decoder does not converge or when its predicted
    observable flips differ from the sampled ones.
    """
    return summarize(run_shots(gm, cm, cfg, workers), cfg)
