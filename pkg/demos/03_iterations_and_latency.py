"""Average decoding iterations versus physical error rate, and latency.

Decodes the d=6 fixtures with a single decoder and prints a plot-ready CSV
of average iterations, LER and projected per-round latency at 2.9 us per
iteration over 6 rounds. Shot count is the first argument (default 2000).
"""

from __future__ import annotations

import pathlib
import sys

from gari import ExperimentConfig, build_correlated, build_gari, load_dem, run_experiment

DATA = pathlib.Path(__file__).resolve().parents[1] / "data"
shots = int(sys.argv[1]) if len(sys.argv) > 1 else 2000

print("p,shots,avg_iterations,ler,ler_per_round,non_convergences,per_round_ns,within_budget")
for p in (0.001, 0.003, 0.005, 0.006):
    path = DATA / f"bb_d6_p{p:g}.dem.gz"
    if not path.exists():
        continue
    cm = build_correlated(load_dem(path))
    gm = build_gari(cm)
    cfg = ExperimentConfig(shots=shots, rounds=6, seed=1, physical_p=p,
                           per_iter_ns=2900, budget_ns_per_round=1000)
    rep = run_experiment(gm, cm, cfg)
    lat = rep.latency_projection
    print(f"{p},{shots},{rep.avg_iterations:.3f},{rep.ler:.3e},{rep.ler_per_round:.3e},"
          f"{rep.non_convergences},{lat['per_round_avg_ns']:.1f},"
          f"{lat['fraction_within_budget']:.4f}")
