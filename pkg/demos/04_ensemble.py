"""Single decoder versus small ensembles on the d=6, p=0.006 fixture.

Differently seeded members see different serial schedules, so some shots
that one member fails on are rescued by another. The first member to
converge stops the rest, so the ensemble also lowers the iteration count.
"""

from __future__ import annotations

import pathlib
import sys

from gari import ExperimentConfig, build_correlated, build_gari, load_dem, run_experiment

path = pathlib.Path(__file__).resolve().parents[1] / "data" / "bb_d6_p0.006.dem.gz"
if not path.exists():
    sys.exit(f"missing {path}; run tools/make_bb_dems.py --d 6 --p 0.006")
shots = int(sys.argv[1]) if len(sys.argv) > 1 else 1000

cm = build_correlated(load_dem(path))
gm = build_gari(cm)
for size in (1, 4, 12):
    rep = run_experiment(gm, cm, ExperimentConfig(shots=shots, seed=3, ensemble_size=size))
    print(f"ensemble {size:2d}: failures={rep.failures:4d} "
          f"(non-converged {rep.non_convergences}), avg iterations {rep.avg_iterations:.2f}")
