"""Matrix statistics of the bivariate-bicycle fixtures.

Needs the DEM fixtures in data/ (see tools/make_bb_dems.py). For each code
prints sizes, average row weight and 4-cycle counts before and after the
augmentation, plus the edge count of the full augmented matrix.
"""

from __future__ import annotations

import pathlib
import sys

from gari import build_correlated, build_gari, load_dem, table_stats

DATA = pathlib.Path(__file__).resolve().parents[1] / "data"

for d in (6, 10, 12):
    path = DATA / f"bb_d{d}_p0.001.dem.gz"
    if not path.exists():
        sys.exit(f"missing {path}; run tools/make_bb_dems.py first")
    cm = build_correlated(load_dem(path))
    st = table_stats(cm, build_gari(cm))
    print(f"d={d}")
    for name in ("D_X", "D_Z", "D_XYZ", "bottom"):
        s = st[name]
        print(f"  {name:7s} {s['num_rows']:6d} x {s['num_cols']:6d}  "
              f"w_r={s['avg_row_weight']:7.2f}  4-cycles={s['num_4cycles']}")
    print(f"  edges: D_XYZ {st['D_XYZ']['nnz']}, augmented {st['augmented_nnz']}")
