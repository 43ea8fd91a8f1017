"""Walk through the GARI construction on a two-detector model.

One X-type detector D0 and one Z-type detector D1. There is a Z fault on D0,
an X fault on D1 that flips L0, and a Y fault hitting both.
"""

from __future__ import annotations

import numpy as np

from gari import build_correlated, build_gari, decode, verify_equivalence
from gari.dem import DetectorTyping, parse_dem

TEXT = """
error(0.01) D0
error(0.01) D1 L0
error(0.02) D0 D1 L0
"""

model = parse_dem(TEXT)
model = model.with_typing(DetectorTyping(np.array([0, 1], dtype=np.int8)))
cm = build_correlated(model)
print("D_XYZ (columns e_Z, e_X, e_Y):")
print(cm.dxyz.to_dense())

gm = build_gari(cm)
print("U =", gm.u.to_dense().tolist(), " V =", gm.v.to_dense().tolist())
print("augmented matrix (columns e_Z, e_X, e_Y, eb_Z, eb_X):")
print(gm.augmented.to_dense())
print("merged prior of eb_X:", gm.ebar_priors[gm.layout.n_ebz:])

# the variable change holds for every one of the 8 assignments
every = np.array(np.meshgrid(*[[0, 1]] * 3)).T.reshape(-1, 3)
print("equivalence on all assignments:", verify_equivalence(cm, gm, assignments=every).passed)

for s_x, s_z in [(0, 0), (1, 0), (0, 1), (1, 1)]:
    out = decode(gm, [s_x], [s_z])
    print(f"s_X={s_x} s_Z={s_z}: converged={out.converged} it={out.iterations} "
          f"eb_X={out.ebar_hat.tolist()} L-mask={out.predicted_obs}")
