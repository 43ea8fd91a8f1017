"""Random CSS-typed correlated DEMs for property tests and demos.

Detectors ``0..nx-1`` are X-type and ``nx..nx+nz-1`` Z-type. Z-type faults
(X-detectors only) never carry observables, as in a Z-basis memory. Most Y
faults are built as the union of an existing Z fault and an existing X fault,
which is the structure circuit-level DEMs have; the rest are arbitrary and
exercise the unmatched-column fallback.
"""

from __future__ import annotations

import numpy as np

from .dem import DemModel, DetectorTyping, ErrorMechanism, canonicalize


def _footprint(rng: np.random.Generator, lo: int, n: int, max_w: int) -> tuple[int, ...]:
    w = int(rng.integers(1, min(max_w, n) + 1))
    return tuple(sorted(lo + int(i) for i in rng.choice(n, size=w, replace=False)))


def random_correlated_dem(rng: np.random.Generator, nx: int = 4, nz: int = 4,
                          n_z: int = 4, n_x: int = 4, n_y: int = 4,
                          num_observables: int = 1, p_range=(0.005, 0.05),
                          structured: float = 0.85, max_weight: int = 2) -> DemModel:
    """Draw a typed DEM with roughly ``n_z + n_x + n_y`` mechanisms.

    Duplicates are merged, so the final count can be smaller.
    """
    if nx < 1 or nz < 1:
        raise ValueError("need at least one detector of each type")
    lo, hi = p_range
    mechs = []
    zf = [_footprint(rng, 0, nx, max_weight) for _ in range(n_z)]
    xf = [(_footprint(rng, nx, nz, max_weight),
           tuple(int(o) for o in np.flatnonzero(rng.random(num_observables) < 0.3)))
          for _ in range(n_x)]
    for f in zf:
        mechs.append(ErrorMechanism(float(rng.uniform(lo, hi)), f, ()))
    for f, obs in xf:
        mechs.append(ErrorMechanism(float(rng.uniform(lo, hi)), f, obs))
    for _ in range(n_y):
        if zf and xf and rng.random() < structured:
            a = zf[int(rng.integers(len(zf)))]
            b, obs = xf[int(rng.integers(len(xf)))]
        else:
            a = _footprint(rng, 0, nx, max_weight)
            b = _footprint(rng, nx, nz, max_weight)
            obs = tuple(int(o) for o in np.flatnonzero(rng.random(num_observables) < 0.3))
        mechs.append(ErrorMechanism(float(rng.uniform(lo, hi)), a + b, obs))
    types = np.array([0] * nx + [1] * nz, dtype=np.int8)
    return DemModel(tuple(canonicalize(mechs)), nx + nz, num_observables,
                    typing=DetectorTyping(types, "sidecar-file"))
