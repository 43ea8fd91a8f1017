#!/usr/bin/env python3
"""Generate bivariate-bicycle memory-experiment DEM fixtures with Stim.

The circuit mirrors the depth-8 syndrome-extraction schedule of Bravyi et al.
as packaged in gongaa/SlidingWindowDecoder: `rounds` noisy syndrome cycles,
then a transversal Z-basis readout of the data qubits. Both X- and Z-check
detectors are emitted so the resulting DEM is the correlated (XYZ) model.
Every detector carries coordinates ``(check, 0, round, basis)`` with
basis 0 for X-type and 1 for Z-type, and a sidecar ``.typing`` file is
written next to each DEM.

Usage:
    python tools/make_bb_dems.py --d 6 --p 0.003 --out data/
"""

from __future__ import annotations

import argparse
import gzip
import pathlib

import numpy as np
import stim

# d -> (l, m, A x-powers, A y-powers, B x-powers, B y-powers)
BB_CODES = {
    6: (6, 6, [3], [1, 2], [1, 2], [3]),  # [[72,12,6]]
    10: (15, 3, [9], [1, 2], [2, 7], [0]),  # [[90,8,10]]
    12: (12, 6, [3], [1, 2], [1, 2], [3]),  # [[144,12,12]]
}


def _cyclic_shift(size: int) -> np.ndarray:
    s = np.zeros((size, size), dtype=np.uint8)
    for i in range(size):
        s[(i - 1) % size, i] = 1
    return s


def _mat_pow(m: np.ndarray, k: int) -> np.ndarray:
    out = np.eye(m.shape[0], dtype=np.int64)
    for _ in range(k):
        out = out @ m
    return (out % 2).astype(np.uint8)


def bb_code(d: int):
    """Return (hx, hz, A_list, B_list) for the BB code of distance d."""
    l, m, ax, ay, bx, by = BB_CODES[d]
    x = np.kron(_cyclic_shift(l), np.eye(m, dtype=np.uint8))
    y = np.kron(np.eye(l, dtype=np.uint8), _cyclic_shift(m))
    a_list = [_mat_pow(x, p) for p in ax] + [_mat_pow(y, p) for p in ay]
    b_list = [_mat_pow(y, p) for p in by] + [_mat_pow(x, p) for p in bx]
    a = sum(a_list) % 2
    b = sum(b_list) % 2
    hx = np.hstack([a, b]).astype(np.uint8)
    hz = np.hstack([b.T, a.T]).astype(np.uint8)
    return hx, hz, a_list, b_list


def _rref(rows: np.ndarray):
    m = rows.copy() % 2
    pivots = []
    r = 0
    for c in range(m.shape[1]):
        hits = np.nonzero(m[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        m[[r, p]] = m[[p, r]]
        others = np.nonzero(m[:, c])[0]
        others = others[others != r]
        m[others] ^= m[r]
        pivots.append(c)
        r += 1
        if r == m.shape[0]:
            break
    return m[:r], pivots


def _kernel(h: np.ndarray) -> np.ndarray:
    red, pivots = _rref(h)
    n = h.shape[1]
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in zip(red, pivots):
            if row[f]:
                basis[i, pc] = 1
    return basis


def z_logicals(hx: np.ndarray, hz: np.ndarray) -> np.ndarray:
    """Z-type logicals: kernel of hx modulo the row space of hz."""
    base_rank = len(_rref(hz)[1])
    chosen = []
    stack = hz.copy()
    for v in _kernel(hx):
        trial = np.vstack([stack, v])
        if len(_rref(trial)[1]) > base_rank + len(chosen):
            chosen.append(v)
            stack = trial
    return np.array(chosen, dtype=np.uint8)


def _support(m: np.ndarray) -> list[int]:
    # column index of the single 1 in each row
    return [int(np.nonzero(row)[0][0]) for row in m]


def memory_circuit(d: int, p: float, rounds: int | None = None) -> stim.Circuit:
    """Z-basis memory circuit with uniform depolarizing noise of strength p."""
    rounds = d if rounds is None else rounds
    hx, hz, a_list, b_list = bb_code(d)
    n = hx.shape[1]
    half = n // 2
    a1, a2, a3 = (_support(a) for a in a_list)
    b1, b2, b3 = (_support(b) for b in b_list)
    a1t, a2t, a3t = (_support(a.T) for a in a_list)
    b1t, b2t, b3t = (_support(b.T) for b in b_list)

    xc, ld, rd, zc = 0, half, n, n + half

    def det_lines(basis: int, rnd: int, first: bool) -> str:
        lines = []
        for i in range(half):
            recs = f"rec[{-half + i}]" if first else f"rec[{-half + i}] rec[{-n - half + i}]"
            lines.append(f"DETECTOR({i}, 0, {rnd}, {basis}) {recs}")
        return "\n".join(lines) + "\n"

    def cycle(c: stim.Circuit, rnd: int, repeat: bool) -> None:
        if repeat:
            for i in range(half):
                c.append("X_ERROR", zc + i, p)
                c.append("Z_ERROR", xc + i, p)
                c.append("DEPOLARIZE1", rd + i, p)
        else:
            for i in range(half):
                c.append("H", [xc + i])
        for i in range(half):
            c.append("CNOT", [rd + a1t[i], zc + i])
            c.append("DEPOLARIZE2", [rd + a1t[i], zc + i], p)
            c.append("DEPOLARIZE1", ld + i, p)
        c.append("TICK")
        layers = [
            ((a2, ld), (a3t, rd)),
            ((b2, rd), (b1t, ld)),
            ((b1, rd), (b2t, ld)),
            ((b3, rd), (b3t, ld)),
            ((a1, ld), (a2t, rd)),
        ]
        for (xs, xoff), (zs, zoff) in layers:
            for i in range(half):
                c.append("CNOT", [xc + i, xoff + xs[i]])
                c.append("DEPOLARIZE2", [xc + i, xoff + xs[i]], p)
                c.append("CNOT", [zoff + zs[i], zc + i])
                c.append("DEPOLARIZE2", [zoff + zs[i], zc + i], p)
            c.append("TICK")
        for i in range(half):
            c.append("CNOT", [xc + i, ld + a3[i]])
            c.append("DEPOLARIZE2", [xc + i, ld + a3[i]], p)
            c.append("X_ERROR", zc + i, p)
            c.append("MR", [zc + i])
        c += stim.Circuit(det_lines(1, rnd, first=not repeat))
        c.append("TICK")
        for i in range(half):
            c.append("Z_ERROR", xc + i, p)
            c.append("MRX", [xc + i])
        if repeat:
            c += stim.Circuit(det_lines(0, rnd, first=False))
        c.append("TICK")

    c = stim.Circuit()
    for i in range(half):
        c.append("R", xc + i)
        c.append("R", zc + i)
        c.append("X_ERROR", xc + i, p)
        c.append("X_ERROR", zc + i, p)
    for i in range(n):
        c.append("R", ld + i)
        c.append("X_ERROR", ld + i, p)
    c.append("TICK")
    cycle(c, 0, repeat=False)
    for r in range(1, rounds):
        cycle(c, r, repeat=True)
    for i in range(n):
        c.append("M", ld + i)
    final = []
    for i, row in enumerate(hz):
        recs = " ".join(f"rec[{-n + j}]" for j in np.nonzero(row)[0])
        final.append(f"DETECTOR({i}, 0, {rounds}, 1) {recs} rec[{-n - n + i}]")
    for k, row in enumerate(z_logicals(hx, hz)):
        recs = " ".join(f"rec[{-n + j}]" for j in np.nonzero(row)[0])
        final.append(f"OBSERVABLE_INCLUDE({k}) {recs}")
    c += stim.Circuit("\n".join(final))
    return c


def write_fixture(d: int, p: float, out: pathlib.Path, compress: bool = True) -> pathlib.Path:
    circuit = memory_circuit(d, p)
    dem = circuit.detector_error_model(decompose_errors=False)
    stem = f"bb_d{d}_p{p:g}"
    out.mkdir(parents=True, exist_ok=True)
    text = str(dem.flattened()) + "\n"
    path = out / (stem + (".dem.gz" if compress else ".dem"))
    if compress:
        with gzip.open(path, "wt") as fh:
            fh.write(text)
    else:
        path.write_text(text)
    xs, zs = [], []
    for k, coords in sorted(dem.get_detector_coordinates().items()):
        (xs if coords[3] == 0 else zs).append(str(k))
    (out / (stem + ".typing")).write_text("X: " + " ".join(xs) + "\nZ: " + " ".join(zs) + "\n")
    return path


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, nargs="+", default=[6, 10, 12])
    ap.add_argument("--p", type=float, nargs="+", default=[0.001])
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data"))
    ap.add_argument("--plain", action="store_true", help="write uncompressed .dem")
    args = ap.parse_args()
    for d in args.d:
        for p in args.p:
            print(write_fixture(d, p, args.out, compress=not args.plain))


if __name__ == "__main__":
    main()
