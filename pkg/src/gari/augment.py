"""Graph augmentation and rewiring of a correlated detector error model.

The correlated decoding matrix is arranged as::

            e_Z   e_X   e_Y
    X dets  D_X    0    D_X'
    Z dets   0    D_Z   D_Z'

with ``D_X' = D_X U`` and ``D_Z' = D_Z V``. Substituting
``eb_Z = e_Z + U e_Y`` and ``eb_X = e_X + V e_Y`` gives the augmented matrix::

            e_Z  e_X  e_Y  eb_Z  eb_X
             0    0    0   D_X    0     | s_X
             0    0    0    0    D_Z    | s_Z
             I    0    U    I     0     | 0
             0    I    V    0     I     | 0

whose bottom part has no 4-cycles.
"""

from __future__ import annotations

import json
import logging
import pathlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .dem import X_TYPE, DemModel, xor_fold
from .spmat import (BinMatrix, count_4cycles, matvec_mod2, read_triplets,
                    stats, submatrix_by_rows, vstack, write_triplets)

log = logging.getLogger(__name__)

Z_BLOCK, X_BLOCK, Y_BLOCK = 0, 1, 2
BLOCK_NAMES = ("Z", "X", "Y")
MAX_OBSERVABLES = 64


def _mask(obs) -> int:
    m = 0
    for k in obs:
        m |= 1 << int(k)
    return m


@dataclass(frozen=True, eq=False)
class CorrelatedModel:
    """The correlated matrix D_XYZ with its column-block classification.

    Rows are X-type detector rows followed by Z-type detector rows; detectors
    touched by no mechanism are dropped and listed in ``dropped_detectors``.
    Columns are grouped as the Z-, X- and Y-blocks, each sorted by
    (detectors, observables).
    """

    dxyz: BinMatrix
    block_of: np.ndarray
    priors: np.ndarray
    obs_mask: np.ndarray
    row_detectors: np.ndarray
    num_x_rows: int
    memory_basis: str
    num_observables: int
    num_detectors: int
    dropped_detectors: tuple[int, ...] = ()

    @property
    def num_z_rows(self) -> int:
        return self.dxyz.num_rows - self.num_x_rows

    def block_size(self, block: int) -> int:
        return int(np.count_nonzero(self.block_of == block))

    @property
    def block_slices(self) -> tuple[slice, slice, slice]:
        nz, nx = self.block_size(Z_BLOCK), self.block_size(X_BLOCK)
        return slice(0, nz), slice(nz, nz + nx), slice(nz + nx, self.dxyz.num_cols)

    @cached_property
    def detector_row(self) -> np.ndarray:
        """Detector index -> row index (-1 for dropped detectors)."""
        out = np.full(self.num_detectors, -1, dtype=np.int64)
        out[self.row_detectors] = np.arange(self.row_detectors.size)
        return out

    def split_syndrome(self, detection_events) -> tuple[np.ndarray, np.ndarray]:
        """Map a per-detector bit vector onto (s_X, s_Z) over matrix rows."""
        ev = np.asarray(detection_events, dtype=np.uint8)
        rows = ev[..., self.row_detectors]
        return rows[..., : self.num_x_rows], rows[..., self.num_x_rows:]


def build_correlated(model: DemModel, memory_basis: str = "Z") -> CorrelatedModel:
    """Arrange a canonical, typed DEM as the block matrix D_XYZ.

    Raises:
        ValueError: for an untyped model, an undetectable logical fault, or a
            non-memory-side block column that flips an observable (which
            indicates the wrong memory basis).
    """
    memory_basis = memory_basis.upper()
    if memory_basis not in ("Z", "X"):
        raise ValueError(f"memory basis must be 'Z' or 'X', not {memory_basis!r}")
    if model.typing is None:
        raise ValueError("detector typing is required")
    if model.num_observables > MAX_OBSERVABLES:
        raise ValueError(f"at most {MAX_OBSERVABLES} observables are supported")
    types = model.typing.types

    blocks: list[list] = [[], [], []]
    for m in model.mechanisms:
        if not m.detectors:
            raise ValueError(f"undetectable logical fault (observables {m.observables}, "
                             f"p={m.probability}); the model cannot be decoded")
        t = types[list(m.detectors)]
        has_x = bool(np.any(t == X_TYPE))
        has_z = bool(np.any(t != X_TYPE))
        b = Y_BLOCK if (has_x and has_z) else (Z_BLOCK if has_x else X_BLOCK)
        blocks[b].append(m)

    silent = Z_BLOCK if memory_basis == "Z" else X_BLOCK
    bad = [m for m in blocks[silent] if m.observables]
    if bad:
        raise ValueError(f"{len(bad)} {BLOCK_NAMES[silent]}-block column(s) flip observables "
                         f"in {memory_basis}-memory (e.g. {bad[0].key}); wrong memory basis?")

    used = np.zeros(model.num_detectors, dtype=bool)
    for m in model.mechanisms:
        used[list(m.detectors)] = True
    order = np.arange(model.num_detectors)
    x_rows = order[(types == X_TYPE) & used]
    z_rows = order[(types != X_TYPE) & used]
    row_detectors = np.concatenate([x_rows, z_rows]).astype(np.int64)
    det_row = np.full(model.num_detectors, -1, dtype=np.int64)
    det_row[row_detectors] = np.arange(row_detectors.size)
    dropped = tuple(int(k) for k in order[~used])
    if dropped:
        log.info("dropping %d detector(s) with no incident mechanism", len(dropped))

    cols, block_of, priors, masks = [], [], [], []
    for b in (Z_BLOCK, X_BLOCK, Y_BLOCK):
        for m in sorted(blocks[b], key=lambda m: m.key):
            cols.append(det_row[list(m.detectors)])
            block_of.append(b)
            priors.append(m.probability)
            masks.append(_mask(m.observables))
    dxyz = BinMatrix.from_columns(row_detectors.size, cols)
    return CorrelatedModel(
        dxyz=dxyz,
        block_of=np.asarray(block_of, dtype=np.int8),
        priors=np.asarray(priors, dtype=np.float64),
        obs_mask=np.asarray(masks, dtype=np.uint64),
        row_detectors=row_detectors,
        num_x_rows=int(x_rows.size),
        memory_basis=memory_basis,
        num_observables=model.num_observables,
        num_detectors=model.num_detectors,
        dropped_detectors=dropped,
    )


class SingleType(NamedTuple):
    """Single-detector-type matrices and their column matching keys."""

    dx: BinMatrix
    dz: BinMatrix
    dx_keys: list
    dz_keys: list


def _restriction_keys(m: BinMatrix, masks: np.ndarray | None) -> list:
    if masks is None:
        return [tuple(m.col(j).tolist()) for j in range(m.num_cols)]
    return [(tuple(m.col(j).tolist()), int(masks[j])) for j in range(m.num_cols)]


def extract_single_type(cm: CorrelatedModel) -> SingleType:
    """Row-restrict the Z-block to X detectors and the X-block to Z detectors.

    Keys on the memory side (D_Z in Z-memory) are ``(footprint, obs_mask)``;
    on the other side they are the footprint alone.
    """
    zs, xs, _ = cm.block_slices
    nx = cm.num_x_rows
    x_rows = np.arange(nx)
    z_rows = np.arange(nx, cm.dxyz.num_rows)
    dx = submatrix_by_rows(BinMatrix(cm.dxyz.csc[:, zs].tocsr()), x_rows)
    dz = submatrix_by_rows(BinMatrix(cm.dxyz.csc[:, xs].tocsr()), z_rows)
    zmem = cm.memory_basis == "Z"
    dx_keys = _restriction_keys(dx, None if zmem else cm.obs_mask[zs])
    dz_keys = _restriction_keys(dz, cm.obs_mask[xs] if zmem else None)
    return SingleType(dx, dz, dx_keys, dz_keys)


class Matching(NamedTuple):
    """U, V and the (possibly extended) single-type matrices."""

    u: BinMatrix
    v: BinMatrix
    dx: BinMatrix
    dz: BinMatrix
    dx_keys: list
    dz_keys: list
    num_fresh_x: int
    num_fresh_z: int


def _match(keys: list, y_keys: list, side: str) -> tuple[list[int], list]:
    index: dict = {}
    for i, k in enumerate(keys):
        if k in index:
            raise ValueError(f"D_{side} has repeated column key {k}; malformed model")
        index[k] = i
    keys = list(keys)
    rows = []
    fresh = 0
    for k in y_keys:
        i = index.get(k)
        if i is None:
            i = len(keys)
            index[k] = i
            keys.append(k)
            fresh += 1
        rows.append(i)
    if fresh:
        log.warning("%d Y-column %s-restriction(s) match no D_%s column; appended fresh columns",
                    fresh, side, side)
    return rows, keys


def _key_footprint(k):
    return k[0] if (k and isinstance(k[0], tuple)) else k


def build_uv(cm: CorrelatedModel, single: SingleType) -> Matching:
    """Match every Y column to one D_X column (U) and one D_Z column (V).

    Unmatched restrictions get a fresh column appended to D_X or D_Z (with a
    warning). A repeated key inside D_X or D_Z is a hard error.
    """
    _, _, ys = cm.block_slices
    nx = cm.num_x_rows
    ycols = cm.dxyz.csc[:, ys].tocsc()
    ycols.sort_indices()
    ymask = cm.obs_mask[ys]
    zmem = cm.memory_basis == "Z"
    y_xkeys, y_zkeys = [], []
    for j in range(ycols.shape[1]):
        rows = ycols.indices[ycols.indptr[j]:ycols.indptr[j + 1]]
        xpart = tuple(rows[rows < nx].tolist())
        zpart = tuple((rows[rows >= nx] - nx).tolist())
        y_xkeys.append(xpart if zmem else (xpart, int(ymask[j])))
        y_zkeys.append((zpart, int(ymask[j])) if zmem else zpart)

    urows, dx_keys = _match(single.dx_keys, y_xkeys, "X")
    vrows, dz_keys = _match(single.dz_keys, y_zkeys, "Z")
    ny = len(y_xkeys)
    u = BinMatrix.from_pairs(len(dx_keys), ny, urows, range(ny))
    v = BinMatrix.from_pairs(len(dz_keys), ny, vrows, range(ny))
    dx, dz = single.dx, single.dz
    fresh_x = len(dx_keys) - dx.num_cols
    fresh_z = len(dz_keys) - dz.num_cols
    if fresh_x:
        dx = BinMatrix.from_columns(dx.num_rows, [_key_footprint(k) for k in dx_keys])
    if fresh_z:
        dz = BinMatrix.from_columns(dz.num_rows, [_key_footprint(k) for k in dz_keys])
    return Matching(u, v, dx, dz, dx_keys, dz_keys, fresh_x, fresh_z)


@dataclass(frozen=True)
class ColumnLayout:
    """Sizes of the augmented column blocks (e_Z, e_X, e_Y, eb_Z, eb_X)."""

    n_ez: int
    n_ex: int
    n_ey: int
    n_ebz: int
    n_ebx: int

    @property
    def ez(self) -> slice:
        return slice(0, self.n_ez)

    @property
    def ex(self) -> slice:
        return slice(self.ez.stop, self.ez.stop + self.n_ex)

    @property
    def ey(self) -> slice:
        return slice(self.ex.stop, self.ex.stop + self.n_ey)

    @property
    def ebz(self) -> slice:
        return slice(self.ey.stop, self.ey.stop + self.n_ebz)

    @property
    def ebx(self) -> slice:
        return slice(self.ebz.stop, self.ebz.stop + self.n_ebx)

    @property
    def num_original(self) -> int:
        return self.n_ez + self.n_ex + self.n_ey

    @property
    def total(self) -> int:
        return self.ebx.stop

    def offsets(self) -> dict:
        return {name: [s.start, s.stop] for name, s in
                (("e_Z", self.ez), ("e_X", self.ex), ("e_Y", self.ey),
                 ("eb_Z", self.ebz), ("eb_X", self.ebx))}


@dataclass(frozen=True, eq=False)
class GariModel:
    """Augmented decoding problem shared read-only by decoders.

    ``ebar_priors`` / ``ebar_obs`` cover the eb_Z columns followed by the
    eb_X columns. Priors there are the XOR-fold of the original column and
    its matched Y columns; observable masks are only meaningful on the
    memory side (eb_X in Z-memory).
    """

    top_x: BinMatrix
    top_z: BinMatrix
    u: BinMatrix
    v: BinMatrix
    bottom: BinMatrix
    layout: ColumnLayout
    priors_aug: np.ndarray
    ebar_priors: np.ndarray
    ebar_obs: np.ndarray
    memory_basis: str = "Z"
    num_observables: int = 0
    meta: dict = field(default_factory=dict)

    @cached_property
    def augmented(self) -> BinMatrix:
        """Full augmented matrix: top_X rows, top_Z rows, then bottom rows."""
        lay = self.layout
        top = sp.hstack([
            sp.csr_matrix((self.top_x.num_rows + self.top_z.num_rows, lay.num_original), dtype=np.int64),
            sp.block_diag([self.top_x.csr, self.top_z.csr], format="csr", dtype=np.int64),
        ], format="csr")
        return vstack([BinMatrix(top), self.bottom])

    @property
    def num_x_rows(self) -> int:
        return self.top_x.num_rows

    @property
    def num_z_rows(self) -> int:
        return self.top_z.num_rows

    @property
    def memory_slice(self) -> slice:
        """Augmented columns of the decoded (memory-side) eb block."""
        return self.layout.ebx if self.memory_basis == "Z" else self.layout.ebz

    @property
    def memory_top(self) -> BinMatrix:
        return self.top_z if self.memory_basis == "Z" else self.top_x

    @property
    def memory_priors(self) -> np.ndarray:
        n = self.layout.n_ebz
        return self.ebar_priors[n:] if self.memory_basis == "Z" else self.ebar_priors[:n]

    @property
    def memory_obs(self) -> np.ndarray:
        n = self.layout.n_ebz
        return self.ebar_obs[n:] if self.memory_basis == "Z" else self.ebar_obs[:n]


def _bottom_matrix(layout: ColumnLayout, u: BinMatrix, v: BinMatrix) -> BinMatrix:
    rows, cols = [], []
    lay = layout
    for group, (m, n_orig, orig, eb) in enumerate(((u, lay.n_ez, lay.ez, lay.ebz),
                                                 (v, lay.n_ex, lay.ex, lay.ebx))):
        base = 0 if group == 0 else lay.n_ebz
        for i in range(m.num_rows):
            if i < n_orig:
                rows.append(base + i)
                cols.append(orig.start + i)
            for j in m.row(i):
                rows.append(base + i)
                cols.append(lay.ey.start + int(j))
            rows.append(base + i)
            cols.append(eb.start + i)
    return BinMatrix.from_pairs(lay.n_ebz + lay.n_ebx, lay.total, rows, cols)


def assemble_gari(cm: CorrelatedModel, match: Matching) -> GariModel:
    """Assemble the augmented matrix, priors and observable masks."""
    zs, xs, ys = cm.block_slices
    layout = ColumnLayout(zs.stop - zs.start, xs.stop - xs.start, ys.stop - ys.start,
                          match.dx.num_cols, match.dz.num_cols)
    bottom = _bottom_matrix(layout, match.u, match.v)

    priors_aug = np.concatenate([cm.priors, np.full(layout.n_ebz + layout.n_ebx, 0.5)])
    ypri = cm.priors[ys]
    ebar_priors = []
    for m, orig in ((match.u, cm.priors[zs]), (match.v, cm.priors[xs])):
        for i in range(m.num_rows):
            members = [float(orig[i])] if i < orig.size else []
            members += [float(ypri[j]) for j in m.row(i)]
            ebar_priors.append(xor_fold(members))

    zmem = cm.memory_basis == "Z"
    mem_keys = match.dz_keys if zmem else match.dx_keys
    mem_obs = [k[1] for k in mem_keys]
    other = np.zeros(layout.n_ebz if zmem else layout.n_ebx, dtype=np.uint64)
    mem = np.asarray(mem_obs, dtype=np.uint64)
    ebar_obs = np.concatenate([other, mem]) if zmem else np.concatenate([mem, other])
    return GariModel(
        top_x=match.dx, top_z=match.dz, u=match.u, v=match.v, bottom=bottom,
        layout=layout, priors_aug=priors_aug,
        ebar_priors=np.asarray(ebar_priors, dtype=np.float64),
        ebar_obs=ebar_obs, memory_basis=cm.memory_basis,
        num_observables=cm.num_observables,
        meta={"num_fresh_x": match.num_fresh_x, "num_fresh_z": match.num_fresh_z,
              "dropped_detectors": list(cm.dropped_detectors)},
    )


def build_gari(cm: CorrelatedModel) -> GariModel:
    """extract_single_type -> build_uv -> assemble_gari."""
    return assemble_gari(cm, build_uv(cm, extract_single_type(cm)))


@dataclass
class EquivalenceReport:
    trials: int
    failures: int = 0
    first_failure: str | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0


def verify_equivalence(cm: CorrelatedModel, gm: GariModel, trials: int = 1000,
                       seed: int = 0, assignments=None) -> EquivalenceReport:
    """Check the variable change on random error assignments.

    For each assignment (e_Z, e_X, e_Y), sets eb_Z = e_Z + U e_Y and
    eb_X = e_X + V e_Y and checks that every bottom row is satisfied, that
    D_X eb_Z and D_Z eb_X reproduce the two halves of D_XYZ e, and that the
    memory-side eb reproduces the flipped observables.
    """
    lay = gm.layout
    rng = np.random.default_rng(seed)
    if assignments is not None:
        assignments = np.atleast_2d(np.asarray(assignments, dtype=np.uint8))
        trials = assignments.shape[0]
    failures = 0
    first = None
    for lo in range(0, trials, _EQUIV_BATCH):
        n = min(_EQUIV_BATCH, trials - lo)
        if assignments is None:
            batch = rng.integers(0, 2, size=(n, lay.num_original), dtype=np.uint8)
        else:
            batch = assignments[lo:lo + n]
        bad, name, idx = _equivalence_batch(cm, gm, batch.T)
        if bad and first is None:
            first = f"{name} mismatch in trial {lo + idx}"
        failures += bad
    return EquivalenceReport(trials=trials, failures=failures, first_failure=first)


_EQUIV_BATCH = 128


def _equivalence_batch(cm: CorrelatedModel, gm: GariModel, e: np.ndarray):
    """Failure count, first failing check name and trial for columns of ``e``."""
    lay = gm.layout
    ey = e[lay.ey]
    ebz = np.zeros((lay.n_ebz, e.shape[1]), dtype=np.uint8)
    ebx = np.zeros((lay.n_ebx, e.shape[1]), dtype=np.uint8)
    ebz[: lay.n_ez] = e[lay.ez]
    ebx[: lay.n_ex] = e[lay.ex]
    ebz ^= matvec_mod2(gm.u, ey)
    ebx ^= matvec_mod2(gm.v, ey)
    full = np.concatenate([e, ebz, ebx])
    s = matvec_mod2(cm.dxyz, e)
    checks = {
        "bottom": matvec_mod2(gm.bottom, full).any(axis=0),
        "s_X": (matvec_mod2(gm.top_x, ebz) != s[: cm.num_x_rows]).any(axis=0),
        "s_Z": (matvec_mod2(gm.top_z, ebx) != s[cm.num_x_rows:]).any(axis=0),
    }
    mem = ebx if gm.memory_basis == "Z" else ebz
    checks["observables"] = _xor_masks(cm.obs_mask, e) != _xor_masks(gm.memory_obs, mem)
    bad = np.zeros(e.shape[1], dtype=bool)
    first = (None, -1)
    for name, flags in checks.items():
        if flags.any() and first[0] is None:
            first = (name, int(np.argmax(flags)))
        bad |= flags
    return int(bad.sum()), first[0], first[1]


def _xor_masks(masks: np.ndarray, bits: np.ndarray) -> np.ndarray:
    out = np.zeros(bits.shape[1], dtype=np.uint64)
    for i in np.flatnonzero(masks):
        out ^= np.where(bits[i] != 0, masks[i], np.uint64(0))
    return out


# -- reporting and persistence -------------------------------------------------

def table_stats(cm: CorrelatedModel, gm: GariModel) -> dict:
    """Size, average row weight and 4-cycle count of D_X, D_Z, D_XYZ, bottom."""
    out = {
        "D_X": stats(gm.top_x),
        "D_Z": stats(gm.top_z),
        "D_XYZ": stats(cm.dxyz),
        "bottom": stats(gm.bottom),
    }
    out["augmented_nnz"] = gm.augmented.nnz
    out["removed_4cycles"] = (out["D_XYZ"]["num_4cycles"]
                              - out["D_X"]["num_4cycles"] - out["D_Z"]["num_4cycles"])
    return out


_FILES = ("top_x", "top_z", "u", "v", "bottom")


def save_model(gm: GariModel, out_dir, extra: dict | None = None) -> pathlib.Path:
    """Write blocks as triplet files plus ``manifest.json``."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in _FILES:
        write_triplets(getattr(gm, name), out / f"{name}.txt")
    manifest = {
        "format": "gari-model/1",
        "memory_basis": gm.memory_basis,
        "num_observables": gm.num_observables,
        "layout": {"n_ez": gm.layout.n_ez, "n_ex": gm.layout.n_ex, "n_ey": gm.layout.n_ey,
                   "n_ebz": gm.layout.n_ebz, "n_ebx": gm.layout.n_ebx},
        "block_offsets": gm.layout.offsets(),
        "files": {name: f"{name}.txt" for name in _FILES},
        "priors": [float(p) for p in gm.priors_aug[: gm.layout.num_original]],
        "ebar_priors": [float(p) for p in gm.ebar_priors],
        "ebar_obs": [int(m) for m in gm.ebar_obs],
        "meta": gm.meta,
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return out


def load_model(model_dir) -> GariModel:
    d = pathlib.Path(model_dir)
    man = json.loads((d / "manifest.json").read_text())
    if man.get("format") != "gari-model/1":
        raise ValueError(f"{d}: unsupported manifest format {man.get('format')!r}")
    layout = ColumnLayout(**man["layout"])
    mats = {name: read_triplets(d / man["files"][name]) for name in _FILES}
    priors = np.asarray(man["priors"], dtype=np.float64)
    if priors.size != layout.num_original:
        raise ValueError(f"{d}: prior count does not match layout")
    bottom = _bottom_matrix(layout, mats["u"], mats["v"])
    if bottom != mats["bottom"]:
        raise ValueError(f"{d}: bottom.txt is inconsistent with U and V")
    return GariModel(
        top_x=mats["top_x"], top_z=mats["top_z"], u=mats["u"], v=mats["v"], bottom=bottom,
        layout=layout,
        priors_aug=np.concatenate([priors, np.full(layout.n_ebz + layout.n_ebx, 0.5)]),
        ebar_priors=np.asarray(man["ebar_priors"], dtype=np.float64),
        ebar_obs=np.asarray(man["ebar_obs"], dtype=np.uint64),
        memory_basis=man["memory_basis"], num_observables=man["num_observables"],
        meta=dict(man.get("meta", {}), **{k: man[k] for k in ("distance", "rounds") if k in man}),
    )


def bottom_4cycles(gm: GariModel) -> int:
    return count_4cycles(gm.bottom)
