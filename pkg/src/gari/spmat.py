"""Sparse binary matrices over GF(2).

`BinMatrix` keeps both a row-major and a column-major adjacency view. The
storage is a pair of scipy CSR/CSC matrices with unit data, so that products
used for syndromes and 4-cycle counting go through scipy's sparse kernels.
"""

from __future__ import annotations

import io
import pathlib
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class BinMatrix:
    """Immutable sparse GF(2) matrix with row and column adjacency lists.

    Entries are presence bits: building from a list of ``(row, col)`` pairs
    sums duplicates modulo 2, so a pair given twice cancels.
    """

    __slots__ = ("_csr", "_csc")

    def __init__(self, csr: sp.csr_matrix):
        csr = sp.csr_matrix(csr, dtype=np.int64, copy=True)
        csr.sum_duplicates()
        csr.data %= 2
        csr.eliminate_zeros()
        csr.data[:] = 1
        csr.sort_indices()
        self._csr = csr
        self._csc = csr.tocsc()
        self._csc.sort_indices()

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_pairs(cls, num_rows: int, num_cols: int,
                   rows: Iterable[int], cols: Iterable[int]) -> "BinMatrix":
        r = np.fromiter(rows, dtype=np.int64)
        c = np.fromiter(cols, dtype=np.int64)
        if r.shape != c.shape:
            raise ValueError("row and column index arrays differ in length")
        if r.size and (r.min() < 0 or r.max() >= num_rows or c.min() < 0 or c.max() >= num_cols):
            raise IndexError("entry index out of range")
        coo = sp.coo_matrix((np.ones(r.size, dtype=np.int64), (r, c)), shape=(num_rows, num_cols))
        return cls(coo.tocsr())

    @classmethod
    def from_columns(cls, num_rows: int, columns: Sequence[Iterable[int]]) -> "BinMatrix":
        rows: list[int] = []
        cols: list[int] = []
        for j, support in enumerate(columns):
            for i in support:
                rows.append(i)
                cols.append(j)
        return cls.from_pairs(num_rows, len(columns), rows, cols)

    @classmethod
    def from_rows(cls, num_cols: int, rows_: Sequence[Iterable[int]]) -> "BinMatrix":
        return cls.from_columns(num_cols, rows_).T

    @classmethod
    def from_dense(cls, a) -> "BinMatrix":
        a = np.asarray(a, dtype=np.int64) % 2
        if a.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(sp.csr_matrix(a))

    @classmethod
    def zeros(cls, num_rows: int, num_cols: int) -> "BinMatrix":
        return cls(sp.csr_matrix((num_rows, num_cols), dtype=np.int64))

    @classmethod
    def identity(cls, n: int) -> "BinMatrix":
        return cls(sp.identity(n, dtype=np.int64, format="csr"))

    # -- views ------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def num_rows(self) -> int:
        return self._csr.shape[0]

    @property
    def num_cols(self) -> int:
        return self._csr.shape[1]

    @property
    def nnz(self) -> int:
        return int(self._csr.nnz)

    @property
    def csr(self) -> sp.csr_matrix:
        return self._csr

    @property
    def csc(self) -> sp.csc_matrix:
        return self._csc

    def row(self, i: int) -> np.ndarray:
        """Sorted column indices of row ``i``."""
        p = self._csr.indptr
        return self._csr.indices[p[i]:p[i + 1]]

    def col(self, j: int) -> np.ndarray:
        """Sorted row indices of column ``j``."""
        p = self._csc.indptr
        return self._csc.indices[p[j]:p[j + 1]]

    def row_adj(self) -> list[np.ndarray]:
        return [self.row(i) for i in range(self.num_rows)]

    def col_adj(self) -> list[np.ndarray]:
        return [self.col(j) for j in range(self.num_cols)]

    def row_weights(self) -> np.ndarray:
        return np.diff(self._csr.indptr)

    def col_weights(self) -> np.ndarray:
        return np.diff(self._csc.indptr)

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray().astype(np.uint8)

    @property
    def T(self) -> "BinMatrix":
        return BinMatrix(self._csr.T.tocsr())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinMatrix):
            return NotImplemented
        if self.shape != other.shape or self.nnz != other.nnz:
            return False
        return (np.array_equal(self._csr.indptr, other._csr.indptr)
                and np.array_equal(self._csr.indices, other._csr.indices))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"BinMatrix({self.num_rows}x{self.num_cols}, nnz={self.nnz})"

    # -- algebra ------------------------------------------------------------

    def __matmul__(self, other: "BinMatrix") -> "BinMatrix":
        if self.num_cols != other.num_rows:
            raise ValueError(f"dimension mismatch: {self.shape} @ {other.shape}")
        return BinMatrix(self._csr @ other._csr)


def matvec_mod2(m: BinMatrix, x) -> np.ndarray:
    """Return ``(m @ x) mod 2`` as a uint8 vector.

    ``x`` may also be a 2-D array of shape ``(num_cols, k)``, in which case
    every column is multiplied.
    """
    x = np.asarray(x)
    if x.shape[0] != m.num_cols:
        raise ValueError(f"vector of length {x.shape[0]} does not match {m.num_cols} columns")
    y = m.csr @ (x.astype(np.int64) & 1)
    return (y & 1).astype(np.uint8)


def hstack(blocks: Sequence[BinMatrix]) -> BinMatrix:
    if not blocks:
        raise ValueError("nothing to stack")
    rows = {b.num_rows for b in blocks}
    if len(rows) != 1:
        raise ValueError(f"hstack needs equal row counts, got {sorted(rows)}")
    return BinMatrix(sp.hstack([b.csr for b in blocks], format="csr"))


def vstack(blocks: Sequence[BinMatrix]) -> BinMatrix:
    if not blocks:
        raise ValueError("nothing to stack")
    cols = {b.num_cols for b in blocks}
    if len(cols) != 1:
        raise ValueError(f"vstack needs equal column counts, got {sorted(cols)}")
    return BinMatrix(sp.vstack([b.csr for b in blocks], format="csr"))


def submatrix_by_columns(m: BinMatrix, cols: Sequence[int]) -> BinMatrix:
    idx = np.asarray(cols, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= m.num_cols):
        raise IndexError("column index out of range")
    return BinMatrix(m.csc[:, idx].tocsr())


def submatrix_by_rows(m: BinMatrix, rows: Sequence[int]) -> BinMatrix:
    idx = np.asarray(rows, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= m.num_rows):
        raise IndexError("row index out of range")
    return BinMatrix(m.csr[idx, :])


def count_4cycles(m: BinMatrix) -> int:
    """Number of 4-cycles in the Tanner graph of ``m``.

    A 4-cycle is an unordered pair of rows together with an unordered pair
    of columns whose four entries are all 1. The count is
    ``sum over row pairs of C(overlap, 2)``; overlaps come from the sparse
    Gram matrix ``m @ m.T``, i.e. a column-wise accumulation of row-pair
    co-occurrences.
    """
    if m.nnz == 0:
        return 0
    # transpose-invariant; use the smaller Gram matrix
    a = m.csr if m.num_rows <= m.num_cols else m.csc.T.tocsr()
    gram = sp.triu(a @ a.T, k=1).tocoo()
    v = gram.data.astype(np.int64)
    return int(np.sum(v * (v - 1) // 2))


def stats(m: BinMatrix) -> dict:
    """Table-style summary: size, nnz, average row weight, 4-cycles."""
    return {
        "num_rows": m.num_rows,
        "num_cols": m.num_cols,
        "nnz": m.nnz,
        "avg_row_weight": (m.nnz / m.num_rows) if m.num_rows else 0.0,
        "num_4cycles": count_4cycles(m),
    }


def write_triplets(m: BinMatrix, path) -> None:
    """Write ``m`` as ``rows cols nnz`` followed by sorted ``row col`` lines."""
    coo = m.csr.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"{m.num_rows} {m.num_cols} {m.nnz}\n")
        np.savetxt(fh, np.column_stack([coo.row[order], coo.col[order]]), fmt="%d")


def read_triplets(path) -> BinMatrix:
    path = pathlib.Path(path)
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: malformed header {header!r}")
        num_rows, num_cols, nnz = (int(t) for t in header)
        rest = fh.read()
    data = (np.loadtxt(io.StringIO(rest), dtype=np.int64, ndmin=2) if rest.strip()
            else np.zeros((0, 2), dtype=np.int64))
    if data.shape != (nnz, 2):
        raise ValueError(f"{path}: expected {nnz} entries, found {data.shape[0]}")
    return BinMatrix.from_pairs(num_rows, num_cols, data[:, 0], data[:, 1])
