"""Compiled message-passing kernels over a CSR augmented matrix.

Row layout of the augmented matrix: ``[0, nx)`` top X rows, ``[nx, nx+nz)``
top Z rows, then the bottom U-group rows and V-group rows. Messages are
stored per CSR entry.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .rng import next_double, shuffle_identity


@nb.njit(cache=True)
def check_update(indptr, indices, row, negate, lam, msg, alpha, cap):
    start = indptr[row]
    end = indptr[row + 1]
    if end == start:
        return
    min1 = cap
    min2 = cap
    argmin = -1
    parity = negate
    for e in range(start, end):
        eta = lam[indices[e]] - msg[e]
        a = abs(eta)
        if eta < 0.0:
            parity = not parity
        if a < min1:
            min2 = min1
            min1 = a
            argmin = e
        elif a < min2:
            min2 = a
    for e in range(start, end):
        j = indices[e]
        eta = lam[j] - msg[e]
        mag = min2 if e == argmin else min1
        m = alpha * mag
        # parity of sigma and all signs, with this entry's own sign removed
        if parity != (eta < 0.0):
            m = -m
        if m > cap:
            m = cap
        elif m < -cap:
            m = -cap
        v = eta + m
        if v > cap:
            v = cap
        elif v < -cap:
            v = -cap
        lam[j] = v
        msg[e] = m


@nb.njit(cache=True)
def iterate_bottom(indptr, indices, lam, msg, alpha, cap, first_row, n_u, n_v):
    for r in range(first_row, first_row + n_u):
        check_update(indptr, indices, r, False, lam, msg, alpha, cap)
    for r in range(first_row + n_u, first_row + n_u + n_v):
        check_update(indptr, indices, r, False, lam, msg, alpha, cap)


@nb.njit(cache=True)
def iterate_top(indptr, indices, lam, msg, alpha, cap, nx, nz, s_x, s_z,
                perm_x, perm_z, rng_x, rng_z):
    shuffle_identity(perm_x, rng_x)
    for i in range(nx):
        r = perm_x[i]
        check_update(indptr, indices, r, s_x[r] != 0, lam, msg, alpha, cap)
    shuffle_identity(perm_z, rng_z)
    for i in range(nz):
        r = perm_z[i]
        check_update(indptr, indices, nx + r, s_z[r] != 0, lam, msg, alpha, cap)


@nb.njit(cache=True)
def rows_satisfied(indptr, indices, lam, first_row, n_rows, syndrome):
    for i in range(n_rows):
        r = first_row + i
        par = 0
        for e in range(indptr[r], indptr[r + 1]):
            if lam[indices[e]] < 0.0:
                par ^= 1
        if par != syndrome[i]:
            return False
    return True


@nb.njit(cache=True)
def decode_loop(indptr, indices, lam0, alpha, cap, nx, nz, n_u, n_v, s_x, s_z,
                rng_x, rng_z, max_iters, check_x, check_z):
    """Run the hybrid schedule until the checked syndromes hold.

    Returns ``(converged, iterations, lam)``.
    """
    lam = lam0.copy()
    msg = np.zeros(indices.shape[0], dtype=np.float64)
    perm_x = np.empty(nx, dtype=np.int64)
    perm_z = np.empty(nz, dtype=np.int64)
    for it in range(1, max_iters + 1):
        iterate_bottom(indptr, indices, lam, msg, alpha, cap, nx + nz, n_u, n_v)
        iterate_top(indptr, indices, lam, msg, alpha, cap, nx, nz, s_x, s_z,
                    perm_x, perm_z, rng_x, rng_z)
        ok = True
        if check_z:
            ok = rows_satisfied(indptr, indices, lam, nx, nz, s_z)
        if ok and check_x:
            ok = rows_satisfied(indptr, indices, lam, 0, nx, s_x)
        if ok:
            return True, it, lam
    return False, max_iters, lam


@nb.njit(cache=True)
def sample_errors(col_ptr, col_rows, priors, n_rows, rng, fired, syndrome):
    """Fire each column with its prior; accumulate the syndrome in place.

    ``fired`` (uint8, one per column) and ``syndrome`` (uint8, one per row)
    are overwritten.
    """
    for r in range(n_rows):
        syndrome[r] = 0
    for j in range(priors.shape[0]):
        if next_double(rng) < priors[j]:
            fired[j] = 1
            for e in range(col_ptr[j], col_ptr[j + 1]):
                syndrome[col_rows[e]] ^= 1
        else:
            fired[j] = 0

