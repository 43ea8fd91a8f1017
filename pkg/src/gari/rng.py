"""Seedable, platform-independent pseudorandom streams.

Seeds are mixed with SplitMix64; streams are xoshiro256** whose 4-word state
is filled from SplitMix64. Both are implemented over explicit uint64
arithmetic so the sequences are identical on every platform and numpy
version.
"""

from __future__ import annotations

import numba as nb
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
# odd multiplier used to spread the index before mixing it into a seed
_INDEX_MUL = 0xD1B54A32D192ED03


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; return ``(new_state, output)``."""
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return state, z ^ (z >> 31)


def mix_seed(base: int, index: int) -> int:
    """Derive the 64-bit seed of sub-stream ``index`` from ``base``."""
    s = (int(base) ^ ((int(index) + 1) * _INDEX_MUL)) & MASK64
    return splitmix64(s)[1]


def xoshiro_state(seed: int, count: int = 1) -> np.ndarray:
    """``count`` consecutive xoshiro256** states seeded from ``seed``.

    Returns a ``(count, 4)`` uint64 array; stream ``i`` takes SplitMix64
    outputs ``4i .. 4i+3``.
    """
    s = int(seed) & MASK64
    out = np.empty((count, 4), dtype=np.uint64)
    for i in range(count):
        for w in range(4):
            s, out[i, w] = splitmix64(s)
    return out


@nb.njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@nb.njit(cache=True)
def next_u64(s):
    """xoshiro256** step on a length-4 uint64 state (updated in place)."""
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@nb.njit(cache=True)
def next_double(s):
    """Uniform double in [0, 1) with 53 random bits."""
    return np.float64(next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@nb.njit(cache=True)
def shuffle_identity(perm, s):
    """Fill ``perm`` with 0..n-1 and Fisher-Yates shuffle it.

    Index draws use ``u64 mod (i + 1)``; the modulo bias is below 2**-40 for
    any realistic row count.
    """
    n = perm.shape[0]
    for i in range(n):
        perm[i] = i
    for i in range(n - 1, 0, -1):
        j = np.int64(next_u64(s) % np.uint64(i + 1))
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
