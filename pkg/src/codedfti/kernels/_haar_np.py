"""Pure-numpy orthonormal Haar kernels (fallback backend).

Level-by-level lifting with strided slicing; each pass is vectorized but the
outer loop over the log2(N) scales runs in Python.
"""

import math

import numpy as np

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def haar_analysis(x):
    """Full-depth orthonormal Haar analysis of a float64 array.

    Operates along axis 0; ``x.shape[0]`` must be a power of two. Output
    ordering is scaling coefficient first, then detail levels coarse to fine.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    out = np.empty_like(x)
    approx = x
    m = n
    while m > 1:
        h = m // 2
        even = approx[0:m:2]
        odd = approx[1:m:2]
        out[h:m] = (even - odd) * _INV_SQRT2
        approx = (even + odd) * _INV_SQRT2
        m = h
    out[0] = approx[0]
    return out


def haar_synthesis(s):
    """Inverse of :func:`haar_analysis` (orthonormal Haar synthesis)."""
    s = np.asarray(s, dtype=np.float64)
    n = s.shape[0]
    approx = s[0:1].copy()
    m = 1
    while m < n:
        detail = s[m : 2 * m]
        nxt = np.empty((2 * m,) + s.shape[1:], dtype=np.float64)
        nxt[0::2] = (approx + detail) * _INV_SQRT2
        nxt[1::2] = (approx - detail) * _INV_SQRT2
        approx = nxt
        m *= 2
    return approx
