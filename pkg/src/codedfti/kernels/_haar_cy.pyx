# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled orthonormal Haar kernels (hot path of the BPDN solver)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double INV_SQRT2 = 0.7071067811865476


def haar_analysis_1d(double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    buf_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] buf = buf_arr
    cdef Py_ssize_t m = n, h, i
    cdef double e, o
    for i in range(n):
        buf[i] = x[i]
    while m > 1:
        h = m // 2
        for i in range(h):
            e = buf[2 * i]
            o = buf[2 * i + 1]
            out[h + i] = (e - o) * INV_SQRT2
            buf[i] = (e + o) * INV_SQRT2
        m = h
    out[0] = buf[0]
    return out_arr


def haar_synthesis_1d(double[::1] s):
    cdef Py_ssize_t n = s.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    work_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] work = work_arr
    cdef double[::1] cur = out
    cdef double[::1] nxt
    cdef bint in_out = True
    cdef Py_ssize_t m = 1, i
    cdef double a, d
    cur[0] = s[0]
    while m < n:
        nxt = work if in_out else out
        for i in range(m):
            a = cur[i]
            d = s[m + i]
            nxt[2 * i] = (a + d) * INV_SQRT2
            nxt[2 * i + 1] = (a - d) * INV_SQRT2
        cur = nxt
        in_out = not in_out
        m *= 2
    if not in_out:
        for i in range(n):
            out[i] = work[i]
    return out_arr
