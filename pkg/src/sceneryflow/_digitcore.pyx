# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled digit-walk kernel.

Bit-identical to the NumPy fallback in ``_corepy``: per query, one IEEE
double multiply and add per digit, in digit order, no FMA contraction
(enforced by -ffp-contract=off at build time).
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport uint64_t

cnp.import_array()

FRAC_BITS = 52

cdef uint64_t C_ONE = (<uint64_t>1) << 52
cdef uint64_t C_MASK = C_ONE - 1


def cdf_walk(q, int base, rows_w, rows_cum, s0, int max_depth):
    """See ``sceneryflow._corepy.cdf_walk`` for the contract."""
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] qa = np.ascontiguousarray(q, dtype=np.uint64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rw = np.ascontiguousarray(rows_w, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rc = np.ascontiguousarray(rows_cum, dtype=np.float64)

    cdef Py_ssize_t N = qa.shape[0]
    s0a = np.asarray(s0, dtype=np.uint64)
    if s0a.ndim == 0 or s0a.shape[0] != N:
        s0a = np.broadcast_to(s0a, (N,)).copy()
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] sa = np.ascontiguousarray(s0a)

    cdef cnp.ndarray[cnp.float64_t, ndim=1] F = np.empty(N, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tail = np.empty(N, dtype=np.float64)

    cdef uint64_t b = <uint64_t>base
    cdef uint64_t n, m, d, state
    cdef double f, prod
    cdef Py_ssize_t j
    cdef int step

    with nogil:
        for j in range(N):
            n = qa[j]
            if n >= C_ONE:
                F[j] = 1.0
                tail[j] = 0.0
                continue
            f = 0.0
            prod = 1.0
            state = sa[j]

            for step in range(max_depth):
                m = n * b
                d = m >> 52
                n = m & C_MASK
                f += prod * rc[state * b + d]
                prod = prod * rw[state * b + d]
                state = d

            F[j] = f
            tail[j] = prod if n > 0 else 0.0

    return F, tail
