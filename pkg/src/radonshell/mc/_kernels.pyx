# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled reciprocal-simplex kernels.

The pure-numpy twin lives in :mod:`radonshell.mc._fallback`; both must
return identical accept/reject decisions on the same input.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

DEF MAXD = 8


cdef double _det(double* m, int d) noexcept nogil:
    """Determinant of a row-major d x d matrix (destroys ``m``)."""
    cdef int i, j, k, piv
    cdef double det = 1.0, best, tmp, f
    if d == 2:
        return m[0] * m[3] - m[1] * m[2]
    if d == 3:
        return (m[0] * (m[4] * m[8] - m[5] * m[7])
                - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6]))
    for k in range(d):
        piv = k
        best = fabs(m[k * d + k])
        for i in range(k + 1, d):
            if fabs(m[i * d + k]) > best:
                best = fabs(m[i * d + k])
                piv = i
        if best == 0.0:
            return 0.0
        if piv != k:
            det = -det
            for j in range(d):
                tmp = m[k * d + j]
                m[k * d + j] = m[piv * d + j]
                m[piv * d + j] = tmp
        det *= m[k * d + k]
        for i in range(k + 1, d):
            f = m[i * d + k] / m[k * d + k]
            for j in range(k + 1, d):
                m[i * d + j] -= f * m[k * d + j]
    return det


cdef double _subset_volume(double* pts, const int* idx, int d) noexcept nogil:
    """|det| of edge vectors of the simplex pts[idx[0..d]] (unnormalised)."""
    cdef double m[MAXD * MAXD]
    cdef int r, c
    cdef double* base = pts + idx[0] * d
    for r in range(d):
        for c in range(d):
            m[r * d + c] = pts[idx[r + 1] * d + c] - base[c]
    return fabs(_det(m, d))


def reciprocal_block(const double[:, :, ::1] A, const double[:, :, ::1] X,
                     const int[:, ::1] group_a, const int[:, ::1] group_b,
                     double gamma, double rtol):
    """Reciprocity test of (A[i], X[i]) over a block of samples.

    Parameters
    ----------
    A : (nA, d+1, d) array, nA is 1 (broadcast) or n
    X : (n, d+1, d) array
    group_a, group_b : (nparts, d+1) index arrays into the 2d+2 stacked
        points; row 0 must be the identity split (A | X).

    Returns
    -------
    vol_x : (n,) unnormalised |det| of X (multiply by 1/d! for volume)
    accepted : (n,) uint8
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef int d = X.shape[2]
    cdef int np1 = d + 1
    cdef int nparts = group_a.shape[0]
    cdef Py_ssize_t nA = A.shape[0]
    if d > MAXD:
        raise ValueError("dimension too large for compiled kernel")
    if A.shape[1] != np1 or A.shape[2] != d or X.shape[1] != np1:
        raise ValueError("shape mismatch between A and X")
    if nA != 1 and nA != n:
        raise ValueError("A must have one simplex or one per sample")
    vol_out = np.empty(n, dtype=np.float64)
    acc_out = np.empty(n, dtype=np.uint8)
    cdef double[::1] vol_x = vol_out
    cdef cnp.uint8_t[::1] acc = acc_out
    cdef double pts[2 * MAXD * (MAXD + 1)]
    cdef Py_ssize_t i, ia
    cdef int p, k, c
    cdef double va, vx, p0, thresh, prod
    cdef const int* ga = &group_a[0, 0]
    cdef const int* gb = &group_b[0, 0]
    with nogil:
        for i in range(n):
            ia = 0 if nA == 1 else i
            for k in range(np1):
                for c in range(d):
                    pts[k * d + c] = A[ia, k, c]
                    pts[(np1 + k) * d + c] = X[i, k, c]
            va = _subset_volume(pts, ga, d)
            vx = _subset_volume(pts, gb, d)
            vol_x[i] = vx
            p0 = va * vx
            # reject as soon as gamma * product beats p0 beyond tolerance
            thresh = p0 / (gamma * (1.0 - rtol))
            acc[i] = 1
            for p in range(1, nparts):
                prod = _subset_volume(pts, ga + p * np1, d)
                if prod == 0.0:
                    continue
                prod = prod * _subset_volume(pts, gb + p * np1, d)
                if prod > thresh:
                    acc[i] = 0
                    break
    return vol_out, acc_out


def block_volumes(const double[:, :, ::1] P):
    """Unnormalised |det| of each simplex in a (n, d+1, d) stack."""
    cdef Py_ssize_t n = P.shape[0]
    cdef int d = P.shape[2]
    if d > MAXD or P.shape[1] != d + 1:
        raise ValueError("expected (n, d+1, d) with d <= 8")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double m[MAXD * MAXD]
    cdef Py_ssize_t i
    cdef int r, c
    with nogil:
        for i in range(n):
            for r in range(d):
                for c in range(d):
                    m[r * d + c] = P[i, r + 1, c] - P[i, 0, c]
            o[i] = fabs(_det(m, d))
    return out
