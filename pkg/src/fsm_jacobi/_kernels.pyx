# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: tridiagonal / triangular band solves and run scans.

All band arrays are row-aligned: ``sub[i]`` multiplies ``x[i-1]``,
``diag[i]`` multiplies ``x[i]``, ``sup[i]`` multiplies ``x[i+1]`` (and
analogously for the two-sided triangular variants). Entries that would
address a column outside ``[0, n)`` are ignored.
"""

import numpy as np

cdef extern from "complex.h" nogil:
    double cabs(double complex z)


cdef Py_ssize_t _thomas(const double complex[::1] sub,
                        const double complex[::1] diag,
                        const double complex[::1] sup,
                        const double complex[::1] rhs,
                        double complex[::1] out,
                        double complex[::1] cp,
                        double pivot_tol) noexcept nogil:
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double complex denom = diag[0]
    if cabs(denom) <= pivot_tol:
        return 0
    cp[0] = sup[0] / denom if n > 1 else 0
    out[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - sub[i] * cp[i - 1]
        if cabs(denom) <= pivot_tol:
            return i
        if i < n - 1:
            cp[i] = sup[i] / denom
        out[i] = (rhs[i] - sub[i] * out[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        out[i] = out[i] - cp[i] * out[i + 1]
    return -1


def thomas(const double complex[::1] sub, const double complex[::1] diag,
           const double complex[::1] sup, const double complex[::1] rhs,
           double complex[::1] out, double pivot_tol):
    """Forward elimination + back substitution without pivoting.

    Returns -1 on success, otherwise the row whose pivot fell below
    ``pivot_tol`` (``out`` is then garbage).
    """
    cdef Py_ssize_t res
    if diag.shape[0] == 0:
        return -1
    cdef double complex[::1] cp = np.empty(diag.shape[0], dtype=np.complex128)
    with nogil:
        res = _thomas(sub, diag, sup, rhs, out, cp, pivot_tol)
    return res


cdef Py_ssize_t _upper3(const double complex[::1] d0,
                        const double complex[::1] d1,
                        const double complex[::1] d2,
                        const double complex[::1] rhs,
                        double complex[::1] out) noexcept nogil:
    cdef Py_ssize_t n = d0.shape[0]
    cdef Py_ssize_t i
    cdef double complex acc
    for i in range(n - 1, -1, -1):
        acc = rhs[i]
        if i + 1 < n:
            acc = acc - d1[i] * out[i + 1]
        if i + 2 < n:
            acc = acc - d2[i] * out[i + 2]
        if d0[i] == 0:
            return i
        out[i] = acc / d0[i]
    return -1


def upper3(const double complex[::1] d0, const double complex[::1] d1,
           const double complex[::1] d2, const double complex[::1] rhs,
           double complex[::1] out):
    """Back substitution for bands at offsets 0, +1, +2.

    Returns -1 on success or the first (bottom-up) row with a zero pivot.
    """
    cdef Py_ssize_t res
    with nogil:
        res = _upper3(d0, d1, d2, rhs, out)
    return res


cdef Py_ssize_t _lower3(const double complex[::1] dm2,
                        const double complex[::1] dm1,
                        const double complex[::1] d0,
                        const double complex[::1] rhs,
                        double complex[::1] out) noexcept nogil:
    cdef Py_ssize_t n = d0.shape[0]
    cdef Py_ssize_t i
    cdef double complex acc
    for i in range(n):
        acc = rhs[i]
        if i >= 1:
            acc = acc - dm1[i] * out[i - 1]
        if i >= 2:
            acc = acc - dm2[i] * out[i - 2]
        if d0[i] == 0:
            return i
        out[i] = acc / d0[i]
    return -1


def lower3(const double complex[::1] dm2, const double complex[::1] dm1,
           const double complex[::1] d0, const double complex[::1] rhs,
           double complex[::1] out):
    """Forward substitution for bands at offsets -2, -1, 0."""
    cdef Py_ssize_t res
    with nogil:
        res = _lower3(dm2, dm1, d0, rhs, out)
    return res


cdef Py_ssize_t _scan_right(const double[::1] dist, double thresh,
                            Py_ssize_t need, Py_ssize_t start) noexcept nogil:
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t p, run = 0
    cdef Py_ssize_t first = start - need + 1
    if first < 0:
        first = 0
    for p in range(first, n):
        if dist[p] < thresh:
            run += 1
        else:
            run = 0
        if p >= start and run >= need:
            return p
    return -1


def scan_right(const double[::1] dist, double thresh, Py_ssize_t need,
               Py_ssize_t start):
    """Smallest position ``p >= start`` with ``dist[p-need+1 .. p] < thresh``.

    Positions are array offsets. Returns -1 if none exists in the array.
    """
    cdef Py_ssize_t res
    with nogil:
        res = _scan_right(dist, thresh, need, start)
    return res


cdef Py_ssize_t _scan_left(const double[::1] dist, double thresh,
                           Py_ssize_t need, Py_ssize_t start) noexcept nogil:
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t p, run = 0
    cdef Py_ssize_t first = start + need - 1
    if first > n - 1:
        first = n - 1
    for p in range(first, -1, -1):
        if dist[p] < thresh:
            run += 1
        else:
            run = 0
        if p <= start and run >= need:
            return p
    return -1


def scan_left(const double[::1] dist, double thresh, Py_ssize_t need,
              Py_ssize_t start):
    """Largest position ``p <= start`` with ``dist[p .. p+need-1] < thresh``.

    Returns -1 if none exists in the array.
    """
    cdef Py_ssize_t res
    with nogil:
        res = _scan_left(dist, thresh, need, start)
    return res
