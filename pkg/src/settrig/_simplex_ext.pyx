# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tableau pivoting. Mirrors ``_simplex_py`` operation for operation."""

cimport cython

cdef int OPTIMAL = 0
cdef int UNBOUNDED = 1
cdef int ITERATION_LIMIT = 2


cdef void _pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t nrow = T.shape[0], ncol = T.shape[1]
    cdef Py_ssize_t i, k
    cdef double p = T[r, j]
    cdef double f
    for k in range(ncol):
        T[r, k] = T[r, k] / p
    for i in range(nrow):
        if i == r:
            continue
        f = T[i, j]
        if f != 0.0:
            for k in range(ncol):
                T[i, k] = T[i, k] - f * T[r, k]
    for i in range(nrow):
        T[i, j] = 0.0
    T[r, j] = 1.0


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t j):
    _pivot(T, r, j)


cdef int _iterate(double[:, ::1] T, long[::1] basis, Py_ssize_t n_enter,
                  double tol, Py_ssize_t max_iter, Py_ssize_t* pivots) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t last = T.shape[1] - 1
    cdef Py_ssize_t it, i, j, r
    cdef double ratio, rmin, cutoff
    cdef long best
    for it in range(max_iter):
        pivots[0] = it
        j = -1
        for i in range(n_enter):
            if T[m, i] < -tol:
                j = i
                break
        if j < 0:
            return OPTIMAL
        rmin = 0.0
        r = -1
        for i in range(m):
            if T[i, j] > tol:
                ratio = T[i, last] / T[i, j]
                if r < 0 or ratio < rmin:
                    rmin = ratio
                    r = i
        if r < 0:
            return UNBOUNDED
        cutoff = rmin + tol * (rmin if rmin > 1.0 else (-rmin if rmin < -1.0 else 1.0))
        best = -1
        for i in range(m):
            if T[i, j] > tol:
                ratio = T[i, last] / T[i, j]
                if ratio <= cutoff and (best < 0 or basis[i] < best):
                    best = basis[i]
                    r = i
        _pivot(T, r, j)
        basis[r] = j
        for i in range(m):
            if T[i, last] < 0.0 and T[i, last] > -tol:
                T[i, last] = 0.0
    pivots[0] = max_iter
    return ITERATION_LIMIT


def iterate(double[:, ::1] T, long[::1] basis, Py_ssize_t n_enter,
            double tol, Py_ssize_t max_iter):
    """Run Bland's rule on ``T`` in place; returns ``(status, pivots)``."""
    cdef Py_ssize_t pivots = 0
    cdef int status
    with nogil:
        status = _iterate(T, basis, n_enter, tol, max_iter, &pivots)
    return status, pivots
