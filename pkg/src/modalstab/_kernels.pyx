# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

``char_det_batch`` evaluates the shooting determinant of the coupled
two-component eigenproblem for many shifted eigenvalue candidates;
``propagate`` iterates an exact one-step propagator.  Both have
reference twins in :mod:`modalstab._kernels_py`.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, ceil, log2, ldexp
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()

DEF TAYLOR_ORDER = 18


cdef inline void _matmul4(double[4][4] a, double[4][4] b, double[4][4] out) noexcept nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(4):
        for j in range(4):
            acc = 0.0
            for k in range(4):
                acc += a[i][k] * b[k][j]
            out[i][j] = acc


cdef double _shoot_det(double lam_bar, double r12, double r21) noexcept nogil:
    cdef double sigma = sqrt(fabs(lam_bar)) if fabs(lam_bar) > 1.0 else 1.0
    cdef double[4][4] m
    cdef double[4][4] e
    cdef double[4][4] tmp
    cdef double norm, rowsum, scale
    cdef int i, j, s, order

    for i in range(4):
        for j in range(4):
            m[i][j] = 0.0
    # balanced with diag(sigma, 1, sigma, 1)
    m[0][1] = sigma
    m[1][0] = lam_bar / sigma
    m[1][2] = -r12 / sigma
    m[2][3] = sigma
    m[3][0] = -0.5 * r21 / sigma
    m[3][2] = 0.5 * lam_bar / sigma

    norm = 0.0
    for j in range(4):
        rowsum = 0.0
        for i in range(4):
            rowsum += fabs(m[i][j])
        if rowsum > norm:
            norm = rowsum
    s = 0
    if norm > 0.5:
        s = <int>ceil(log2(norm / 0.5))
    scale = ldexp(1.0, -s)
    for i in range(4):
        for j in range(4):
            m[i][j] *= scale

    # Horner form of the truncated Taylor series
    for i in range(4):
        for j in range(4):
            e[i][j] = 1.0 if i == j else 0.0
    for order in range(TAYLOR_ORDER, 0, -1):
        _matmul4(m, e, tmp)
        for i in range(4):
            for j in range(4):
                e[i][j] = tmp[i][j] / order + (1.0 if i == j else 0.0)

    for order in range(s):
        _matmul4(e, e, tmp)
        for i in range(4):
            for j in range(4):
                e[i][j] = tmp[i][j]

    return e[0][0] * e[3][3] - e[0][3] * e[3][0]


def char_det_batch(double[::1] lam_bar, double r12, double r21):
    """Shooting determinant at each shifted eigenvalue candidate."""
    cdef Py_ssize_t i, n = lam_bar.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for i in range(n):
            res[i] = _shoot_det(lam_bar[i], r12, r21)
    return out


def propagate(double[:, ::1] step, double[::1] x0, Py_ssize_t nsteps):
    """Return the states ``x0, P x0, P^2 x0, ...`` as rows."""
    cdef int n = <int>x0.shape[0]
    cdef int inc = 1
    cdef double one = 1.0, zero = 0.0
    cdef char trans = b'T'
    cdef Py_ssize_t k
    out = np.empty((nsteps + 1, n), dtype=np.float64)
    cdef double[:, ::1] states = out
    states[0, :] = x0
    if n == 0:
        return out
    with nogil:
        for k in range(nsteps):
            # row-major step matrix is the column-major transpose
            dgemv(&trans, &n, &n, &one, &step[0, 0], &n, &states[k, 0], &inc,
                  &zero, &states[k + 1, 0], &inc)
    return out
