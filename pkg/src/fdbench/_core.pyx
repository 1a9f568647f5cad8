# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: tiled pairwise kernel sums (BLAS-backed), Kendall
pair counts, and exhaustive permutation tail counts.

The interface mirrors fdbench.backend.pure; fdbench.backend selects this
module when it was built.
"""

from libc.math cimport exp, pow
from libc.stdlib cimport llabs

import numpy as np

from scipy.linalg.cython_blas cimport dgemm

KIND_RBF = 0
KIND_POLY = 1
KIND_RQ = 2

cdef enum:
    _RBF = 0
    _POLY = 1
    _RQ = 2

DEF TILE = 256


cdef void _dots(const double* x, const double* y, double* out,
                int nx, int ny, int d) noexcept nogil:
    # out (nx x ny, row-major) = x @ y.T. BLAS is column-major, so compute
    # out.T = y @ x.T through the transposed views of the same buffers.
    cdef char ta = b'T'
    cdef char tb = b'N'
    cdef int m = ny
    cdef int n = nx
    cdef int k = d
    cdef int lda = d
    cdef int ldb = d
    cdef int ldc = ny
    cdef double alpha = 1.0
    cdef double beta = 0.0
    dgemm(&ta, &tb, &m, &n, &k, &alpha, <double*> y, &lda, <double*> x, &ldb,
          &beta, out, &ldc)


cdef inline double _kernel_value(double g, double sqx, double sqy, int kind,
                                 double p0, double p1, double p2) noexcept nogil:
    cdef double sq
    cdef double v
    cdef int deg, t
    if kind == _POLY:
        deg = <int> p0
        v = 1.0
        for t in range(deg):
            v *= p1 * g + p2
        return v
    sq = sqx + sqy - 2.0 * g
    if sq < 0.0:
        sq = 0.0
    if kind == _RBF:
        return exp(-sq / (2.0 * p0 * p0))
    if p0 == 1.0:
        return 1.0 / (1.0 + sq / (2.0 * p1 * p1))
    return pow(1.0 + sq / (2.0 * p0 * p1 * p1), -p0)


cdef void _sq_norms(double[:, ::1] a, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(a.shape[0]):
        acc = 0.0
        for j in range(a.shape[1]):
            acc += a[i, j] * a[i, j]
        out[i] = acc


def pair_sum(double[:, ::1] x, double[:, ::1] y, int kind,
             double p0, double p1, double p2):
    """Sum of k(x_i, y_j) over all i, j."""
    cdef Py_ssize_t nx = x.shape[0]
    cdef Py_ssize_t ny = y.shape[0]
    cdef int d = <int> x.shape[1]
    cdef Py_ssize_t i0, i, j, b
    # Kahan-compensated accumulation: the sum must stay accurate enough
    # that the estimators match an exact-summation oracle to 1e-10
    # relative even under heavy cancellation.
    cdef double total = 0.0
    cdef double comp = 0.0
    cdef double term, t
    sqx_arr = np.empty(nx, dtype=np.float64)
    sqy_arr = np.empty(ny, dtype=np.float64)
    tile_arr = np.empty((TILE, ny), dtype=np.float64)
    cdef double[::1] sqx = sqx_arr
    cdef double[::1] sqy = sqy_arr
    cdef double[:, ::1] tile = tile_arr
    with nogil:
        _sq_norms(x, sqx)
        _sq_norms(y, sqy)
        for i0 in range(0, nx, TILE):
            b = nx - i0
            if b > TILE:
                b = TILE
            _dots(&x[i0, 0], &y[0, 0], &tile[0, 0], <int> b, <int> ny, d)
            for i in range(b):
                for j in range(ny):
                    term = _kernel_value(tile[i, j], sqx[i0 + i], sqy[j],
                                         kind, p0, p1, p2) - comp
                    t = total + term
                    comp = (t - total) - term
                    total = t
    return total


def gram(double[:, ::1] x, double[:, ::1] y, int kind,
         double p0, double p1, double p2):
    """Full kernel matrix k(x_i, y_j), shape (len(x), len(y))."""
    cdef Py_ssize_t nx = x.shape[0]
    cdef Py_ssize_t ny = y.shape[0]
    cdef int d = <int> x.shape[1]
    cdef Py_ssize_t i0, i, j, b
    out_arr = np.empty((nx, ny), dtype=np.float64)
    sqx_arr = np.empty(nx, dtype=np.float64)
    sqy_arr = np.empty(ny, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] sqx = sqx_arr
    cdef double[::1] sqy = sqy_arr
    with nogil:
        _sq_norms(x, sqx)
        _sq_norms(y, sqy)
        for i0 in range(0, nx, TILE):
            b = nx - i0
            if b > TILE:
                b = TILE
            _dots(&x[i0, 0], &y[0, 0], &out[i0, 0], <int> b, <int> ny, d)
            for i in range(b):
                for j in range(ny):
                    out[i0 + i, j] = _kernel_value(out[i0 + i, j], sqx[i0 + i],
                                                   sqy[j], kind, p0, p1, p2)
    return out_arr


def kendall_s(double[::1] x, double[::1] y):
    """Concordant and discordant pair counts over all i < j."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j
    cdef long long conc = 0
    cdef long long disc = 0
    cdef double dx, dy
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                dx = x[i] - x[j]
                dy = y[i] - y[j]
                if dx != 0.0 and dy != 0.0:
                    if (dx > 0.0) == (dy > 0.0):
                        conc += 1
                    else:
                        disc += 1
    return int(conc), int(disc)


def perm_tail_count(double[::1] x, double[::1] y, long long s_abs):
    """Count orderings of y (all n! of them, with multiplicity for tied
    values) whose concordant-minus-discordant statistic against x has
    absolute value >= s_abs. Feasible for n <= 12."""
    cdef Py_ssize_t n = x.shape[0]
    if n > 12:
        raise ValueError("exhaustive permutation count limited to n <= 12")
    sx_arr = np.zeros((n, n), dtype=np.int8)
    sy_arr = np.zeros((n, n), dtype=np.int8)
    perm_arr = np.arange(n, dtype=np.int64)
    ctr_arr = np.zeros(n, dtype=np.int64)
    cdef signed char[:, ::1] sx = sx_arr
    cdef signed char[:, ::1] sy = sy_arr
    cdef long long[::1] perm = perm_arr
    cdef long long[::1] ctr = ctr_arr
    cdef Py_ssize_t i, j
    cdef long long count = 0
    cdef long long s, tmp
    with nogil:
        for i in range(n):
            for j in range(n):
                sx[i, j] = (x[i] > x[j]) - (x[i] < x[j])
                sy[i, j] = (y[i] > y[j]) - (y[i] < y[j])
        # Heap's algorithm, iterative form: visits every permutation once.
        s = 0
        for i in range(n):
            for j in range(i + 1, n):
                s += sx[i, j] * sy[perm[i], perm[j]]
        if llabs(s) >= s_abs:
            count += 1
        i = 0
        while i < n:
            if ctr[i] < i:
                if i % 2 == 0:
                    tmp = perm[0]
                    perm[0] = perm[i]
                    perm[i] = tmp
                else:
                    tmp = perm[ctr[i]]
                    perm[ctr[i]] = perm[i]
                    perm[i] = tmp
                s = 0
                for j in range(n):
                    for tmp in range(j + 1, n):
                        s += sx[j, tmp] * sy[perm[j], perm[tmp]]
                if llabs(s) >= s_abs:
                    count += 1
                ctr[i] += 1
                i = 0
            else:
                ctr[i] = 0
                i += 1
    return int(count)
