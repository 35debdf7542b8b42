# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled moment kernels.

Same contracts as ``hdlingam._pykernels``. Every sum is accumulated with
Neumaier compensation in index order, so results are deterministic and do
not depend on how many target rows are requested in one call.
"""
import numpy as np

from libc.math cimport fabs


cdef inline void _acc(double* s, double* c, double x) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


cdef inline double _ipow(double x, int k) noexcept nogil:
    cdef double out = 1.0
    cdef int i
    for i in range(k):
        out = out * x
    return out


def gram(const double[:, ::1] X):
    cdef Py_ssize_t p = X.shape[0], n = X.shape[1], i, j, t
    cdef double s, c
    out = np.empty((p, p))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(p):
            for j in range(i, p):
                s = 0.0
                c = 0.0
                for t in range(n):
                    _acc(&s, &c, X[j, t] * X[i, t])
                o[i, j] = (s + c) / n
                o[j, i] = o[i, j]
    return out


def moment(const double[:, ::1] X, idx, powers):
    cdef const Py_ssize_t[::1] ix = np.ascontiguousarray(idx, dtype=np.intp)
    cdef const Py_ssize_t[::1] pw = np.ascontiguousarray(powers, dtype=np.intp)
    cdef Py_ssize_t n = X.shape[1], m = ix.shape[0], t, h
    cdef double s = 0.0, c = 0.0, prod
    with nogil:
        for t in range(n):
            prod = 1.0
            for h in range(m):
                prod = prod * _ipow(X[ix[h], t], <int>pw[h])
            _acc(&s, &c, prod)
    return (s + c) / n


def residual(const double[:, ::1] X, Py_ssize_t v, C, beta):
    cdef const Py_ssize_t[::1] cc = np.ascontiguousarray(C, dtype=np.intp)
    cdef const double[::1] bb = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[1], j, t, col
    cdef double b
    out = np.array(X[v], dtype=np.float64)
    cdef double[::1] r = out
    with nogil:
        for j in range(cc.shape[0]):
            col = cc[j]
            b = bb[j]
            for t in range(n):
                r[t] = r[t] - b * X[col, t]
    return out


def residual_moments(const double[::1] r, int K):
    cdef Py_ssize_t n = r.shape[0], t
    cdef double s2 = 0.0, c2 = 0.0, sk = 0.0, ck = 0.0, x
    with nogil:
        for t in range(n):
            x = r[t]
            _acc(&s2, &c2, x * x)
            _acc(&sk, &ck, _ipow(x, K))
    return (s2 + c2) / n, (sk + ck) / n


def cross_moment(const double[::1] r, const double[::1] x, int s, int q):
    cdef Py_ssize_t n = r.shape[0], t
    cdef double acc = 0.0, comp = 0.0
    with nogil:
        for t in range(n):
            _acc(&acc, &comp, _ipow(r[t], s) * _ipow(x[t], q))
    return (acc + comp) / n


def cross_moments(const double[::1] r, const double[:, ::1] X, us, int K):
    cdef const Py_ssize_t[::1] uu = np.ascontiguousarray(us, dtype=np.intp)
    cdef Py_ssize_t n = r.shape[0], m = uu.shape[0], j, t, row
    cdef double sh, ch, sl, cl, y
    high = np.empty(m)
    low = np.empty(m)
    cdef double[::1] hi = high
    cdef double[::1] lo = low
    rk = np.empty(n)
    cdef double[::1] rpow = rk
    with nogil:
        for t in range(n):
            rpow[t] = _ipow(r[t], K - 1)
        for j in range(m):
            row = uu[j]
            sh = 0.0
            ch = 0.0
            sl = 0.0
            cl = 0.0
            for t in range(n):
                y = X[row, t]
                _acc(&sh, &ch, y * rpow[t])
                _acc(&sl, &cl, y * r[t])
            hi[j] = (sh + ch) / n
            lo[j] = (sl + cl) / n
    return high, low
