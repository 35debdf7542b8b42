"""Reference (numpy) implementation of the moment kernels.

All functions take the data as a ``(p, n)`` C-contiguous float64 array, one
variable per row. Sums use numpy's pairwise reduction; products and powers
are formed by repeated multiplication in the same order as the compiled
kernels, so both backends agree up to the final summation rounding.
"""
import numpy as np


def _ipow(x, k):
    out = np.ones_like(x)
    for _ in range(k):
        out = out * x
    return out


def gram(X):
    """Uncentered second-moment matrix ``X X^T / n``."""
    p, n = X.shape
    out = np.empty((p, p))
    for i in range(p):
        row = (X[i:] * X[i]).sum(axis=1) / n
        out[i, i:] = row
        out[i:, i] = row
    return out


def moment(X, idx, powers):
    n = X.shape[1]
    prod = np.ones(n)
    for h, k in zip(idx, powers):
        prod *= _ipow(X[h], int(k))
    return float(prod.sum() / n)


def residual(X, v, C, beta):
    r = X[v].copy()
    for c, b in zip(C, beta):
        r -= b * X[c]
    return r


def residual_moments(r, K):
    """Return ``(mean(r**2), mean(r**K))``."""
    n = r.shape[0]
    return float((r * r).sum() / n), float(_ipow(r, K).sum() / n)


def cross_moment(r, x, s, q):
    n = r.shape[0]
    return float((_ipow(r, s) * _ipow(x, q)).sum() / n)


def cross_moments(r, X, us, K):
    """Return ``(mean(r**(K-1) * X[u]), mean(r * X[u]))`` for every ``u``."""
    n = r.shape[0]
    rows = X[np.asarray(us, dtype=np.intp)]
    high = (rows * _ipow(r, K - 1)).sum(axis=1) / n
    low = (rows * r).sum(axis=1) / n
    return high, low
