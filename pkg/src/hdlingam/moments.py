"""Sample moments, regressions and the plug-in direction statistic.

:class:`MomentCache` works on data; :class:`OracleMomentCache` answers the
same questions from exact population moments of a known SEM, which lets the
search algorithm run at zero sampling error.
"""
from __future__ import annotations

import itertools
import math
from collections import OrderedDict

import numpy as np

from . import kernels as _default_kernels
from .errors import InputError, NumericalError
from .sem import (
    Dataset,
    PopulationOracle,
    Sem,
    bivariate_moments,
    error_cumulants,
    population_moment,
    population_regression,
)

#: Gram submatrices with a larger condition number are treated as singular
COND_LIMIT = 1e12


def _subset_key(C) -> tuple:
    return tuple(sorted(int(c) for c in C))


def condition_number(S) -> float:
    """2-norm condition number of a symmetric positive semi-definite matrix (inf if singular)."""
    if S.shape[0] == 1:
        return 1.0 if S[0, 0] > 0 else math.inf
    w = np.linalg.eigvalsh(S)
    return w[-1] / w[0] if w[0] > 0 else math.inf


def _check_K(K: int) -> int:
    if int(K) != K or K <= 2:
        raise InputError(f"moment order K must be an integer > 2, got {K}")
    return int(K)


def tau_from_moments(high: float, m2: float, mK: float, low: float) -> float:
    """``E(r^{K-1} y) E(r^2) - E(r^K) E(r y)`` from its four ingredients."""
    return high * m2 - mK * low


def expanded_residual_moment(moment_fn, v: int, C, beta, u: int, s: int, r: int) -> float:
    """``E((Y_v - sum_c beta_c Y_c)^s Y_u^r)`` by multinomial expansion.

    ``moment_fn(H, alpha)`` supplies raw moments; nothing about the residual
    itself is computed directly. Used to check that the statistic computed
    from residual columns matches the one assembled from raw moments.
    """
    C = _subset_key(C)
    beta = np.asarray(beta, dtype=float)
    terms = [(v, 1.0)] + [(c, -b) for c, b in zip(C, beta)]
    total = 0.0
    for combo in itertools.combinations_with_replacement(range(len(terms)), s):
        counts = [combo.count(i) for i in range(len(terms))]
        coef = math.factorial(s)
        for k, (_, w) in zip(counts, terms):
            coef = coef / math.factorial(k) * w**k
        exps: dict = {}
        for k, (h, _) in zip(counts, terms):
            if k:
                exps[h] = exps.get(h, 0) + k
        if r:
            exps[u] = exps.get(u, 0) + r
        H = sorted(exps)
        total += coef * moment_fn(H, [exps[h] for h in H])
    return total


def plugin_tau(moment_fn, beta, v: int, u: int, C, K: int) -> float:
    """Direction statistic assembled from raw moments and regression coefficients."""
    m = lambda s, r: expanded_residual_moment(moment_fn, v, C, beta, u, s, r)  # noqa: E731
    return tau_from_moments(m(K - 1, 1), m(2, 0), m(K, 0), m(1, 1))


class _CacheBase:
    """Bookkeeping shared by the sample and population caches."""

    p: int
    K: int

    def _node(self, v) -> int:
        if type(v) is int and 0 < v <= self.p:
            return v
        if isinstance(v, (bool, np.bool_)) or int(v) != v or not 1 <= int(v) <= self.p:
            raise InputError(f"unknown node label {v!r} (data has nodes 1..{self.p})")
        return int(v)

    def _pair(self, v, C):
        v = self._node(v)
        C = _subset_key(self._node(c) for c in C)
        if len(set(C)) != len(C):
            raise InputError(f"adjustment set {C} has repeated nodes")
        if v in C:
            raise InputError(f"response {v} is among the regressors {C}")
        return v, C

    def _targets(self, v, C, us):
        us = [self._node(u) for u in us]
        bad = [u for u in us if u == v or u in C]
        if bad:
            raise InputError(f"targets {bad} overlap the response {v} or the set {C}")
        return us

    def tau_hat(self, v, u, C=(), K=None) -> float:
        """Direction statistic for ``v.C -> u``."""
        return float(self.taus(v, C, [u], K)[0])

    def abs_taus(self, v, C, us, K=None) -> np.ndarray:
        return np.abs(self.taus(v, C, us, K))


class MomentCache(_CacheBase):
    """Memoized sample moments of a dataset.

    Columns are mean-centred once on construction (and scaled to unit
    variance when ``standardize``); all later moments are uncentred.

    Parameters
    ----------
    data : Dataset or array_like, shape (n, p)
    K : int
        Default moment order for :meth:`tau_hat`.
    standardize : bool
        Scale columns to unit sample variance after centring.
    memoize : bool
        Keep raw moments, regressions and residual columns. Turning it off
        never changes a returned value.
    kernels : module, optional
        Kernel backend; defaults to :mod:`hdlingam.kernels`.
    residual_budget : int
        Approximate bytes of residual columns to keep (least recently used
        are dropped first).
    """

    def __init__(self, data, K: int = 4, standardize: bool = False, memoize: bool = True,
                 kernels=None, residual_budget: int = 256 << 20):
        if isinstance(data, Dataset):
            values = data.values
        else:
            values = Dataset(np.asarray(data, dtype=float)).values
        n, p = values.shape
        self.n, self.p = n, p
        self.K = _check_K(K)
        self.kernels = kernels or _default_kernels
        self.memoize = memoize
        X = np.ascontiguousarray((values - values.mean(axis=0)).T)
        if standardize:
            sd = np.sqrt((X * X).mean(axis=1))
            if np.any(sd == 0):
                raise NumericalError("cannot standardize a constant column")
            X = np.ascontiguousarray(X / sd[:, None])
        X.setflags(write=False)
        self.X = X
        self._gram = None
        self._moments: dict = {}
        self._beta: dict = {}
        self._resid: OrderedDict = OrderedDict()
        self._resid_cap = max(1, residual_budget // max(1, 8 * n))
        self.stats = {"residuals": 0, "tau": 0}

    @property
    def gram(self) -> np.ndarray:
        if self._gram is None:
            G = self.kernels.gram(self.X) if self.p else np.zeros((0, 0))
            G.setflags(write=False)
            self._gram = G
        return self._gram

    def sample_moment(self, H, alpha) -> float:
        """``(1/n) sum_i prod_h Y_{hi}^{alpha_h}``; repeated ``h`` are merged."""
        H = list(H)
        alpha = list(alpha)
        if len(H) != len(alpha):
            raise InputError("H and alpha must have the same length")
        merged: dict = {}
        for h, a in zip(H, alpha):
            h = self._node(h)
            if int(a) != a or a < 0:
                raise InputError(f"exponents must be non-negative integers, got {a!r}")
            if a:
                merged[h] = merged.get(h, 0) + int(a)
        if sum(merged.values()) > 2 * self.K:
            raise InputError(f"total degree {sum(merged.values())} exceeds 2K = {2 * self.K}")
        if not merged:
            return 1.0
        key = tuple(sorted(merged.items()))
        if key in self._moments:
            return self._moments[key]
        idx = [h - 1 for h, _ in key]
        val = float(self.kernels.moment(self.X, idx, [a for _, a in key]))
        if self.memoize:
            self._moments[key] = val
        return val

    def fit_regression(self, v, C) -> np.ndarray:
        """Least-squares coefficients of ``Y_v`` on ``Y_C`` (sorted ``C``)."""
        v, C = self._pair(v, C)
        key = (v, C)
        if key in self._beta:
            return self._beta[key]
        if not C:
            beta = np.zeros(0)
        else:
            idx = np.array(C) - 1
            S = self.gram[np.ix_(idx, idx)]
            if condition_number(S) > COND_LIMIT:
                raise NumericalError(f"sample Gram matrix of C={C} is singular or ill-conditioned",
                                     v=v, C=C)
            beta = np.linalg.solve(S, self.gram[idx, v - 1])
        beta.setflags(write=False)
        if self.memoize:
            self._beta[key] = beta
        return beta

    def residual(self, v, C) -> tuple:
        """``(r, mean(r^2), mean(r^K))`` for the residual ``r = Y_v - Y_C beta_vC``."""
        v, C = self._pair(v, C)
        key = (v, C)
        hit = self._resid.get(key)
        if hit is not None:
            self._resid.move_to_end(key)
            return hit
        beta = self.fit_regression(v, C)
        r = self.kernels.residual(self.X, v - 1, [c - 1 for c in C], beta)
        r.setflags(write=False)
        m2, mK = self.kernels.residual_moments(r, self.K)
        entry = (r, float(m2), float(mK))
        self.stats["residuals"] += 1
        if self.memoize:
            self._resid[key] = entry
            if len(self._resid) > self._resid_cap:
                self._resid.popitem(last=False)
        return entry

    def residual_cross_moment(self, v, C, u, s: int, r: int) -> float:
        """``(1/n) sum_i Yhat_{vi.C}^s Y_{ui}^r`` with ``s + r <= K``."""
        v, C = self._pair(v, C)
        u = self._targets(v, C, [u])[0]
        if s < 0 or r < 0 or s + r > self.K:
            raise InputError(f"need 0 <= s, r and s + r <= K={self.K}, got s={s}, r={r}")
        if s == 0 and r == 0:
            return 1.0
        res = self.residual(v, C)[0]
        return float(self.kernels.cross_moment(res, self.X[u - 1], s, r))

    def taus(self, v, C, us, K=None) -> np.ndarray:
        """Direction statistics ``v.C -> u`` for every ``u`` in ``us``."""
        K = self.K if K is None else _check_K(K)
        v, C = self._pair(v, C)
        us = self._targets(v, C, us)
        if not us:
            return np.zeros(0)
        r, m2, mK = self.residual(v, C)
        if K != self.K:
            m2, mK = self.kernels.residual_moments(r, K)
        high, low = self.kernels.cross_moments(r, self.X, [u - 1 for u in us], K)
        self.stats["tau"] += len(us)
        return tau_from_moments(np.asarray(high), m2, mK, np.asarray(low))


class OracleMomentCache(_CacheBase):
    """Population counterpart of :class:`MomentCache` for a known SEM.

    Statistics are exact: regression coefficients come from the population
    covariance and residual moments from the error moments.
    """

    def __init__(self, sem: Sem | PopulationOracle, K: int = 4, memoize: bool = True):
        self.oracle = sem if isinstance(sem, PopulationOracle) else PopulationOracle(sem)
        self.p = self.oracle.p
        self.n = math.inf
        self.K = _check_K(K)
        self.memoize = memoize
        self._coef: dict = {}
        self._moments: dict = {}
        self.stats = {"residuals": 0, "tau": 0}

    @property
    def gram(self) -> np.ndarray:
        return self.oracle.sigma

    def sample_moment(self, H, alpha) -> float:
        key = (tuple(H), tuple(alpha))
        if key not in self._moments:
            val = population_moment(self.oracle, [self._node(h) for h in H], alpha)
            if not self.memoize:
                return val
            self._moments[key] = val
        return self._moments[key]

    def fit_regression(self, v, C) -> np.ndarray:
        v, C = self._pair(v, C)
        return population_regression(self.oracle.sigma, v, C)

    def _loadings(self, v, C):
        key = (v, C)
        if key in self._coef:
            return self._coef[key]
        a = self.oracle.residual_coefficients(v, C)
        self.stats["residuals"] += 1
        if self.memoize:
            self._coef[key] = a
        return a

    def residual_cross_moment(self, v, C, u, s: int, r: int) -> float:
        v, C = self._pair(v, C)
        u = self._targets(v, C, [u])[0]
        if s < 0 or r < 0 or s + r > self.K:
            raise InputError(f"need 0 <= s, r and s + r <= K={self.K}, got s={s}, r={r}")
        M = bivariate_moments(self._loadings(v, C), self.oracle.pi[u - 1], self.oracle.sem.errors, s, r)
        return float(M[s, r])

    def taus(self, v, C, us, K=None) -> np.ndarray:
        """Exact statistics via joint cumulants of the two linear forms.

        Cumulants of sums of independent terms add, so with loadings ``a``
        (residual) and ``b`` (target) the joint cumulants are
        ``kappa_{i,0} = sum_k a_k^i kappa_i(eps_k)`` and
        ``kappa_{i,1} = sum_k a_k^i b_k kappa_{i+1}(eps_k)``; moments then
        follow from the usual moment-cumulant recursion.
        """
        K = self.K if K is None else _check_K(K)
        v, C = self._pair(v, C)
        us = self._targets(v, C, us)
        if not us:
            return np.zeros(0)
        a = self._loadings(v, C)
        kappa = self._cumulants(K)  # (p, K + 1), column i = i-th cumulant
        apow = a[:, None] ** np.arange(K + 1)  # (p, K + 1)
        k0 = (apow * kappa).sum(axis=0)  # kappa_{i,0}
        B = self.oracle.pi[np.array(us) - 1]  # (m, p)
        k1 = B @ (apow[:, :K] * kappa[:, 1:])  # (m, K): kappa_{i,1}, i = 0..K-1
        m0 = np.zeros(K + 1)
        m0[0] = 1.0
        for s in range(1, K + 1):
            m0[s] = sum(math.comb(s - 1, i - 1) * k0[i] * m0[s - i] for i in range(1, s + 1))

        def m1(s):
            return sum(math.comb(s, i) * k1[:, i] * m0[s - i] for i in range(s + 1))

        self.stats["tau"] += len(us)
        return tau_from_moments(m1(K - 1), m0[2], m0[K], m1(1))

    def _cumulants(self, K):
        key = ("cumulants", K)
        if key not in self._coef:
            self._coef[key] = error_cumulants(self.oracle.sem.errors, K)
        return self._coef[key]
