"""Linear SEMs: error laws, simulation and exact population quantities.

Observations follow ``Y = (I - B)^{-1} eps`` with independent, centred
errors. Everything in :class:`PopulationOracle` is computed exactly from the
coefficient matrix and the error moments; no sampling is involved.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InputError, NumericalError, StructureError
from .graph import WeightedDag, ancestors, descendants

SAMPLERS = ("uniform", "gaussian", "custom")

#: |pi_vu.C| at or below this counts as zero in oracle-level audits
FAITHFULNESS_TOL = 1e-9


def double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def gaussian_moment(var: float, k: int) -> float:
    """``E(Z^k)`` for ``Z ~ N(0, var)``."""
    if k % 2:
        return 0.0
    return double_factorial(k - 1) * var ** (k // 2)


def gaussian_offset_moments(var: float, eta: float, K: int) -> tuple:
    """Moments ``1..K`` that are Gaussian except for an offset ``eta`` at order ``K``."""
    if var <= 0:
        raise InputError(f"variance must be positive, got {var}")
    if K <= 2:
        raise InputError(f"offset order must exceed 2, got {K}")
    out = [gaussian_moment(var, k) for k in range(1, K + 1)]
    out[K - 1] += eta
    return tuple(out)


@dataclass(frozen=True)
class ErrorLaw:
    """Distribution of one error term.

    ``moments[k - 1]`` holds ``E(eps^k)``. ``uniform`` and ``gaussian`` laws
    can be sampled; ``custom`` laws carry moments only.
    """

    sampler: str
    var: float
    moments: tuple

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise InputError(f"unknown sampler {self.sampler!r}; expected one of {SAMPLERS}")
        m = tuple(float(x) for x in self.moments)
        object.__setattr__(self, "moments", m)
        object.__setattr__(self, "var", float(self.var))
        if len(m) < 2:
            raise InputError("an error law needs at least its first two moments")
        if abs(m[0]) > 1e-12:
            raise InputError(f"errors must be centred, got mean {m[0]}")
        if not m[1] > 0:
            raise InputError(f"error variance must be positive, got {m[1]}")
        if not math.isclose(m[1], self.var, rel_tol=1e-12):
            raise InputError(f"var={self.var} disagrees with second moment {m[1]}")

    @property
    def order(self) -> int:
        return len(self.moments)

    def moment(self, k: int) -> float:
        if k == 0:
            return 1.0
        if k > self.order:
            raise InputError(f"error moment of order {k} requested but only {self.order} available")
        return self.moments[k - 1]

    def offset(self, K: int) -> float:
        """Departure of the K-th moment from the Gaussian with the same variance."""
        return self.moment(K) - gaussian_moment(self.var, K)

    def is_gaussian_below(self, K: int, tol: float = 1e-12) -> bool:
        return all(
            abs(self.moment(k) - gaussian_moment(self.var, k)) <= tol * max(1.0, self.var ** (k / 2))
            for k in range(1, K)
        )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sampler == "uniform":
            a = math.sqrt(3.0 * self.var)
            return rng.uniform(-a, a, size)
        if self.sampler == "gaussian":
            return rng.normal(0.0, math.sqrt(self.var), size)
        raise InputError("custom-moment error laws cannot be sampled")

    @classmethod
    def uniform(cls, var: float, order: int = 8) -> "ErrorLaw":
        a = math.sqrt(3.0 * var)
        moms = [0.0 if k % 2 else a**k / (k + 1) for k in range(1, order + 1)]
        moms[1] = float(var)
        return cls("uniform", var, tuple(moms))

    @classmethod
    def gaussian(cls, var: float, order: int = 8) -> "ErrorLaw":
        return cls("gaussian", var, tuple(gaussian_moment(var, k) for k in range(1, order + 1)))

    @classmethod
    def gaussian_offset(cls, var: float, eta: float, K: int) -> "ErrorLaw":
        return cls("custom", var, gaussian_offset_moments(var, eta, K))

    def to_dict(self) -> dict:
        return {"var": self.var, "sampler": self.sampler, "moments": list(self.moments)}

    @classmethod
    def from_dict(cls, obj: dict) -> "ErrorLaw":
        try:
            sampler = obj.get("sampler", "custom")
            var = float(obj["var"])
            moments = obj.get("moments")
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InputError(f"malformed error law: {exc}") from exc
        if moments is None:
            if sampler == "uniform":
                return cls.uniform(var)
            if sampler == "gaussian":
                return cls.gaussian(var)
            raise InputError("custom error laws must list their moments")
        return cls(sampler, var, tuple(moments))


@dataclass(frozen=True)
class ErrorSpec:
    """Per-node error laws, node ``v`` at position ``v - 1``."""

    laws: tuple

    def __post_init__(self):
        laws = tuple(self.laws)
        if not all(isinstance(law, ErrorLaw) for law in laws):
            raise InputError("ErrorSpec entries must be ErrorLaw instances")
        object.__setattr__(self, "laws", laws)

    def __len__(self):
        return len(self.laws)

    def __getitem__(self, v) -> ErrorLaw:
        return self.laws[v - 1]

    @property
    def variances(self) -> np.ndarray:
        return np.array([law.var for law in self.laws])

    @property
    def max_order(self) -> int:
        return min(law.order for law in self.laws) if self.laws else 0

    def offsets(self, K: int) -> np.ndarray:
        return np.array([law.offset(K) for law in self.laws])

    def all_gaussian(self, K: int, tol: float = 1e-12) -> bool:
        """True when every law matches some Gaussian up to order ``K``."""
        return all(law.is_gaussian_below(K + 1, tol) for law in self.laws)

    @classmethod
    def uniform(cls, variances: Sequence[float], order: int = 8) -> "ErrorSpec":
        return cls(tuple(ErrorLaw.uniform(v, order) for v in variances))

    @classmethod
    def gaussian(cls, variances: Sequence[float], order: int = 8) -> "ErrorSpec":
        return cls(tuple(ErrorLaw.gaussian(v, order) for v in variances))

    @classmethod
    def gaussian_offset(cls, variances: Sequence[float], etas: Sequence[float], K: int) -> "ErrorSpec":
        if len(variances) != len(etas):
            raise InputError("need one offset per variance")
        return cls(tuple(ErrorLaw.gaussian_offset(v, e, K) for v, e in zip(variances, etas)))

    @classmethod
    def scaled_uniform(cls, p: int, seed=None, low: float = 0.8, high: float = 1.0, order: int = 8) -> "ErrorSpec":
        """``sigma_v ~ unif(low, high)``, ``eps_v ~ sigma_v * unif(-sqrt 3, sqrt 3)``."""
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        sigmas = rng.uniform(low, high, p)
        return cls.uniform(sigmas**2, order)

    @classmethod
    def random_gaussian_offset(cls, p: int, K: int, seed=None) -> "ErrorSpec":
        """Generic offset moments: ``sigma_v ~ unif(.8, 1)``, ``|eta_v| ~ unif(.5, 2)`` with random sign."""
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        sigmas = rng.uniform(0.8, 1.0, p)
        etas = rng.uniform(0.5, 2.0, p) * rng.choice([-1.0, 1.0], p)
        return cls.gaussian_offset(sigmas**2, etas, K)

    def to_list(self) -> list:
        return [law.to_dict() for law in self.laws]

    @classmethod
    def from_list(cls, items) -> "ErrorSpec":
        if not isinstance(items, list):
            raise InputError("errors must be a list of error-law objects")
        return cls(tuple(ErrorLaw.from_dict(x) for x in items))


@dataclass(frozen=True)
class Sem:
    wdag: WeightedDag
    errors: ErrorSpec

    def __post_init__(self):
        if len(self.errors) != self.wdag.p:
            raise InputError(f"{len(self.errors)} error laws for a {self.wdag.p}-node graph")

    @property
    def p(self) -> int:
        return self.wdag.p

    def to_dict(self) -> dict:
        return {"graph": self.wdag.to_dict(), "errors": self.errors.to_list()}

    @classmethod
    def from_dict(cls, obj: dict) -> "Sem":
        if not isinstance(obj, dict) or "graph" not in obj or "errors" not in obj:
            raise InputError("SEM object needs 'graph' and 'errors' keys")
        return cls(WeightedDag.from_dict(obj["graph"]), ErrorSpec.from_list(obj["errors"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Sem":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid SEM JSON: {exc}") from exc
        return cls.from_dict(obj)


@dataclass(frozen=True)
class Dataset:
    """An ``n x p`` observation matrix with column labels."""

    values: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        X = np.array(self.values, dtype=float)
        if X.ndim != 2:
            raise InputError(f"dataset must be two-dimensional, got shape {X.shape}")
        if X.shape[0] < 1:
            raise InputError("dataset has no rows")
        if not np.all(np.isfinite(X)):
            raise InputError("dataset contains missing or non-finite values")
        labels = tuple(self.labels) or tuple(f"Y{j}" for j in range(1, X.shape[1] + 1))
        if len(labels) != X.shape[1]:
            raise InputError(f"{len(labels)} labels for {X.shape[1]} columns")
        X.setflags(write=False)
        object.__setattr__(self, "values", X)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


# --------------------------------------------------------------------------
# population quantities


def _support_order(B: np.ndarray):
    """Topological order of the support of ``B``, or None if it has a cycle."""
    p = B.shape[0]
    indeg = (B != 0).sum(axis=1)
    ready = [v for v in range(p) if indeg[v] == 0]
    order = []
    while ready:
        u = ready.pop()
        order.append(u)
        for v in np.flatnonzero(B[:, u]):
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(int(v))
    return order if len(order) == p else None


def total_effects(B) -> np.ndarray:
    """``Pi = (I - B)^{-1}``; ``Pi[v-1, u-1]`` is the total effect of u on v.

    Acyclic supports are solved row by row in topological order, so entries
    outside the ancestor relation are exact zeros.
    """
    B = np.asarray(B, dtype=float)
    p = B.shape[0]
    order = _support_order(B)
    if order is not None:
        Pi = np.eye(p)
        for v in order:
            pa = np.flatnonzero(B[v])
            if pa.size:
                Pi[v] += B[v, pa] @ Pi[pa]
        return Pi
    A = np.eye(p) - B
    if p and np.linalg.cond(A) > 1e12:
        raise StructureError("I - B is singular; the coefficient matrix is not recursive")
    try:
        return np.linalg.solve(A, np.eye(p))
    except np.linalg.LinAlgError as exc:
        raise StructureError("I - B is singular; the coefficient matrix is not recursive") from exc


def population_covariance(sem: Sem) -> np.ndarray:
    """``Sigma = Pi diag(sigma^2) Pi^T``; see :attr:`PopulationOracle.lambda_min`."""
    Pi = total_effects(sem.wdag.B)
    Sigma = (Pi * sem.errors.variances) @ Pi.T
    Sigma = (Sigma + Sigma.T) / 2
    if Sigma.size and np.linalg.eigvalsh(Sigma)[0] <= 0:
        raise NumericalError("population covariance is not positive definite")
    return Sigma


def _as_index(C) -> np.ndarray:
    return np.asarray(sorted(int(c) for c in C), dtype=np.intp) - 1


def population_regression(Sigma, v: int, C) -> np.ndarray:
    """``beta_vC = Sigma_CC^{-1} Sigma_Cv`` (ordered by sorted label)."""
    C = sorted(int(c) for c in C)
    if v in C:
        raise InputError(f"response {v} is among the regressors {C}")
    if not C:
        return np.zeros(0)
    Sigma = np.asarray(Sigma)
    idx = _as_index(C)
    S = Sigma[np.ix_(idx, idx)]
    if np.linalg.cond(S) > 1e12:
        raise NumericalError(f"Sigma_CC singular for C={tuple(C)}", v=v, C=tuple(C))
    return np.linalg.solve(S, Sigma[idx, v - 1])


class PopulationOracle:
    """Exact second-order quantities of a SEM: ``Pi``, ``Sigma``, regressions."""

    def __init__(self, sem: Sem):
        self.sem = sem
        self.pi = total_effects(sem.wdag.B)
        self.sigma = population_covariance(sem)
        self.lambda_min = float(np.linalg.eigvalsh(self.sigma)[0]) if sem.p else math.inf
        self.pi.setflags(write=False)
        self.sigma.setflags(write=False)

    @property
    def p(self) -> int:
        return self.sem.p

    @property
    def dag(self):
        return self.sem.wdag.dag

    def _check(self, *nodes):
        for v in nodes:
            self.dag.check_node(v)

    def regression(self, v: int, C) -> np.ndarray:
        self._check(v, *C)
        return population_regression(self.sigma, v, C)

    def residual_coefficients(self, v: int, C) -> np.ndarray:
        """Error loadings of ``Y_{v.C}``: entry ``k-1`` is ``pi_{vk.C}``."""
        C = sorted(C)
        beta = self.regression(v, C)
        a = self.pi[v - 1].copy()
        for c, b in zip(C, beta):
            a -= b * self.pi[c - 1]
        return a

    def max_moment(self, K: int) -> float:
        """Largest absolute population moment of ``Y`` up to degree ``K``."""
        best = 1.0
        for d in range(1, K + 1):
            for combo in itertools.combinations_with_replacement(range(1, self.p + 1), d):
                H = sorted(set(combo))
                alpha = [combo.count(h) for h in H]
                best = max(best, abs(population_moment(self, H, alpha)))
        return best


def residual_total_effect(oracle: PopulationOracle, v: int, u: int, C) -> float:
    """``pi_vu.C = pi_vu - sum_c beta_vc.C pi_cu``."""
    if u == v:
        raise InputError("u and v must differ")
    if u in C:
        raise InputError(f"u={u} must not be in C")
    return float(oracle.residual_coefficients(v, C)[u - 1])


def _admissible_sets(dag, v, u, J):
    """Sets ``C`` inside ``V \\ (de(v) U {u, v})``, ``|C| <= J``, by size then lexicographically."""
    pool = sorted(set(dag.nodes) - descendants(dag, v) - {u, v})
    top = len(pool) if J is None else min(J, len(pool))
    for size in range(top + 1):
        yield from itertools.combinations(pool, size)


def faithfulness_violations(oracle: PopulationOracle, J=None, tol: float = FAITHFULNESS_TOL) -> list:
    """Every ``(u, v, C)`` with an edge ``u -> v`` and ``|pi_vu.C| <= tol``."""
    out = []
    dag = oracle.dag
    for u, v in sorted(dag.edges):
        for C in _admissible_sets(dag, v, u, J):
            if abs(residual_total_effect(oracle, v, u, C)) <= tol:
                out.append((u, v, C))
    return out


def is_parentally_faithful(oracle: PopulationOracle, J=None, tol: float = FAITHFULNESS_TOL):
    """Return ``(True, None)`` or ``(False, (u, v, C))`` for the first violation.

    Edges are scanned in sorted order and adjustment sets by size, then
    lexicographically. ``J=None`` places no bound on ``|C|``.
    """
    dag = oracle.dag
    for u, v in sorted(dag.edges):
        for C in _admissible_sets(dag, v, u, J):
            if abs(residual_total_effect(oracle, v, u, C)) <= tol:
                return False, (u, v, C)
    return True, None


# --------------------------------------------------------------------------
# moments of linear forms in independent errors


def _error_moment_table(errors: ErrorSpec, degree: int) -> np.ndarray:
    if errors.max_order < degree:
        raise InputError(f"error moments up to order {degree} needed, only {errors.max_order} available")
    return np.array([[law.moment(k) for k in range(degree + 1)] for law in errors.laws])


def error_cumulants(errors: ErrorSpec, order: int) -> np.ndarray:
    """Cumulants ``kappa_0..kappa_order`` of every error (row ``v - 1``)."""
    m = _error_moment_table(errors, order)
    kappa = np.zeros_like(m)
    for n in range(1, order + 1):
        kappa[:, n] = m[:, n] - sum(math.comb(n - 1, i - 1) * kappa[:, i] * m[:, n - i] for i in range(1, n))
    return kappa


def bivariate_moments(a, b, errors: ErrorSpec, smax: int, tmax: int, max_degree: int | None = None) -> np.ndarray:
    """``M[s, t] = E((a . eps)^s (b . eps)^t)`` for ``s <= smax``, ``t <= tmax``.

    Errors are folded in one at a time with the binomial convolution
    ``M'[s,t] = sum C(s,i) C(t,j) a_k^i b_k^j E(eps_k^{i+j}) M[s-i, t-j]``.
    Cells with ``s + t > max_degree`` are left as NaN, so laws with only
    ``max_degree`` known moments can still be used.
    """
    degree = smax + tmax if max_degree is None else max_degree
    m = _error_moment_table(errors, degree)
    M = np.zeros((smax + 1, tmax + 1))
    M[0, 0] = 1.0
    for k in range(len(errors)):
        ak, bk = a[k], b[k]
        if ak == 0 and bk == 0:
            continue
        new = np.zeros_like(M)
        for s in range(smax + 1):
            for t in range(tmax + 1):
                if s + t > degree:
                    continue
                acc = 0.0
                for i in range(s + 1):
                    for j in range(t + 1):
                        mk = m[k, i + j]
                        if mk == 0.0:
                            continue
                        acc += math.comb(s, i) * math.comb(t, j) * ak**i * bk**j * mk * M[s - i, t - j]
                new[s, t] = acc
        M = new
    M[np.add.outer(np.arange(smax + 1), np.arange(tmax + 1)) > degree] = np.nan
    return M


def population_moment(oracle: PopulationOracle, H, alpha, errors: ErrorSpec | None = None) -> float:
    """Exact ``E(prod_h Y_h^{alpha_h})`` by folding in one error at a time."""
    errors = errors or oracle.sem.errors
    H = [int(h) for h in H]
    alpha = [int(x) for x in alpha]
    if len(H) != len(alpha):
        raise InputError("H and alpha must have the same length")
    merged: dict = {}
    for h, a in zip(H, alpha):
        oracle.dag.check_node(h)
        if a < 0:
            raise InputError("exponents must be non-negative")
        if a:
            merged[h] = merged.get(h, 0) + a
    if not merged:
        return 1.0
    hs = sorted(merged)
    target = tuple(merged[h] for h in hs)
    degree = sum(target)
    m = _error_moment_table(errors, degree)
    L = oracle.pi[np.array(hs) - 1]  # loadings, one row per factor
    shapes = [range(t + 1) for t in target]
    states = list(itertools.product(*shapes))
    M = {s: 0.0 for s in states}
    M[tuple(0 for _ in target)] = 1.0
    for k in range(len(errors)):
        col = L[:, k]
        if not np.any(col):
            continue
        new = {}
        for g in states:
            acc = 0.0
            for d in itertools.product(*(range(x + 1) for x in g)):
                mk = m[k, sum(d)]
                if mk == 0.0:
                    continue
                w = mk * M[tuple(x - y for x, y in zip(g, d))]
                if w == 0.0:
                    continue
                for gi, di, ci in zip(g, d, col):
                    w *= math.comb(gi, di) * ci**di
                acc += w
            new[g] = acc
        M = new
    return float(M[target])


def population_tau(oracle: PopulationOracle, v: int, u: int, C, K: int = 4, errors: ErrorSpec | None = None) -> float:
    """Exact population value of the direction statistic.

    ``Y_{v.C}`` and ``Y_u`` are written as linear forms in the independent
    errors and their joint moments are expanded exactly, so confounding is
    handled without special cases.
    """
    errors = errors or oracle.sem.errors
    if K <= 2:
        raise InputError(f"K must exceed 2, got {K}")
    C = tuple(sorted(C))
    if u == v or u in C:
        raise InputError("need u != v and u not in C")
    oracle._check(v, u, *C)
    a = oracle.residual_coefficients(v, C)
    b = oracle.pi[u - 1]
    M = bivariate_moments(a, b, errors, K, 1, max_degree=K)
    return float(M[K - 1, 1] * M[2, 0] - M[K, 0] * M[1, 1])


def population_tau_no_confounding(pi: float, var_v: float, var_u: float, eta_v: float, eta_u: float, K: int) -> float:
    """Closed form ``pi (pi^{K-2} eta_u var_v - eta_v var_u)`` for unconfounded pairs.

    ``var_v, eta_v`` describe the aggregate residual component and
    ``var_u, eta_u`` the aggregate component shared with ``Y_u``; see
    :func:`no_confounding_aggregates`.
    """
    if K <= 2:
        raise InputError(f"K must exceed 2, got {K}")
    return pi * (pi ** (K - 2) * eta_u * var_v - eta_v * var_u)


class Aggregates(NamedTuple):
    pi: float
    var_v: float
    var_u: float
    eta_v: float
    eta_u: float


def no_confounding_aggregates(oracle: PopulationOracle, v: int, u: int, C, K: int = 4,
                              errors: ErrorSpec | None = None, tol: float = 1e-10):
    """Aggregate variances/offsets for the closed form, or None under confounding.

    Errors feeding ``Y_u`` split into those entering ``Y_{v.C}`` only through
    ``Y_u`` (loading ``pi_vu.C * pi_uz``) and the rest; the pair is
    unconfounded when the rest is empty. Requires every law to be Gaussian
    below order ``K``.
    """
    errors = errors or oracle.sem.errors
    for law in errors.laws:
        if not law.is_gaussian_below(K):
            raise InputError("closed form needs error moments that are Gaussian below order K")
    C = tuple(sorted(C))
    a = oracle.residual_coefficients(v, C)
    b = oracle.pi[u - 1]
    pi = float(a[u - 1])
    An_u = ancestors(oracle.dag, u) | {u}
    shared, rest = [], []
    for z in sorted(An_u):
        (shared if abs(a[z - 1] - pi * b[z - 1]) <= tol else rest).append(z - 1)
    if rest:
        return None
    own = [k for k in range(oracle.p) if k + 1 not in An_u]
    var = errors.variances
    eta = errors.offsets(K)
    own_idx = np.array(own, dtype=np.intp)
    sh_idx = np.array(shared, dtype=np.intp)
    return Aggregates(
        pi=pi,
        var_v=float(np.sum(a[own_idx] ** 2 * var[own_idx])),
        var_u=float(np.sum(b[sh_idx] ** 2 * var[sh_idx])),
        eta_v=float(np.sum(a[own_idx] ** K * eta[own_idx])),
        eta_u=float(np.sum(b[sh_idx] ** K * eta[sh_idx])),
    )


def oracle_gamma(oracle: PopulationOracle, J: int, K: int = 4, errors: ErrorSpec | None = None) -> float:
    """Smallest ``|tau_{v.C->u}|`` over edges ``u -> v`` and admissible ``|C| <= J``."""
    best = math.inf
    for u, v in sorted(oracle.dag.edges):
        for C in _admissible_sets(oracle.dag, v, u, J):
            best = min(best, abs(population_tau(oracle, v, u, C, K, errors)))
    return best


def oracle_alpha_ratio(oracle: PopulationOracle, J: int, K: int = 4, errors: ErrorSpec | None = None) -> float:
    """Ratio of the weakest parent signal to the strongest non-parent ancestor signal.

    Each signal is ``min_C |tau_{v.C->a}|`` over ``C`` avoiding ``de(v)``
    with ``|C| <= J``. A value above one means some pruning multiplier
    separates parents from other ancestors. Returns ``inf`` when no node has
    a non-parent ancestor.
    """
    dag = oracle.dag
    num, den = math.inf, 0.0
    for v in dag.nodes:
        pa = dag._parents[v]
        for a in sorted(ancestors(dag, v)):
            sig = min(abs(population_tau(oracle, v, a, C, K, errors)) for C in _admissible_sets(dag, v, a, J))
            if a in pa:
                num = min(num, sig)
            else:
                den = max(den, sig)
    return math.inf if den == 0 else num / den


# --------------------------------------------------------------------------
# simulation

_BLOCK = 1 << 16


def simulate(sem: Sem, n: int, seed=None) -> Dataset:
    """Draw ``n`` i.i.d. observations.

    Rows are generated in blocks of 65536; block ``i`` uses the child
    ``SeedSequence(seed, spawn_key=(i,))``, so the output depends only on
    ``(sem, n, seed)``. Within a block errors are drawn node by node and
    ``Y`` is solved in topological order.
    """
    if n < 1:
        raise InputError(f"need n >= 1, got {n}")
    for law in sem.errors.laws:
        if law.sampler == "custom":
            raise InputError("cannot simulate from custom-moment error laws")
    from .graph import topological_sort

    order = [v - 1 for v in topological_sort(sem.wdag.dag)]
    B = sem.wdag.B
    pa = {v: np.nonzero(B[v])[0] for v in order}
    entropy = seed if seed is not None else np.random.SeedSequence().entropy
    Y = np.empty((n, sem.p))
    for i, start in enumerate(range(0, n, _BLOCK)):
        rows = min(_BLOCK, n - start)
        rng = np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(i,)))
        eps = np.column_stack([law.sample(rng, rows) for law in sem.errors.laws]) if sem.p else np.empty((rows, 0))
        block = Y[start:start + rows]
        for v in order:
            col = eps[:, v].copy()
            for u in pa[v]:
                col += B[v, u] * block[:, u]
            block[:, v] = col
    return Dataset(Y, tuple(f"Y{j}" for j in range(1, sem.p + 1)))
