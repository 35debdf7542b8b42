"""Causal ordering search with candidate-parent pruning and a rising cutoff.

Each step picks, among the unplaced nodes, the one whose aggregate
statistic is smallest (the most root-like), then raises the pruning cutoff
to ``alpha`` times that statistic. A node ``v`` only adjusts for its
*candidate parents*: placed nodes ``p`` whose score
``min_C |tau_{v.C -> p}|`` (over small adjustment sets ``C``) exceeds the
cutoff. Once every node is placed, the candidates that survive the final
cutoff become the estimated parents.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .aggregate import MaxMinState, subsets_up_to, t1_minmax_arg, t2_update
from .errors import InputError, NumericalError
from .moments import MomentCache

_STAT_ALIASES = {"maxmin": "maxmin", "t2": "maxmin", "minmax": "minmax", "t1": "minmax"}
PRUNE_SCOPES = ("candidates", "all")


@dataclass(frozen=True)
class EstimateConfig:
    """Tuning of :func:`estimate_graph`.

    Attributes
    ----------
    J : int
        Bound on the in-degree and on adjustment-set size.
    K : int
        Moment order of the direction statistic.
    alpha : float
        Cutoff multiplier; larger prunes harder.
    stat : {"maxmin", "minmax"}
        Aggregate used to rank roots (``"T2"``/``"T1"`` are accepted too).
    g0 : float
        Initial cutoff.
    fixed_cutoff : float, optional
        Use this cutoff at every step instead of the rising one.
    prune_scope : {"candidates", "all"}
        Where pruning adjustment sets come from: the node's current
        candidates plus the newest root (default, cheap), or every placed
        node.
    standardize : bool
        Scale columns to unit variance before estimation.
    threads : int
        Worker threads for per-node work within a step.
    """

    J: int = 3
    K: int = 4
    alpha: float = 0.8
    stat: str = "maxmin"
    g0: float = 0.0
    fixed_cutoff: float | None = None
    prune_scope: str = "candidates"
    standardize: bool = False
    threads: int = 1

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 0:
            raise InputError(f"J must be a non-negative integer, got {self.J}")
        if int(self.K) != self.K or self.K <= 2:
            raise InputError(f"K must be an integer > 2, got {self.K}")
        if not self.alpha >= 0 or not math.isfinite(self.alpha):
            raise InputError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not self.g0 >= 0:
            raise InputError(f"initial cutoff must be >= 0, got {self.g0}")
        if self.fixed_cutoff is not None and not self.fixed_cutoff >= 0:
            raise InputError(f"fixed cutoff must be >= 0, got {self.fixed_cutoff}")
        stat = _STAT_ALIASES.get(str(self.stat).lower())
        if stat is None:
            raise InputError(f"unknown statistic {self.stat!r}; use 'maxmin' or 'minmax'")
        if self.prune_scope not in PRUNE_SCOPES:
            raise InputError(f"prune_scope must be one of {PRUNE_SCOPES}")
        if int(self.threads) != self.threads or self.threads < 1:
            raise InputError(f"threads must be a positive integer, got {self.threads}")
        object.__setattr__(self, "stat", stat)
        object.__setattr__(self, "J", int(self.J))
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "threads", int(self.threads))


@dataclass
class GraphEstimate:
    """Estimated ordering and parent sets.

    ``diagnostics`` holds per-step lists ``g`` (cutoff after the step),
    ``root_stats`` (statistic of the selected root) and ``candidates``
    (candidate-set size of the root), plus ``cap_bound``: nodes whose
    surviving candidates exceeded ``J`` and were truncated.
    """

    ordering: tuple
    parents: dict
    diagnostics: dict = field(default_factory=dict)
    labels: tuple = ()

    @property
    def p(self) -> int:
        return len(self.ordering)

    @property
    def edges(self) -> frozenset:
        return frozenset((u, v) for v, pa in self.parents.items() for u in pa)

    def to_dict(self) -> dict:
        out = {
            "ordering": list(self.ordering),
            "parents": {str(v): sorted(self.parents[v]) for v in sorted(self.parents)},
            "diagnostics": self.diagnostics,
        }
        if self.labels:
            out["labels"] = list(self.labels)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, obj: dict) -> "GraphEstimate":
        try:
            parents = {int(v): tuple(int(u) for u in pa) for v, pa in obj["parents"].items()}
            return cls(tuple(int(v) for v in obj["ordering"]), parents,
                       obj.get("diagnostics", {}), tuple(obj.get("labels", ())))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InputError(f"malformed estimate: {exc}") from exc


def update_cutoff(g_prev: float, alpha: float, root_stat: float) -> float:
    """Rising cutoff ``max(g_prev, alpha * root_stat)``."""
    if g_prev < 0:
        raise InputError(f"cutoff must be non-negative, got {g_prev}")
    return max(g_prev, alpha * root_stat)


def prune_scores(cache, v: int, placed, J: int, K: int | None = None) -> dict:
    """``p -> (min_C |tau_{v.C -> p}|, argmin C)`` with ``C`` over subsets of ``placed - {p}``, ``|C| <= J``."""
    placed = sorted(placed)
    if v in placed:
        raise InputError(f"node {v} is already placed")
    scores: dict = {}
    for C in subsets_up_to(placed, J):
        targets = [p for p in placed if p not in C]
        if not targets:
            continue
        vals = cache.abs_taus(v, C, targets, K)
        for p, val in zip(targets, vals):
            _offer(scores, p, float(val), C)
    return scores


def _offer(scores, p, val, C):
    best = scores.get(p)
    if best is None or val < best[0] or (val == best[0] and (len(C), C) < (len(best[1]), best[1])):
        scores[p] = (val, C)


def prune_candidates(cache, v: int, placed, J: int, K: int | None, g: float) -> frozenset:
    """Placed nodes whose pruning score exceeds the cutoff ``g``."""
    return frozenset(p for p, (val, _) in prune_scores(cache, v, placed, J, K).items() if val > g)


def _select_parents(scores: dict, survivors, J: int):
    """Keep the ``J`` largest scores among ``survivors`` (ties to the smaller label)."""
    ranked = sorted(survivors, key=lambda p: (-scores[p][0], p))
    return tuple(sorted(ranked[:J])), len(ranked) > J


def final_parents(cache, ordering, J: int, K: int | None, g: float) -> tuple:
    """Prune every node against all of its predecessors at cutoff ``g``, capped at ``J``.

    Returns ``(parents, capped)`` where ``capped`` lists nodes whose
    surviving set had to be truncated.
    """
    parents, capped = {}, []
    for i, v in enumerate(ordering):
        scores = prune_scores(cache, v, ordering[:i], J, K)
        keep, cut = _select_parents(scores, [p for p, (s, _) in scores.items() if s > g], J)
        parents[v] = keep
        if cut:
            capped.append(v)
    return parents, capped


class _NodeState:
    """Per-node bookkeeping for an unplaced node."""

    __slots__ = ("v", "pool", "scores", "cands", "mm")

    def __init__(self, v):
        self.v = v
        self.pool = frozenset()
        self.scores: dict = {}
        self.cands = frozenset()
        self.mm: MaxMinState | None = None


def _as_cache(data, config):
    if hasattr(data, "taus") and hasattr(data, "p"):
        return data
    return MomentCache(data, K=config.K, standardize=config.standardize)


def _refresh_scores(cache, st: _NodeState, root, pool, J, K):
    """Bring ``st.scores`` up to date for a new pool that contains ``root``."""
    old = st.scores
    todo: dict = {}  # adjustment set -> targets to evaluate
    new_scores: dict = {}
    for p in sorted(pool):
        rest = pool - {p}
        prev = old.get(p)
        if prev is not None and set(prev[1]) <= rest:
            new_scores[p] = prev
            sets = [C for C in subsets_up_to(rest, J) if root in C]
        else:
            sets = subsets_up_to(rest, J)
        for C in sets:
            todo.setdefault(C, []).append(p)
    for C, targets in todo.items():
        vals = cache.abs_taus(st.v, C, targets, K)
        for p, val in zip(targets, vals):
            _offer(new_scores, p, float(val), C)
    st.scores = new_scores
    st.pool = pool


def _step_node(cache, st, root, remaining, placed, g, config):
    """Update one node's candidates and return its aggregate statistic."""
    J, K = config.J, config.K
    C_cur = ()
    try:
        if root is not None:
            pool = (st.cands | {root}) if config.prune_scope == "candidates" else frozenset(placed)
            _refresh_scores(cache, st, root, pool, J, K)
            st.cands = frozenset(p for p in pool if st.scores[p][0] > g)
        C_cur = tuple(sorted(st.cands))
        targets = sorted(remaining - {st.v})
        if not targets:
            st.mm = None
            return 0.0
        if config.stat == "minmax":
            return t1_minmax_arg(cache, st.v, st.cands, targets, J, K)[0]
        if st.mm is None:
            st.mm = MaxMinState.fresh(cache, st.v, st.cands, targets, J, K)
        else:
            st.mm = t2_update(st.mm, root, cache, J, K, candidates=st.cands, targets=targets)
        return st.mm.value()
    except NumericalError as exc:
        C = exc.C if exc.C is not None else C_cur
        raise NumericalError(f"{exc} (node {st.v}, adjustment set {C})", v=st.v, C=C) from exc


def estimate_graph(data, config: EstimateConfig | None = None, *, observer=None, **overrides) -> GraphEstimate:
    """Estimate a causal ordering and parent sets.

    Parameters
    ----------
    data : Dataset, array_like (n, p), MomentCache or OracleMomentCache
        Observations, or a prepared cache (an oracle cache runs the search
        on exact population moments).
    config : EstimateConfig, optional
    observer : callable, optional
        Called as ``observer(step, v, candidates, targets, statistic, state)``
        after each node is scored; ``state`` is the node's
        :class:`MaxMinState` (None for min-max and for the last node). For
        inspection only.
    **overrides
        Field overrides applied on top of ``config``.

    Raises
    ------
    NumericalError
        When a regression fails; ``step``, ``v`` and ``C`` identify it.
    """
    config = config or EstimateConfig()
    if overrides:
        config = EstimateConfig(**{**asdict(config), **overrides})
    labels = tuple(getattr(data, "labels", ()))
    cache = _as_cache(data, config)
    p = cache.p
    if p and getattr(cache, "n", math.inf) < 2:
        raise InputError(f"need at least 2 observations, got {cache.n}")

    remaining = set(range(1, p + 1))
    states = {v: _NodeState(v) for v in remaining}
    placed: list = []
    frozen: dict = {}
    g = config.g0 if config.fixed_cutoff is None else config.fixed_cutoff
    diag = {"g": [], "root_stats": [], "candidates": [], "stat": config.stat, "prune_scope": config.prune_scope}
    root = None
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        for z in range(1, p + 1):
            order = sorted(remaining)

            def work(v, root=root, g=g, z=z):
                st = states[v]
                stat = _step_node(cache, st, root, remaining, placed, g, config)
                if observer is not None:
                    observer(z, v, st.cands, frozenset(remaining - {v}), stat, st.mm)
                return stat

            try:
                stats = list(pool.map(work, order)) if pool else [work(v) for v in order]
            except NumericalError as exc:
                raise NumericalError(f"step {z}: {exc}", v=exc.v, C=exc.C, step=z) from exc
            i = int(np.argmin(stats))
            root, T_r = order[i], float(stats[i])
            if config.fixed_cutoff is None:
                g = update_cutoff(g, config.alpha, T_r)
            st = states.pop(root)
            frozen[root] = (st.scores, st.cands)
            placed.append(root)
            remaining.discard(root)
            diag["g"].append(g)
            diag["root_stats"].append(T_r)
            diag["candidates"].append(len(st.cands))
    finally:
        if pool:
            pool.shutdown()

    parents, capped = {}, []
    for v in placed:
        scores, cands = frozen[v]
        keep, cut = _select_parents(scores, [c for c in cands if scores[c][0] > g], config.J)
        parents[v] = keep
        if cut:
            capped.append(v)
    diag["cap_bound"] = capped
    diag["final_g"] = g
    return GraphEstimate(tuple(placed), parents, diag, labels)


__all__ = [
    "EstimateConfig",
    "GraphEstimate",
    "estimate_graph",
    "final_parents",
    "prune_candidates",
    "prune_scores",
    "update_cutoff",
]
