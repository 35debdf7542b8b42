"""Adjustment-subset families and the min-max / max-min aggregates.

Both aggregates summarise a table of ``|tau_{v.C -> u}|`` over adjustment
sets ``C`` (rows) and targets ``u`` (columns): min-max takes the best row's
worst entry, max-min the worst column's best entry.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, StateError


def enumerate_subsets(ground, J: int) -> list:
    """Size-``J`` subsets of ``ground`` in lexicographic order, or ``[ground]`` if ``J`` exceeds its size.

    >>> enumerate_subsets({1, 2, 3}, 2)
    [(1, 2), (1, 3), (2, 3)]
    >>> enumerate_subsets({1}, 3)
    [(1,)]
    """
    if J < 0:
        raise InputError(f"subset size must be non-negative, got {J}")
    ground = sorted(ground)
    if J >= len(ground):
        return [tuple(ground)]
    return list(itertools.combinations(ground, J))


def subsets_up_to(ground, J: int) -> list:
    """All subsets of size ``<= J``, by size then lexicographically."""
    ground = sorted(ground)
    out = []
    for k in range(min(J, len(ground)) + 1):
        out.extend(itertools.combinations(ground, k))
    return out


def _validate(v, V1, V2):
    V1, V2 = set(V1), set(V2)
    if not V2:
        raise InputError("target set V2 must be non-empty")
    if v in V1 or v in V2:
        raise InputError(f"node {v} cannot be in its own adjustment or target set")
    if V1 & V2:
        raise InputError(f"adjustment and target sets overlap on {sorted(V1 & V2)}")
    return sorted(V1), sorted(V2)


def _table(cache, v, family, targets, K):
    return np.array([cache.abs_taus(v, C, targets, K) for C in family])


def t1_minmax(cache, v: int, V1, V2, J: int, K: int | None = None) -> float:
    """``min_C max_u |tau_{v.C -> u}|`` over ``C`` in ``enumerate_subsets(V1, J)``, ``u`` in ``V2``."""
    return t1_minmax_arg(cache, v, V1, V2, J, K)[0]


def t1_minmax_arg(cache, v, V1, V2, J, K=None):
    """As :func:`t1_minmax`, also returning the (lexicographically first) minimising ``C``."""
    V1, V2 = _validate(v, V1, V2)
    family = enumerate_subsets(V1, J)
    rows = _table(cache, v, family, V2, K).max(axis=1)
    i = int(np.argmin(rows))
    return float(rows[i]), family[i]


def t2_maxmin(cache, v: int, V1, V2, J: int, K: int | None = None) -> float:
    """``max_u min_C |tau_{v.C -> u}|``; never exceeds :func:`t1_minmax` on the same inputs."""
    V1, V2 = _validate(v, V1, V2)
    family = enumerate_subsets(V1, J)
    return float(_table(cache, v, family, V2, K).min(axis=0).max())


@dataclass
class MaxMinState:
    """Stored column minima for one node's max-min statistic.

    ``table[u] = (min_C |tau_{v.C -> u}|, argmin C)`` over the current
    family of adjustment sets drawn from ``candidates``.
    """

    v: int
    J: int
    K: int | None = None
    candidates: frozenset = frozenset()
    table: dict = field(default_factory=dict)

    @property
    def family(self) -> list:
        return enumerate_subsets(self.candidates, self.J)

    def value(self, targets=None) -> float:
        """Max over ``targets`` (default: all stored) of the stored minima."""
        keys = self.table if targets is None else targets
        vals = [self.table[u][0] for u in keys]
        if not vals:
            raise InputError("no targets to aggregate over")
        return float(max(vals))

    @classmethod
    def fresh(cls, cache, v, candidates, targets, J, K=None) -> "MaxMinState":
        """Full evaluation against ``candidates``."""
        state = cls(v, J, K, frozenset(candidates))
        state._fill(cache, sorted(targets), state.family)
        return state

    def _fill(self, cache, targets, family, keep=None):
        """Fold ``family`` into the minima of ``targets``; entries in ``keep`` start from their stored values."""
        if not targets or not family:
            return
        tab = _table(cache, self.v, family, targets, self.K)
        rows = tab.argmin(axis=0)  # first minimiser = lexicographically first
        for j, u in enumerate(targets):
            val, C = float(tab[rows[j], j]), family[rows[j]]
            best = self.table.get(u) if keep and u in keep else None
            if best is None or val < best[0] or (val == best[0] and C < best[1]):
                self.table[u] = (val, C)


def t2_update(state: MaxMinState, newly_ordered: int, cache, J: int, K: int | None = None,
              candidates=None, targets=None) -> MaxMinState:
    """Move ``state`` to a new candidate set after ``newly_ordered`` has been placed.

    Parameters
    ----------
    state : MaxMinState
        Valid for the previous candidate set; left untouched.
    newly_ordered : int
        The node just placed. It joins the candidates unless ``candidates``
        says otherwise and is dropped from the targets.
    candidates : iterable, optional
        New candidate set; must lie inside ``state.candidates | {newly_ordered}``.
        Defaults to exactly that union.
    targets : iterable, optional
        New target set; defaults to the stored targets minus ``newly_ordered``.

    Only adjustment sets that are new to the family are evaluated; a stored
    minimum is recomputed from scratch only when its minimiser has left the
    family. The result equals :meth:`MaxMinState.fresh` on the new sets.
    """
    if J != state.J:
        raise StateError(f"state was built for J={state.J}, update asked for J={J}")
    if newly_ordered in state.candidates:
        raise StateError(f"node {newly_ordered} is already a candidate for {state.v}")
    if newly_ordered == state.v:
        raise StateError(f"node {state.v} cannot be placed while its state is live")
    pool = state.candidates | {newly_ordered}
    new_cands = pool if candidates is None else frozenset(candidates)
    if not new_cands <= pool:
        raise StateError(f"candidates {sorted(new_cands - pool)} were never placed")
    old_targets = set(state.table) - {newly_ordered}
    new_targets = old_targets if targets is None else set(targets)
    if not new_targets <= old_targets:
        raise StateError(f"targets {sorted(new_targets - old_targets)} were not tracked")

    old_family = set(state.family)
    family = enumerate_subsets(new_cands, J)
    added = [C for C in family if C not in old_family]
    fam_set = set(family)
    out = MaxMinState(state.v, J, K if K is not None else state.K, new_cands)
    out.table = {u: state.table[u] for u in new_targets}
    stale = sorted(u for u in new_targets if out.table[u][1] not in fam_set)
    fresh = sorted(new_targets - set(stale))
    out._fill(cache, fresh, added, keep=set(fresh))
    for u in stale:
        del out.table[u]
    out._fill(cache, stale, family)
    return out
