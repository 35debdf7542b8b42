"""DAG representation, structural queries and the random graph generators.

Nodes are labelled ``1..p``. Everywhere a choice has to be made between
nodes, the smallest label wins.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, StructureError


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph on nodes ``1..p``.

    Parameters
    ----------
    p : int
        Number of nodes.
    edges : iterable of (u, v)
        Directed edges ``u -> v``.
    """

    p: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 0:
            raise InputError(f"node count must be a non-negative integer, got {self.p!r}")
        edge_list = [tuple(int(x) for x in e) for e in self.edges]
        edges = frozenset(edge_list)
        if len(edges) != len(edge_list):
            raise InputError("duplicate edges")
        for u, v in edges:
            if not (1 <= u <= self.p and 1 <= v <= self.p):
                raise InputError(f"edge ({u}, {v}) references a node outside 1..{self.p}")
            if u == v:
                raise StructureError(f"self-loop at node {u}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "edges", edges)
        topological_sort(self)

    @property
    def nodes(self) -> range:
        return range(1, self.p + 1)

    @cached_property
    def _parents(self) -> dict[int, frozenset]:
        out: dict[int, set] = {v: set() for v in self.nodes}
        for u, v in self.edges:
            out[v].add(u)
        return {v: frozenset(s) for v, s in out.items()}

    @cached_property
    def _children(self) -> dict[int, frozenset]:
        out: dict[int, set] = {v: set() for v in self.nodes}
        for u, v in self.edges:
            out[u].add(v)
        return {v: frozenset(s) for v, s in out.items()}

    def check_node(self, v) -> int:
        if isinstance(v, bool) or int(v) != v or not 1 <= int(v) <= self.p:
            raise InputError(f"unknown node label {v!r} (graph has nodes 1..{self.p})")
        return int(v)

    def in_degree(self, v) -> int:
        return len(self._parents[self.check_node(v)])

    def max_in_degree(self) -> int:
        return max((len(s) for s in self._parents.values()), default=0)


def _reach(adjacency, v) -> frozenset:
    seen: set = set()
    stack = list(adjacency[v])
    while stack:
        w = stack.pop()
        if w not in seen:
            seen.add(w)
            stack.extend(adjacency[w])
    return frozenset(seen)


def parents(dag: Dag, v) -> frozenset:
    return dag._parents[dag.check_node(v)]


def children(dag: Dag, v) -> frozenset:
    return dag._children[dag.check_node(v)]


def ancestors(dag: Dag, v) -> frozenset:
    """Nodes with a directed path into ``v`` (``v`` itself excluded)."""
    return _reach(dag._parents, dag.check_node(v))


def descendants(dag: Dag, v) -> frozenset:
    """Nodes reachable from ``v`` by a directed path (``v`` itself excluded)."""
    return _reach(dag._children, dag.check_node(v))


def topological_sort(dag: Dag) -> tuple:
    """Kahn's algorithm, always emitting the smallest available label."""
    indeg = {v: 0 for v in range(1, dag.p + 1)}
    out: dict[int, list] = {v: [] for v in indeg}
    for u, v in dag.edges:
        indeg[v] += 1
        out[u].append(v)
    heap = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in out[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    if len(order) != dag.p:
        stuck = sorted(v for v, d in indeg.items() if d > 0)
        raise StructureError(f"graph has a directed cycle through nodes {stuck}")
    return tuple(order)


def _check_permutation(p: int, ordering: Sequence[int]) -> None:
    if sorted(ordering) != list(range(1, p + 1)):
        raise InputError(f"ordering {tuple(ordering)} is not a permutation of 1..{p}")


def is_consistent_ordering(dag: Dag, ordering: Sequence[int]) -> bool:
    """True iff every edge points forward in ``ordering``."""
    _check_permutation(dag.p, ordering)
    pos = {v: i for i, v in enumerate(ordering)}
    return all(pos[u] < pos[v] for u, v in dag.edges)


def has_unique_ordering(dag: Dag) -> bool:
    """A DAG has exactly one topological order iff consecutive nodes of it are adjacent."""
    order = topological_sort(dag)
    return all((a, b) in dag.edges for a, b in zip(order, order[1:]))


@dataclass(frozen=True)
class WeightedDag:
    """A DAG together with its coefficient matrix.

    ``B[v-1, u-1]`` is the direct effect of ``u`` on ``v``; it is nonzero
    exactly on the edge set.
    """

    dag: Dag
    B: np.ndarray

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        p = self.dag.p
        if B.shape != (p, p):
            raise InputError(f"coefficient matrix has shape {B.shape}, expected {(p, p)}")
        support = {(u + 1, v + 1) for v, u in zip(*np.nonzero(B))}
        if support != set(self.dag.edges):
            raise InputError("support of B does not match the edge set")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)

    @property
    def p(self) -> int:
        return self.dag.p

    def weight(self, u, v) -> float:
        return float(self.B[v - 1, u - 1])

    @classmethod
    def from_edges(cls, p: int, weighted_edges: Iterable[tuple]) -> "WeightedDag":
        """Build from ``(u, v, weight)`` triples."""
        weighted_edges = list(weighted_edges)
        B = np.zeros((p, p))
        for u, v, w in weighted_edges:
            if w == 0:
                raise InputError(f"edge ({u}, {v}) has zero weight")
            if not (1 <= u <= p and 1 <= v <= p):
                raise InputError(f"edge ({u}, {v}) references a node outside 1..{p}")
            B[v - 1, u - 1] = w
        dag = Dag(p, frozenset((int(u), int(v)) for u, v, _ in weighted_edges))
        return cls(dag, B)

    def to_dict(self) -> dict:
        edges = [[u, v, self.weight(u, v)] for u, v in sorted(self.dag.edges)]
        return {"p": self.p, "edges": edges}

    @classmethod
    def from_dict(cls, obj: dict) -> "WeightedDag":
        try:
            p = int(obj["p"])
            edges = [(int(u), int(v), float(w)) for u, v, w in obj["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed graph object: {exc}") from exc
        return cls.from_edges(p, edges)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _signed_uniform(rng, low, high) -> float:
    mag = rng.uniform(low, high)
    return float(mag if rng.random() < 0.5 else -mag)


def random_dag(p: int, J: int, seed=None) -> WeightedDag:
    """Random DAG with a backbone chain and bounded in-degree.

    For every ``v >= 2`` the in-degree ``d_v`` is uniform on
    ``1..min(v-1, J)``. The edge ``(v-1, v)`` is always present with weight
    uniform on ``(-1, -.5) U (.5, 1)``; the other ``d_v - 1`` parents are
    drawn without replacement from ``1..v-2`` with weight ``+-1/5``.

    The generator is numpy's PCG64 (``np.random.default_rng(seed)``); the
    draws per node are, in order: ``d_v``, backbone magnitude, backbone
    sign, extra parents, then one sign per extra parent.
    """
    if p < 2:
        raise InputError(f"random_dag needs p >= 2, got {p}")
    if J < 1:
        raise InputError(f"random_dag needs J >= 1, got {J}")
    rng = _rng(seed)
    edges = []
    for v in range(2, p + 1):
        d = int(rng.integers(1, min(v - 1, J) + 1))
        edges.append((v - 1, v, _signed_uniform(rng, 0.5, 1.0)))
        if d > 1:
            extra = rng.choice(v - 2, size=d - 1, replace=False) + 1
            for u in sorted(int(x) for x in extra):
                edges.append((u, v, 0.2 if rng.random() < 0.5 else -0.2))
    return WeightedDag.from_edges(p, edges)


def hub_dag(p: int, n_hubs: int = 3, seed=None) -> WeightedDag:
    """Backbone chain plus hubs ``1..n_hubs`` feeding every other node.

    Backbone weights are uniform on ``(-1, -.65) U (.65, 1)``. Each non-hub
    node ``v`` gets an edge of weight ``+-1/5`` from a uniformly chosen hub;
    when that hub is ``v - 1`` the edge coincides with the backbone and the
    backbone weight is kept.
    """
    if n_hubs < 1:
        raise InputError(f"need at least one hub, got {n_hubs}")
    if n_hubs >= p:
        raise InputError(f"hub count {n_hubs} must be smaller than p={p}")
    rng = _rng(seed)
    weights = {}
    for v in range(2, p + 1):
        weights[(v - 1, v)] = _signed_uniform(rng, 0.65, 1.0)
    for v in range(n_hubs + 1, p + 1):
        hub = int(rng.integers(1, n_hubs + 1))
        sign = 0.2 if rng.random() < 0.5 else -0.2
        weights.setdefault((hub, v), sign)
    return WeightedDag.from_edges(p, [(u, v, w) for (u, v), w in sorted(weights.items())])
