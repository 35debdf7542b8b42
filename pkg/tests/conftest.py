import itertools

import numpy as np
import pytest

from hdlingam.graph import Dag, WeightedDag, descendants, random_dag
from hdlingam.sem import ErrorSpec, PopulationOracle, Sem

ACCEPTANCE: dict = {}


def record_acceptance(number: int, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def chain(p=3, w=1.0) -> WeightedDag:
    return WeightedDag.from_edges(p, [(v, v + 1, w) for v in range(1, p)])


def sparse_dag(p: int, J: int, rng, density: float = 0.5) -> WeightedDag:
    """Random DAG on a random hidden order, in-degree <= J, weights +-unif(.3, 1).

    Unlike the chain-backbone generator this produces disconnected pieces,
    several roots and non-identity orderings.
    """
    perm = rng.permutation(p) + 1
    edges = []
    for i in range(1, p):
        v = int(perm[i])
        earlier = [int(u) for u in perm[:i]]
        k = min(J, rng.binomial(len(earlier), density))
        for u in rng.choice(earlier, size=k, replace=False):
            edges.append((int(u), v, float(rng.choice([-1, 1]) * rng.uniform(0.3, 1.0))))
    return WeightedDag.from_edges(p, edges)


def random_sem(seed: int, p_range=(2, 6), J_max=3, errors="offset", K=4) -> Sem:
    """Reproducible random SEM mixing both graph families."""
    rng = np.random.default_rng(seed)
    p = int(rng.integers(p_range[0], p_range[1] + 1))
    J = int(rng.integers(1, J_max + 1))
    wdag = random_dag(p, J, rng) if rng.random() < 0.5 else sparse_dag(p, J, rng)
    if errors == "offset":
        spec = ErrorSpec.random_gaussian_offset(p, K, rng)
    elif errors == "gaussian":
        spec = ErrorSpec.gaussian(rng.uniform(0.5, 1.5, p), order=2 * K)
    else:
        spec = ErrorSpec.scaled_uniform(p, rng)
    return Sem(wdag, spec)


def triples(dag: Dag, max_size=None):
    """Every ``(v, u, C)`` with ``u != v``, ``u`` not in ``C``, ``C`` avoiding ``de(v)``."""
    for v in dag.nodes:
        de = descendants(dag, v)
        for u in dag.nodes:
            if u == v:
                continue
            pool = [c for c in dag.nodes if c not in de and c not in (u, v)]
            top = len(pool) if max_size is None else min(max_size, len(pool))
            for k in range(top + 1):
                for C in itertools.combinations(pool, k):
                    yield v, u, C


@pytest.fixture
def single_edge_sem():
    """1 -> 2 with weight 1, uniform errors of variance 1 and 0.5."""
    return Sem(WeightedDag.from_edges(2, [(1, 2, 1.0)]), ErrorSpec.uniform([1.0, 0.5]))


@pytest.fixture
def single_edge_oracle(single_edge_sem):
    return PopulationOracle(single_edge_sem)
