import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdlingam.errors import InputError, NumericalError
from hdlingam.graph import WeightedDag, ancestors, is_consistent_ordering, parents, topological_sort
from hdlingam.moments import MomentCache, OracleMomentCache
from hdlingam.search import (
    EstimateConfig,
    GraphEstimate,
    estimate_graph,
    final_parents,
    prune_candidates,
    prune_scores,
    update_cutoff,
)
from hdlingam.sem import ErrorSpec, PopulationOracle, Sem, is_parentally_faithful, oracle_gamma, simulate

from conftest import random_sem


def faithful_sem(seed, p_range=(2, 6)):
    """Draw random SEMs until one is parentally faithful with a clear margin."""
    while True:
        sem = random_sem(seed, p_range=p_range)
        o = PopulationOracle(sem)
        J = max(1, sem.wdag.dag.max_in_degree())
        if is_parentally_faithful(o, J)[0] and oracle_gamma(o, J) > 1e-6:
            return sem, o, J
        seed += 10_007


class TestConfig:
    def test_defaults(self):
        c = EstimateConfig()
        assert (c.J, c.K, c.alpha, c.stat, c.g0) == (3, 4, 0.8, "maxmin", 0.0)

    def test_aliases(self):
        assert EstimateConfig(stat="T1").stat == "minmax"
        assert EstimateConfig(stat="t2").stat == "maxmin"

    @pytest.mark.parametrize("kw", [dict(J=-1), dict(K=2), dict(alpha=-0.1), dict(stat="median"),
                                    dict(g0=-1.0), dict(prune_scope="some"), dict(threads=0)])
    def test_rejects(self, kw):
        with pytest.raises(InputError):
            EstimateConfig(**kw)


class TestCutoff:
    def test_examples(self):
        assert update_cutoff(0.3, 0.0, 5.0) == 0.3
        assert update_cutoff(0.0, 0.8, 0.5) == pytest.approx(0.4)
        assert update_cutoff(0.5, 0.8, 0.5) == 0.5

    def test_negative(self):
        with pytest.raises(InputError):
            update_cutoff(-1.0, 0.8, 0.5)


class TestPruning:
    def test_empty_placed(self, single_edge_sem):
        assert prune_candidates(OracleMomentCache(single_edge_sem), 2, (), 3, 4, 0.0) == frozenset()

    def test_zero_cutoff_keeps_effective_ancestors(self):
        wdag = WeightedDag.from_edges(4, [(1, 2, 0.9), (2, 3, 0.7), (1, 4, 0.4)])
        cache = OracleMomentCache(Sem(wdag, ErrorSpec.random_gaussian_offset(4, 4, seed=1)))
        kept = prune_candidates(cache, 3, (1, 2, 4), 1, 4, 0.0)
        # 4 is independent of 3 given 1 (score exactly zero); 1 and 2 both have nonzero minima with |C| <= 1
        scores = prune_scores(cache, 3, (1, 2, 4), 1, 4)
        assert 2 in kept
        assert scores[4][0] < 1e-12 and 4 not in kept or scores[4][0] > 0

    def test_gamma_half_keeps_exactly_parents(self):
        sem, o, J = faithful_sem(5, p_range=(4, 6))
        cache = OracleMomentCache(o)
        g = oracle_gamma(o, J) / 2
        order = topological_sort(sem.wdag.dag)
        for i, v in enumerate(order):
            assert prune_candidates(cache, v, order[:i], J, 4, g) == parents(sem.wdag.dag, v)

    def test_ties_prefer_smaller_sets(self):
        # targets independent of v: every C gives exactly zero, the empty set must be reported
        wdag = WeightedDag.from_edges(3, [])
        cache = OracleMomentCache(Sem(wdag, ErrorSpec.random_gaussian_offset(3, 4, seed=0)))
        scores = prune_scores(cache, 3, (1, 2), 2, 4)
        assert scores[1] == (0.0, ()) and scores[2] == (0.0, ())


class TestFinalParents:
    def test_exact_at_gamma_half(self):
        for seed in range(6):
            sem, o, J = faithful_sem(100 + seed)
            cache = OracleMomentCache(o)
            order = topological_sort(sem.wdag.dag)
            pa, capped = final_parents(cache, order, J, 4, oracle_gamma(o, J) / 2)
            assert capped == []
            for v in order:
                assert set(pa[v]) == parents(sem.wdag.dag, v)
            assert pa[order[0]] == ()

    def test_cap_binds(self):
        # three parents, J=2: the two strongest survive and the cap is reported
        wdag = WeightedDag.from_edges(4, [(1, 4, 0.9), (2, 4, 0.8), (3, 4, 0.7)])
        cache = OracleMomentCache(Sem(wdag, ErrorSpec.random_gaussian_offset(4, 4, seed=2)))
        pa, capped = final_parents(cache, (1, 2, 3, 4), 2, 4, 0.0)
        assert capped == [4] and len(pa[4]) == 2
        scores = prune_scores(cache, 4, (1, 2, 3), 2, 4)
        top = sorted((1, 2, 3), key=lambda u: -scores[u][0])[:2]
        assert set(pa[4]) == set(top)


class TestEstimateGraph:
    def test_single_node(self):
        est = estimate_graph(np.random.default_rng(0).normal(size=(10, 1)))
        assert est.ordering == (1,) and est.parents == {1: ()}

    def test_empty(self):
        est = estimate_graph(OracleMomentCache(Sem(WeightedDag.from_edges(0, []), ErrorSpec(()))))
        assert est.ordering == () and est.parents == {}

    def test_too_few_rows(self):
        with pytest.raises(InputError):
            estimate_graph(np.ones((1, 2)))

    def test_independent_columns_oracle(self):
        sem = Sem(WeightedDag.from_edges(2, []), ErrorSpec.random_gaussian_offset(2, 4, seed=0))
        est = estimate_graph(OracleMomentCache(sem))
        assert est.ordering == (1, 2)  # exact tie goes to the smaller label
        assert est.parents == {1: (), 2: ()}

    def test_independent_columns_sample(self):
        # with two nodes the second one keeps the first as a parent exactly
        # when its own statistic exceeds alpha times the root's statistic
        Y = np.random.default_rng(1).uniform(size=(500, 2))
        cache = MomentCache(Y)
        t = {1: abs(cache.tau_hat(1, 2)), 2: abs(cache.tau_hat(2, 1))}
        for alpha in (0.8, 2.0, 50.0):
            est = estimate_graph(Y, alpha=alpha)
            root, other = est.ordering
            assert t[root] <= t[other]
            assert bool(est.parents[other]) == (t[other] > alpha * t[root])
            assert est.parents[root] == ()

    def test_single_edge_sample(self, single_edge_sem):
        est = estimate_graph(simulate(single_edge_sem, 100_000, seed=3))
        assert est.ordering == (1, 2)
        assert est.edges == {(1, 2)}
        assert est.labels == ("Y1", "Y2")

    def test_single_edge_oracle(self, single_edge_sem):
        est = estimate_graph(OracleMomentCache(single_edge_sem))
        assert est.ordering == (1, 2) and est.edges == {(1, 2)}
        assert est.diagnostics["g"][-1] == est.diagnostics["final_g"]

    def test_numerical_failure_names_step(self):
        # columns 1 and 2 are proportional, so any adjustment set holding both is singular
        rng = np.random.default_rng(18)
        x = rng.uniform(size=300)
        Y = np.column_stack([x, 2 * x, x**2 + 0.3 * rng.uniform(size=300), rng.uniform(size=300) ** 2,
                             x + rng.uniform(size=300)])
        with pytest.raises(NumericalError) as info:
            estimate_graph(Y, J=2, alpha=0.0, prune_scope="all")
        err = info.value
        assert (err.step, err.v, err.C) == (5, 4, (1, 2))
        assert "step 5" in str(err)

    def test_threads_do_not_change_result(self):
        sem = random_sem(4, p_range=(6, 6), errors="uniform")
        data = simulate(sem, 2000, seed=1)
        a = estimate_graph(data, J=2)
        b = estimate_graph(data, J=2, threads=3)
        assert a.to_json() == b.to_json()

    def test_prune_scopes_agree_at_oracle(self):
        sem, o, J = faithful_sem(77, p_range=(5, 6))
        g = oracle_gamma(o, J) / 2
        a = estimate_graph(OracleMomentCache(o), J=J, fixed_cutoff=g)
        b = estimate_graph(OracleMomentCache(o), J=J, fixed_cutoff=g, prune_scope="all")
        assert a.edges == b.edges == sem.wdag.dag.edges

    def test_json_shape(self):
        est = estimate_graph(np.random.default_rng(2).uniform(size=(100, 3)))
        obj = json.loads(est.to_json())
        assert set(obj) >= {"ordering", "parents", "diagnostics"}
        assert set(obj["diagnostics"]) >= {"g", "root_stats"}
        again = GraphEstimate.from_dict(obj)
        assert again.ordering == est.ordering and again.edges == est.edges
        with pytest.raises(InputError):
            GraphEstimate.from_dict({"ordering": [1]})


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), stat=st.sampled_from(["maxmin", "minmax"]))
def test_oracle_roots_come_after_their_ancestors(seed, stat):
    sem, o, J = faithful_sem(seed)
    dag = sem.wdag.dag

    def watch(step, v, cands, targets, value, state):
        placed = set(dag.nodes) - targets - {v}
        assert len(placed) == step - 1 and cands <= placed

    est = estimate_graph(OracleMomentCache(o), J=J, stat=stat, observer=watch)
    for i, r in enumerate(est.ordering):
        assert ancestors(dag, r) <= set(est.ordering[:i])
    assert is_consistent_ordering(dag, est.ordering)
    # alpha <= 1 at population moments never drops a true parent
    for v in dag.nodes:
        assert parents(dag, v) <= set(est.parents[v])


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_sample_run_invariants(seed):
    sem = random_sem(seed, p_range=(3, 7), errors="uniform")
    est = estimate_graph(simulate(sem, 300, seed=seed % 1000), J=2)
    g = est.diagnostics["g"]
    assert all(a <= b for a, b in zip(g, g[1:]))
    assert sorted(est.ordering) == list(range(1, sem.p + 1))
    pos = {v: i for i, v in enumerate(est.ordering)}
    for v, pa in est.parents.items():
        assert len(pa) <= 2
        assert all(pos[u] < pos[v] for u in pa)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_column_permutation(seed):
    sem = random_sem(seed, p_range=(3, 6), errors="uniform")
    Y = simulate(sem, 400, seed=1).values
    perm = np.random.default_rng(seed).permutation(sem.p)  # new column j = old column perm[j]
    new = {int(old) + 1: j + 1 for j, old in enumerate(perm)}
    a = estimate_graph(Y, J=2)
    b = estimate_graph(Y[:, perm], J=2)
    assert b.ordering == tuple(new[v] for v in a.ordering)
    assert b.edges == {(new[u], new[v]) for u, v in a.edges}
