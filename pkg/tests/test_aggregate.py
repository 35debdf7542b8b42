import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdlingam.aggregate import (
    MaxMinState,
    enumerate_subsets,
    subsets_up_to,
    t1_minmax,
    t1_minmax_arg,
    t2_maxmin,
    t2_update,
)
from hdlingam.errors import InputError, StateError
from hdlingam.graph import descendants, parents, topological_sort
from hdlingam.moments import MomentCache, OracleMomentCache

from conftest import random_sem


class CountingCache:
    """Wraps a cache and records every adjustment set that gets evaluated."""

    def __init__(self, inner):
        self.inner = inner
        self.p = inner.p
        self.calls = []

    def abs_taus(self, v, C, us, K=None):
        self.calls.append(tuple(C))
        return self.inner.abs_taus(v, C, us, K)


@pytest.fixture(scope="module")
def sample_cache():
    Y = np.random.default_rng(3).uniform(size=(200, 7)) ** 2
    return MomentCache(Y)


class TestEnumeration:
    def test_examples(self):
        assert enumerate_subsets({1, 2, 3}, 2) == [(1, 2), (1, 3), (2, 3)]
        assert enumerate_subsets({1}, 3) == [(1,)]
        assert enumerate_subsets(set(), 2) == [()]
        assert enumerate_subsets({4, 5}, 0) == [()]

    def test_up_to(self):
        assert subsets_up_to({1, 2, 3}, 2) == [(), (1,), (2,), (3,), (1, 2), (1, 3), (2, 3)]

    def test_negative(self):
        with pytest.raises(InputError):
            enumerate_subsets({1}, -1)

    @settings(max_examples=50)
    @given(ground=st.sets(st.integers(1, 12), max_size=8), J=st.integers(0, 9))
    def test_family_invariants(self, ground, J):
        fam = enumerate_subsets(ground, J)
        if J <= len(ground):
            assert fam == sorted(fam)
            assert set(fam) == set(itertools.combinations(sorted(ground), J))
            assert len(fam) == len(set(fam))
        else:
            assert fam == [tuple(sorted(ground))]
        assert enumerate_subsets(ground, J) == fam


class TestAggregates:
    def test_single_edge(self, single_edge_sem):
        c = OracleMomentCache(single_edge_sem)
        assert t1_minmax(c, 2, set(), {1}, 3) == pytest.approx(0.3)
        assert t2_maxmin(c, 2, set(), {1}, 3) == pytest.approx(0.3)
        assert t1_minmax(c, 1, set(), {2}, 3) == pytest.approx(0.0, abs=1e-12)

    def test_empty_adjustment(self, sample_cache):
        got = t1_minmax(sample_cache, 3, set(), {1, 2, 5}, 2)
        assert got == sample_cache.abs_taus(3, (), [1, 2, 5]).max()

    def test_singleton_targets(self, sample_cache):
        a = t1_minmax(sample_cache, 3, {1, 2, 4}, {6}, 2)
        b = t2_maxmin(sample_cache, 3, {1, 2, 4}, {6}, 2)
        assert a == b

    def test_argmin(self, sample_cache):
        val, C = t1_minmax_arg(sample_cache, 3, {1, 2, 4}, {5, 6}, 2)
        assert val == t1_minmax(sample_cache, 3, {1, 2, 4}, {5, 6}, 2)
        assert sample_cache.abs_taus(3, C, [5, 6]).max() == val

    def test_rejects(self, sample_cache):
        with pytest.raises(InputError):
            t1_minmax(sample_cache, 3, {1}, set(), 2)
        with pytest.raises(InputError):
            t2_maxmin(sample_cache, 3, {1, 3}, {2}, 2)
        with pytest.raises(InputError):
            t2_maxmin(sample_cache, 3, {1, 2}, {2}, 2)

    @settings(max_examples=40, deadline=None)
    @given(v=st.integers(1, 7), data=st.data())
    def test_minimax_inequality(self, sample_cache, v, data):
        others = [u for u in range(1, 8) if u != v]
        V1 = data.draw(st.sets(st.sampled_from(others), max_size=4))
        V2 = data.draw(st.sets(st.sampled_from([u for u in others if u not in V1]), min_size=1))
        J = data.draw(st.integers(0, 3))
        assert t2_maxmin(sample_cache, v, V1, V2, J) <= t1_minmax(sample_cache, v, V1, V2, J)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_root_configurations_vanish_together(seed):
    sem = random_sem(seed, p_range=(3, 6))
    dag = sem.wdag.dag
    c = OracleMomentCache(sem)
    J = dag.max_in_degree()
    for v in dag.nodes:
        de = descendants(dag, v)
        V1 = set(dag.nodes) - de - {v}
        V2 = de
        if not V2:
            continue
        # every non-descendant is available, so some size-J set covers the parents
        assert parents(dag, v) <= V1 and len(parents(dag, v)) <= J
        assert t1_minmax(c, v, V1, V2, J) < 1e-10
        assert t2_maxmin(c, v, V1, V2, J) < 1e-10


class TestMaxMinState:
    def test_first_step_only_empty_set(self, sample_cache):
        c = CountingCache(sample_cache)
        state = MaxMinState.fresh(c, 4, set(), [1, 2, 3], 2)
        assert c.calls == [()]
        assert state.value() == t2_maxmin(sample_cache, 4, set(), {1, 2, 3}, 2)

    def test_update_evaluates_only_new_sets(self, sample_cache):
        c = CountingCache(sample_cache)
        state = MaxMinState.fresh(c, 7, {1, 2, 3}, [4, 5, 6], 2)
        c.calls.clear()
        new = t2_update(state, 4, c, 2)
        assert sorted(set(c.calls)) == [(1, 4), (2, 4), (3, 4)]
        assert new.table == MaxMinState.fresh(sample_cache, 7, {1, 2, 3, 4}, [5, 6], 2).table
        assert state.candidates == {1, 2, 3}  # input untouched

    def test_update_with_shrinking_candidates(self, sample_cache):
        state = MaxMinState.fresh(sample_cache, 7, {1, 2, 3}, [4, 5, 6], 2)
        new = t2_update(state, 4, sample_cache, 2, candidates={2, 4})
        assert new.table == MaxMinState.fresh(sample_cache, 7, {2, 4}, [5, 6], 2).table

    def test_stale_state(self, sample_cache):
        state = MaxMinState.fresh(sample_cache, 7, {1, 2}, [3, 4], 2)
        with pytest.raises(StateError):
            t2_update(state, 2, sample_cache, 2)
        with pytest.raises(StateError):
            t2_update(state, 7, sample_cache, 2)
        with pytest.raises(StateError):
            t2_update(state, 3, sample_cache, 1)
        with pytest.raises(StateError):
            t2_update(state, 3, sample_cache, 2, candidates={5})
        with pytest.raises(StateError):
            t2_update(state, 3, sample_cache, 2, targets={6})


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), J=st.integers(1, 3), data=st.data())
def test_incremental_chain_equals_batch(seed, J, data):
    """Random traces: place nodes one at a time, keep a random subset of candidates."""
    rng = np.random.default_rng(seed)
    Y = rng.standard_exponential(size=(80, 7))
    cache = MomentCache(Y)
    v = 7
    order = [int(x) for x in rng.permutation(6) + 1]
    state = MaxMinState.fresh(cache, v, set(), order, J)
    cands: set = set()
    for k, r in enumerate(order[:-1]):
        pool = cands | {r}
        keep = data.draw(st.sets(st.sampled_from(sorted(pool)), max_size=len(pool)))
        cands = set(keep)
        targets = order[k + 1:]
        state = t2_update(state, r, cache, J, candidates=cands)
        batch = MaxMinState.fresh(cache, v, cands, targets, J)
        assert state.table == batch.table
        assert state.value() == t2_maxmin(cache, v, cands, set(targets), J)


def test_state_matches_oracle_ordering(single_edge_sem):
    cache = OracleMomentCache(single_edge_sem)
    order = topological_sort(single_edge_sem.wdag.dag)
    assert order == (1, 2)
    state = MaxMinState.fresh(cache, 2, set(), [1], 1)
    assert state.value() == pytest.approx(0.3)
