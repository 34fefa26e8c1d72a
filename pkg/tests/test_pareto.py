import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_dominates, brute_frontier
from pareto_tl.errors import DataError
from pareto_tl.pareto import dominates, exhaustive_search, local_search, pareto_frontier, peel_frontiers

unit = st.floats(0, 1, allow_nan=False)
clouds = arrays(float, st.tuples(st.integers(1, 25), st.integers(1, 4)), elements=unit)
# coarse grid values so that ties and duplicates are common
grid_clouds = arrays(float, st.tuples(st.integers(1, 25), st.integers(1, 3)),
                     elements=st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]))


def scripted(sigmas):
    calls = []

    def evaluate(k, cumulative):
        calls.append(k)
        return sigmas[k - 1]

    return evaluate, calls


def chain_steps(n):
    return peel_frontiers(np.arange(1, n + 1, dtype=float)[:, None])


# frontier

def test_frontier_example():
    P = [(0.1, 0.9), (0.5, 0.5), (0.9, 0.1), (0.6, 0.6)]
    assert pareto_frontier(P).tolist() == [0, 1, 2]


def test_frontier_duplicates_both_kept():
    assert pareto_frontier([(0.2, 0.2), (0.2, 0.2)]).tolist() == [0, 1]


def test_frontier_single_point():
    assert pareto_frontier([(0.3, 0.7)]).tolist() == [0]


def test_frontier_rejects_empty():
    with pytest.raises(DataError):
        pareto_frontier(np.zeros((0, 2)))


def test_frontier_matches_pairwise_oracle():
    rng = np.random.default_rng(0)
    for t in range(500):
        n, m = int(rng.integers(1, 201)), int(rng.integers(1, 5))
        # every fifth instance is drawn on a grid to exercise ties
        P = rng.integers(0, 4, (n, m)).astype(float) if t % 5 == 0 else rng.random((n, m))
        assert pareto_frontier(P).tolist() == brute_frontier(P.tolist())


@given(grid_clouds)
def test_dominance_is_strict_partial_order(P):
    n = len(P)
    for i in range(n):
        assert not dominates(P[i], P[i])
        for j in range(n):
            assert dominates(P[i], P[j]) == brute_dominates(P[i], P[j])
            if dominates(P[i], P[j]):
                assert not dominates(P[j], P[i])
                for k in range(n):
                    if dominates(P[j], P[k]):
                        assert dominates(P[i], P[k])


# peeling

def test_peel_chain():
    steps = peel_frontiers([(1, 1), (2, 2), (3, 3)])
    assert [s.selected for s in steps] == [(0,), (1,), (2,)]
    assert [s.cumulative for s in steps] == [(0,), (0, 1), (0, 1, 2)]
    assert [s.k for s in steps] == [1, 2, 3]


def test_peel_identical_points_single_step():
    steps = peel_frontiers(np.full((5, 2), 0.4))
    assert len(steps) == 1 and steps[0].selected == (0, 1, 2, 3, 4)


def test_peel_random_cloud_partitions():
    P = np.random.default_rng(1).random((20, 2))
    steps = peel_frontiers(P)
    flat = [i for s in steps for i in s.selected]
    assert sorted(flat) == list(range(20))
    assert len(flat) == len(set(flat))


@given(clouds)
def test_peel_partitions_and_layers_are_frontiers(P):
    steps = peel_frontiers(P)
    flat = [i for s in steps for i in s.selected]
    assert sorted(flat) == list(range(len(P)))
    remaining = list(range(len(P)))
    for s in steps:
        assert list(s.selected) == [remaining[i] for i in brute_frontier(P[remaining].tolist())]
        remaining = [i for i in remaining if i not in s.selected]
        assert s.cumulative == tuple(sorted(set(range(len(P))) - set(remaining)))


@given(grid_clouds, st.sampled_from([np.exp, np.arctan, lambda v: v ** 3 + 2 * v, lambda v: np.log1p(v) * 7 - 3]))
def test_monotone_transform_invariance(P, f):
    assert pareto_frontier(f(P)).tolist() == pareto_frontier(P).tolist()
    assert peel_frontiers(f(P)) == peel_frontiers(P)


def test_per_coordinate_transforms_may_differ():
    P = np.random.default_rng(2).random((40, 3))
    Q = np.column_stack([np.exp(P[:, 0]), 5 * P[:, 1] - 1, np.sqrt(P[:, 2])])
    assert peel_frontiers(Q) == peel_frontiers(P)


# searches

def test_local_search_trigger():
    ev, calls = scripted([0.4, 0.45, 0.3])
    tr = local_search(chain_steps(3), ev, 0.5)
    assert tr.termination == "trigger"
    assert tr.chosen_step == 1 and tr.chosen == (0,)
    assert calls == [1, 2]


def test_local_search_no_trigger_above_baseline():
    ev, calls = scripted([0.6, 0.65, 0.45, 0.7])
    tr = local_search(chain_steps(4), ev, 0.5)
    assert calls[:3] == [1, 2, 3]
    # the first legitimate trigger is at step 4 (0.45 < baseline then 0.7)
    assert tr.chosen_step == 3 and tr.termination == "trigger"


def test_local_search_exhausted_without_trigger():
    ev, _ = scripted([0.9, 0.8, 0.7, 0.6])
    tr = local_search(chain_steps(4), ev, 0.5)
    assert tr.termination == "exhausted-without-trigger"
    assert tr.chosen_step == 4 and tr.chosen == (0, 1, 2, 3)


def test_local_search_exhausted_returns_best_seen():
    ev, _ = scripted([0.6, 0.7, 0.65])
    tr = local_search(chain_steps(3), ev, 0.5)
    assert tr.termination == "exhausted-without-trigger" and tr.chosen_step == 1


def test_exhaustive_unique_minimum():
    ev, calls = scripted([0.5, 0.4, 0.35, 0.2, 0.3, 0.25])
    tr = exhaustive_search(chain_steps(6), ev, 1.0)
    assert tr.chosen_step == 4 and calls == [1, 2, 3, 4, 5, 6]


def test_exhaustive_increasing_picks_first():
    ev, _ = scripted([0.1, 0.2, 0.3])
    assert exhaustive_search(chain_steps(3), ev, 1.0).chosen_step == 1


def test_exhaustive_tie_prefers_smaller_step():
    ev, _ = scripted([0.5, 0.2, 0.4, 0.3, 0.2])
    assert exhaustive_search(chain_steps(5), ev, 1.0).chosen_step == 2


def test_search_accepts_stats_objects():
    class Stats:
        def __init__(self, m):
            self.median, self.values = m, [m, m]

    tr = exhaustive_search(chain_steps(2), lambda k, c: Stats([0.3, 0.1][k - 1]), 1.0)
    assert tr.chosen_step == 2 and tr.record(2).run_errors == [0.1, 0.1]


@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=12), st.floats(0, 1))
def test_exhaustive_attains_minimum(sigmas, base):
    tr = exhaustive_search(chain_steps(len(sigmas)), lambda k, c: sigmas[k - 1], base)
    assert tr.record(tr.chosen_step).sigma == min(sigmas)
    assert tr.chosen_step == sigmas.index(min(sigmas)) + 1


@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=12), st.floats(0, 1))
def test_local_is_prefix_of_exhaustive(sigmas, base):
    steps = chain_steps(len(sigmas))
    loc = local_search(steps, lambda k, c: sigmas[k - 1], base)
    ex = exhaustive_search(steps, lambda k, c: sigmas[k - 1], base)
    assert loc.sigmas == ex.sigmas[:len(loc.sigmas)]
    assert 1 <= loc.chosen_step <= len(loc.records)
    if loc.termination == "trigger":
        k = len(loc.records)
        assert loc.chosen_step == k - 1
        assert sigmas[k - 1] > sigmas[k - 2] and sigmas[k - 2] < base


def test_search_rejects_no_steps():
    with pytest.raises(DataError):
        local_search([], lambda k, c: 0.0, 1.0)
