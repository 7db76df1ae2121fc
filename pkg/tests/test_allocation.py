import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst
from sklearn.base import clone

from qtrack import stochastics as st
from qtrack.accuracy import AccuracyEstimate, estimate_accuracies, estimate_accuracy, unit_batch_prob
from qtrack.allocation import (AllocationProblem, InstrumentationAllocator, allocate, load_factor_allocation,
                               objective, optimal_allocation, overlap_fraction, random_allocation,
                               unit_batch_allocation, write_allocation_csv)
from qtrack.exceptions import MissingAccuraciesError
from qtrack.queue_sim import QueueSpec


def mm(lam, mu):
    return QueueSpec(st.exponential(lam), st.exponential(mu))


def roster(n):
    return tuple(mm(1.0, 0.5 + k) for k in range(n))


def test_optimal_example():
    res = optimal_allocation(AllocationProblem(roster(3), 1, (0.9, 0.4, 0.7)))
    assert res.z.tolist() == [0, 1, 0]
    assert res.objective == pytest.approx(2.6)
    assert res.selected == (1,)


def test_optimal_full_and_empty_budget():
    acc = (0.9, 0.4, 0.7)
    assert optimal_allocation(AllocationProblem(roster(3), 3, acc)).objective == pytest.approx(3.0)
    assert optimal_allocation(AllocationProblem(roster(3), 0, acc)).objective == pytest.approx(2.0)


def test_optimal_needs_accuracies():
    with pytest.raises(MissingAccuraciesError):
        optimal_allocation(AllocationProblem(roster(3), 1))


def test_optimal_ties_go_to_lowest_index():
    res = optimal_allocation(AllocationProblem(roster(4), 2, (0.5, 0.5, 0.5, 0.5)))
    assert res.selected == (0, 1)


def test_budget_validation():
    with pytest.raises(ValueError):
        AllocationProblem(roster(3), 4)
    with pytest.raises(ValueError):
        AllocationProblem(roster(3), -1)
    with pytest.raises(ValueError):
        AllocationProblem(roster(3), 1, (0.5, 0.5))


def test_load_factor_example():
    queues = (mm(1.0, 2.0), mm(1.0, 5.0), mm(0.9, 1.0))
    assert [q.load for q in queues] == pytest.approx([0.5, 0.2, 0.9])
    assert load_factor_allocation(AllocationProblem(queues, 1)).selected == (2,)


def test_load_factor_ties_and_no_accuracies():
    res = load_factor_allocation(AllocationProblem((mm(1, 2),) * 4, 2))
    assert res.selected == (0, 1)
    assert math.isnan(res.objective)


def test_load_factor_counterexample_deterministic_vs_uniform():
    m, m_d = 1.0, 1.5
    det = QueueSpec(st.exponential(0.5), st.deterministic(m_d))
    uni = QueueSpec(st.exponential(0.5), st.uniform(0.0, 2 * m))
    acc = [estimate_accuracy(q, "fifo", 1000, 10, seed=k) for k, q in enumerate((det, uni))]
    problem = AllocationProblem((det, uni), 1, tuple(acc))
    # the heuristic picks the deterministic queue although it is tracked perfectly
    assert load_factor_allocation(problem).selected == (0,)
    assert acc[0].point_estimate == 1.0 > acc[1].point_estimate
    assert optimal_allocation(problem).selected == (1,)


def test_unit_batch_examples():
    res = unit_batch_allocation(AllocationProblem((mm(1, 1), mm(1, 4)), 1))
    assert res.scores.tolist() == pytest.approx([0.5, 0.8])
    assert res.selected == (0,)
    assert unit_batch_allocation(AllocationProblem((mm(1, 2), mm(1, 2)), 1)).selected == (0,)
    det = QueueSpec(st.exponential(1.0), st.deterministic(1.0))
    res = unit_batch_allocation(AllocationProblem((det, mm(1, 1)), 1))
    assert res.scores.tolist() == pytest.approx([math.exp(-1), 0.5])
    assert res.selected == (0,)


def test_unit_batch_accepts_precomputed_scores():
    res = unit_batch_allocation(AllocationProblem(roster(3), 1), [0.3, 0.1, 0.2])
    assert res.selected == (1,)


def test_random_extremes():
    assert random_allocation(AllocationProblem(roster(4), 0), seed=1).selected == ()
    assert random_allocation(AllocationProblem(roster(4), 4), seed=1).selected == (0, 1, 2, 3)


def test_random_is_uniform():
    n, budget, draws = 5, 2, 10**5
    problem = AllocationProblem(roster(n), budget)
    rng = np.random.default_rng(0)
    counts = np.zeros(n)
    for _ in range(draws):
        counts += random_allocation(problem, rng=rng).z
    p = budget / n
    assert np.all(np.abs(counts / draws - p) <= 3 * math.sqrt(p * (1 - p) / draws))


def test_overlap_examples():
    problem = AllocationProblem(roster(4), 2, (0.1, 0.2, 0.3, 0.4))
    a = unit_batch_allocation(problem, [0.1, 0.2, 0.9, 0.9])
    b = unit_batch_allocation(problem, [0.9, 0.2, 0.1, 0.9])
    c = unit_batch_allocation(problem, [0.9, 0.9, 0.1, 0.2])
    assert overlap_fraction(a, a) == 1.0
    assert overlap_fraction(a, c) == 0.0
    assert a.selected == (0, 1) and b.selected == (1, 2)
    assert overlap_fraction(a, b) == 0.5


@given(hst.lists(hst.floats(0.0, 1.0), min_size=1, max_size=12), hst.data())
@settings(max_examples=150, deadline=None)
def test_optimal_dominates_every_strategy(acc, data):
    n = len(acc)
    budget = data.draw(hst.integers(0, n))
    queues = tuple(mm(1.0, 0.3 + 0.37 * k) for k in range(n))
    problem = AllocationProblem(queues, budget, tuple(acc))
    opt = optimal_allocation(problem)
    others = [load_factor_allocation(problem), unit_batch_allocation(problem),
              random_allocation(problem, seed=data.draw(hst.integers(0, 99)))]
    for res in others:
        assert opt.objective >= res.objective - 1e-12
    for res in [opt, *others]:
        assert res.z.sum() == budget
        # the instrumented queues count fully, the others by their accuracy
        assert res.objective == pytest.approx(budget + sum(a for a, z in zip(acc, res.z) if not z))
        assert sum(acc) - 1e-12 <= res.objective <= n + 1e-12


@given(hst.permutations(list(range(6))))
@settings(max_examples=40, deadline=None)
def test_relabelling_invariance(perm):
    acc = (0.81, 0.42, 0.93, 0.57, 0.66, 0.35)
    queues = tuple(mm(1.0, 0.4 + 0.5 * k) for k in range(6))
    ids = tuple("q%d" % k for k in range(6))
    base = AllocationProblem(queues, 2, acc, ids)
    moved = AllocationProblem(tuple(queues[i] for i in perm), 2, tuple(acc[i] for i in perm),
                              tuple(ids[i] for i in perm))
    for strategy in ("optimal", "load-factor", "unit-batch"):
        assert set(allocate(base, strategy).selected) == set(allocate(moved, strategy).selected)


def test_scaled_family_heuristics_match_optimal():
    # exponential services and Poisson arrivals, all linear scalings of one law
    queues = tuple(QueueSpec(st.exponential(lam), st.exponential(mu))
                   for lam, mu in [(1.0, 0.6), (1.0, 3.0), (2.0, 1.0), (0.5, 4.0), (1.0, 1.4)])
    ests = [estimate_accuracies(q, ["fifo"], 2000, 10, seed=k)["fifo"] for k, q in enumerate(queues)]
    problem = AllocationProblem(queues, 2, tuple(ests))
    opt = optimal_allocation(problem)
    # the optimal cut must be resolved by the Monte Carlo estimates
    inside = [ests[i] for i in np.flatnonzero(opt.z)]
    outside = [ests[i] for i in np.flatnonzero(opt.z == 0)]
    gap = min(o.point_estimate for o in outside) - max(i.point_estimate for i in inside)
    assert gap > 2 * max(math.hypot(a.standard_error, b.standard_error) for a in inside for b in outside)
    assert opt.ambiguous == ()
    assert set(load_factor_allocation(problem).selected) == set(opt.selected)
    assert set(unit_batch_allocation(problem).selected) == set(opt.selected)


def test_ambiguous_pairs_flagged():
    def est(p, se):
        return AccuracyEstimate("fifo", p, se, 100, {}, 0)
    problem = AllocationProblem(roster(3), 1, (est(0.50, 0.02), est(0.52, 0.02), est(0.9, 0.01)))
    res = optimal_allocation(problem)
    assert res.selected == (0,)
    assert res.ambiguous == ((0, 1),)


def test_allocator_estimator_api():
    queues = [mm(1, 1), mm(1, 4), mm(1, 0.5)]
    alloc = InstrumentationAllocator(strategy="unit-batch", budget=1)
    assert clone(alloc).get_params() == alloc.get_params()
    z = alloc.fit_predict(queues)
    assert z.tolist() == [0, 0, 1]
    assert alloc.scores_.tolist() == pytest.approx([unit_batch_prob(q) for q in queues])
    assert alloc.score(queues, [0.6, 0.8, 0.4]) == pytest.approx(2.4)
    opt = InstrumentationAllocator(strategy="optimal", budget=1).fit(queues, [0.6, 0.8, 0.4])
    assert opt.objective_ == pytest.approx(2.4)
    with pytest.raises(MissingAccuraciesError):
        InstrumentationAllocator(strategy="optimal").fit(queues)
    with pytest.raises(ValueError):
        InstrumentationAllocator(strategy="greedy").fit(queues)


def test_random_allocator_is_seeded():
    queues = roster(8)
    a = InstrumentationAllocator("random", 3, random_state=4).fit(queues).z_
    b = InstrumentationAllocator("random", 3, random_state=4).fit(queues).z_
    assert np.array_equal(a, b)


def test_objective_function():
    assert objective([1, 0, 0], [0.2, 0.5, 0.7]) == pytest.approx(2.2)


def test_allocation_csv(tmp_path):
    problem = AllocationProblem(roster(3), 1, (0.9, 0.4, 0.7), ("a", "b", "c"))
    opt = optimal_allocation(problem)
    lf = load_factor_allocation(problem)
    path = tmp_path / "alloc.csv"
    write_allocation_csv([opt, lf], path, opt, {"config_hash": "x", "seed": 1})
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["strategy", "selected_ids", "objective", "overlap_with_optimal", "config_hash", "seed"]
    assert rows[0]["selected_ids"] == "b" and float(rows[0]["overlap_with_optimal"]) == 1.0
    assert rows[1]["selected_ids"] == "a"
