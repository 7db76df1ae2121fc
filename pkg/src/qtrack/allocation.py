"""Allocation of a limited instrumentation budget across queues.

An instrumented queue tracks perfectly; every other queue keeps its
timestamp-based accuracy.  The objective is the sum of effective
accuracies, so the optimum instruments the queues with the lowest
accuracies.  The heuristics rank queues without measuring accuracies.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_accuracies, check_budget, check_queues
from .accuracy import AccuracyEstimate, unit_batch_prob
from .exceptions import MissingAccuraciesError

STRATEGIES = ("optimal", "load-factor", "unit-batch", "random")


@dataclass(frozen=True)
class AllocationProblem:
    queues: tuple
    budget: int
    accuracies: tuple | None = None
    ids: tuple | None = None

    def __post_init__(self):
        queues = tuple(check_queues(self.queues))
        object.__setattr__(self, "queues", queues)
        check_budget(self.budget, len(queues))
        if self.accuracies is not None:
            object.__setattr__(self, "accuracies", tuple(self.accuracies))
            check_accuracies(self.accuracies, len(queues))
        ids = tuple(range(len(queues))) if self.ids is None else tuple(self.ids)
        if len(ids) != len(queues) or len(set(ids)) != len(ids):
            raise ValueError("queue ids must be unique, one per queue")
        object.__setattr__(self, "ids", ids)

    @property
    def accuracy_values(self) -> np.ndarray | None:
        if self.accuracies is None:
            return None
        return check_accuracies(self.accuracies, len(self.queues))


@dataclass(frozen=True)
class AllocationResult:
    """Instrumentation indicators and the objective they achieve.

    ``objective`` is nan when the problem carried no accuracies.
    ``ambiguous`` lists pairs of queues on either side of the selection
    boundary whose accuracy estimates differ by less than one joint
    standard error.
    """

    z: np.ndarray
    objective: float
    strategy: str
    scores: np.ndarray
    ids: tuple = ()
    ambiguous: tuple = field(default=())

    @property
    def selected(self) -> tuple:
        return tuple(self.ids[i] for i in np.flatnonzero(self.z))


def objective(z, accuracies) -> float:
    """Sum of effective accuracies ``z_k + (1 - z_k) P(k)``."""
    z = np.asarray(z, dtype=float)
    p = np.asarray(accuracies, dtype=float)
    return float(np.sum(z + (1.0 - z) * p))


def _select(scores: np.ndarray, budget: int, lowest_first: bool) -> np.ndarray:
    # stable sort so that ties go to the lowest index
    key = scores if lowest_first else -scores
    order = np.argsort(key, kind="stable")
    z = np.zeros(len(scores), dtype=np.int8)
    z[order[:budget]] = 1
    return z


def _result(problem: AllocationProblem, z, strategy, scores) -> AllocationResult:
    acc = problem.accuracy_values
    obj = objective(z, acc) if acc is not None else math.nan
    return AllocationResult(np.asarray(z, dtype=np.int8), obj, strategy, np.asarray(scores, dtype=float),
                            problem.ids, _ambiguous_pairs(problem, z))


def _ambiguous_pairs(problem: AllocationProblem, z) -> tuple:
    if problem.accuracies is None or not all(isinstance(a, AccuracyEstimate) for a in problem.accuracies):
        return ()
    ests = problem.accuracies
    inside = np.flatnonzero(z)
    outside = np.flatnonzero(np.asarray(z) == 0)
    out = []
    for i in inside:
        for j in outside:
            gap = abs(ests[i].point_estimate - ests[j].point_estimate)
            if gap < math.hypot(ests[i].standard_error, ests[j].standard_error):
                out.append((problem.ids[i], problem.ids[j]))
    return tuple(out)


def optimal_allocation(problem: AllocationProblem) -> AllocationResult:
    """Instrument the queues with the lowest measured accuracies."""
    acc = problem.accuracy_values
    if acc is None:
        raise MissingAccuraciesError("the optimal strategy needs per-queue accuracies")
    return _result(problem, _select(acc, problem.budget, lowest_first=True), "optimal", acc)


def load_factor_allocation(problem: AllocationProblem) -> AllocationResult:
    """Instrument the queues with the highest load factors."""
    rho = np.array([q.load for q in problem.queues])
    return _result(problem, _select(rho, problem.budget, lowest_first=False), "load-factor", rho)


def unit_batch_allocation(problem: AllocationProblem, unit_batch=None) -> AllocationResult:
    """Instrument the queues least likely to see a busy period of one transaction.

    ``unit_batch`` may carry precomputed probabilities, one per queue.
    """
    if unit_batch is None:
        unit_batch = [unit_batch_prob(q) for q in problem.queues]
    p1 = np.asarray(unit_batch, dtype=float)
    return _result(problem, _select(p1, problem.budget, lowest_first=True), "unit-batch", p1)


def random_allocation(problem: AllocationProblem, seed=None, *, rng=None) -> AllocationResult:
    """Instrument a uniformly drawn subset of ``budget`` queues."""
    rng = np.random.default_rng(seed) if rng is None else rng
    n = len(problem.queues)
    z = np.zeros(n, dtype=np.int8)
    z[rng.choice(n, size=problem.budget, replace=False)] = 1
    return _result(problem, z, "random", np.full(n, np.nan))


def overlap_fraction(a: AllocationResult, b: AllocationResult) -> float:
    """Share of the budget on which two allocations agree."""
    za, zb = np.asarray(a.z), np.asarray(b.z)
    if za.shape != zb.shape:
        raise ValueError("allocations cover different queue sets")
    budget = int(za.sum())
    if budget != int(zb.sum()):
        raise ValueError("allocations use different budgets")
    if budget == 0:
        return 1.0
    return float(np.sum((za == 1) & (zb == 1)) / budget)


def allocate(problem: AllocationProblem, strategy: str, seed=None, **kwargs) -> AllocationResult:
    if strategy == "optimal":
        return optimal_allocation(problem)
    if strategy == "load-factor":
        return load_factor_allocation(problem)
    if strategy == "unit-batch":
        return unit_batch_allocation(problem, **kwargs)
    if strategy == "random":
        return random_allocation(problem, seed)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


class InstrumentationAllocator(BaseEstimator):
    """Choose which queues to instrument.

    Parameters
    ----------
    strategy : {"optimal", "load-factor", "unit-batch", "random"}
    budget : int
        Number of queues that receive identifiers.
    random_state : int or None
        Seed for the random strategy.

    ``fit(queues, accuracies)`` stores the indicator vector in ``z_`` and
    the full :class:`AllocationResult` in ``result_``; accuracies are only
    needed by the optimal strategy and for the objective.
    """

    def __init__(self, strategy="unit-batch", budget=1, random_state=None):
        self.strategy = strategy
        self.budget = budget
        self.random_state = random_state

    def fit(self, X, accuracies=None):
        queues = check_queues(X)
        problem = AllocationProblem(tuple(queues), self.budget, accuracies)
        self.result_ = allocate(problem, self.strategy, self.random_state)
        self.z_ = self.result_.z
        self.scores_ = self.result_.scores
        self.objective_ = self.result_.objective
        return self

    def fit_predict(self, X, accuracies=None):
        return self.fit(X, accuracies).z_

    def score(self, X, accuracies):
        """Objective of the fitted selection under the given accuracies."""
        acc = check_accuracies(accuracies, len(check_queues(X)))
        return objective(self.z_, acc)


def write_allocation_csv(results: Sequence[AllocationResult], path, optimal: AllocationResult | None = None,
                         extra: dict | None = None) -> None:
    extra = dict(extra or {})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "selected_ids", "objective", "overlap_with_optimal", *extra])
        for res in results:
            overlap = "" if optimal is None else repr(overlap_fraction(res, optimal))
            w.writerow([res.strategy, ";".join(str(i) for i in res.selected), repr(res.objective), overlap,
                        *extra.values()])
