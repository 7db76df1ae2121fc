"""Tracking accuracy: the probability that a policy matches a whole busy period correctly.

Estimates pool busy periods across independent runs; the standard error
uses the between-run spread of the pooled ratio so that dependence inside
a run is respected.  Random matching is scored analytically by the
reciprocal number of valid matchings of each period, which has the same
mean as drawing a matching but no sampling noise.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import matching as mt
from . import stochastics as st
from ._validation import check_policy, check_positive_int, check_queue, check_queues
from .exceptions import DensityUndefinedError
from .queue_sim import (PROCESSOR_SHARING, BusyPeriod, QueueSpec, Trace, iter_busy_periods,
                        period_bounds, simulate)

POLICIES = ("fifo", "random", "ml")


@dataclass
class RunStats:
    """Sufficient statistics of one run for one policy."""

    successes: float = 0.0
    sq_successes: float = 0.0
    periods: int = 0
    oversized: int = 0
    size_successes: dict = field(default_factory=dict)
    size_counts: dict = field(default_factory=dict)
    ml_agree_fifo: int = 0

    def add(self, size: int, value: float, oversized: bool = False) -> None:
        self.successes += value
        self.sq_successes += value * value
        self.periods += 1
        self.oversized += int(oversized)
        self.size_successes[size] = self.size_successes.get(size, 0.0) + value
        self.size_counts[size] = self.size_counts.get(size, 0) + 1


@dataclass(frozen=True)
class AccuracyEstimate:
    """Pooled estimate of the per-busy-period tracking accuracy of one policy."""

    policy: str
    point_estimate: float
    standard_error: float
    periods_observed: int
    by_size: dict  # size -> (conditional success rate, number of periods)
    oversized_periods: int
    run_successes: tuple = ()
    run_periods: tuple = ()
    weighting: str = "period-pooled"
    ml_agree_fifo: int = 0  # scored periods of size >= 2 where the ML matching is the identity

    @property
    def n_runs(self) -> int:
        return len(self.run_periods)

    def size_frequency(self, b: int) -> float:
        if not self.periods_observed:
            return 0.0
        return self.by_size.get(b, (0.0, 0))[1] / self.periods_observed

    def series_value(self) -> float:
        """Sum over sizes of conditional success times size frequency."""
        return sum(rate * n for rate, n in self.by_size.values()) / max(self.periods_observed, 1)

    @classmethod
    def from_runs(cls, policy: str, runs: Sequence[RunStats]) -> "AccuracyEstimate":
        s = np.array([r.successes for r in runs], dtype=float)
        n = np.array([r.periods for r in runs], dtype=float)
        total_n = n.sum()
        agree = sum(r.ml_agree_fifo for r in runs)
        by_size: dict[int, tuple[float, int]] = {}
        sizes = sorted({b for r in runs for b in r.size_counts})
        for b in sizes:
            cnt = sum(r.size_counts.get(b, 0) for r in runs)
            succ = sum(r.size_successes.get(b, 0.0) for r in runs)
            by_size[b] = (succ / cnt, cnt)
        if total_n == 0:
            # no busy period ever closed: count the run as one failed period
            return cls(policy, 0.0, 0.0, 0, by_size, sum(r.oversized for r in runs),
                       tuple(s), tuple(int(x) for x in n), ml_agree_fifo=agree)
        p = s.sum() / total_n
        k = len(runs)
        if k > 1:
            resid = s - p * n
            se = math.sqrt(k / (k - 1) * np.sum(resid**2)) / total_n
        else:
            var = max(sum(r.sq_successes for r in runs) / total_n - p * p, 0.0)
            se = math.sqrt(var / total_n)
        return cls(policy, float(p), float(se), int(total_n), by_size,
                   sum(r.oversized for r in runs), tuple(s), tuple(int(x) for x in n), ml_agree_fifo=agree)


def joint_stderr(a: AccuracyEstimate, b: AccuracyEstimate) -> float:
    return math.hypot(a.standard_error, b.standard_error)


def paired_difference(a: AccuracyEstimate, b: AccuracyEstimate) -> tuple[float, float]:
    """Difference ``a - b`` and its standard error when both come from the same traces."""
    if a.run_periods != b.run_periods:
        raise ValueError("paired comparison needs estimates computed on the same runs")
    n = np.asarray(a.run_periods, dtype=float)
    d = np.asarray(a.run_successes) - np.asarray(b.run_successes)
    total = n.sum()
    if total == 0:
        return 0.0, 0.0
    diff = d.sum() / total
    k = len(n)
    if k < 2:
        return float(diff), math.nan
    se = math.sqrt(k / (k - 1) * np.sum((d - diff * n) ** 2)) / total
    return float(diff), float(se)


def fifo_success_indicator(bp: BusyPeriod) -> bool:
    """FIFO is right exactly when the departures keep the arrival order."""
    return bool(np.array_equal(bp.true_matching, np.arange(bp.size)))


def fifo_event_indicator(bp: BusyPeriod) -> bool:
    """FIFO success written on service and inter-arrival times.

    Each transaction must leave before the next one,
    ``T(i) < X(i) + T(i+1)``, on the event that the period has this size.
    """
    t, x = bp.durations, bp.interarrivals
    in_order = bool(np.all(t[:-1] < x[:-1] + t[1:]))
    return in_order and busy_period_event(t, x)


def fifo_series_event(t, x) -> bool:
    """Closed event for FIFO success with exactly ``len(t)`` transactions in the period.

    ``T(i)`` lies in ``[X(i), X(i) + T(i+1)]`` for every i but the last,
    and the last transaction leaves before the next arrival.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    head = np.all((t[:-1] >= x[:-1]) & (t[:-1] <= x[:-1] + t[1:]))
    return bool(head and t[-1] < x[-1])


def busy_period_event(t, x) -> bool:
    """Whether service times ``t`` and gaps ``x`` make one busy period of size ``len(t)``.

    ``x[i]`` is the gap from arrival i to arrival i+1 (the last gap reaches
    the first arrival after the period).  The queue must stay occupied at
    every internal arrival and empty before the next one.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    a = np.concatenate([[0.0], np.cumsum(x)])
    ends = a[:-1] + t
    running = np.maximum.accumulate(ends)
    return bool(np.all(running[:-1] > a[1:-1]) and running[-1] <= a[-1])


def _period_starts(trace: Trace):
    ends = period_bounds(trace)
    starts = np.concatenate([[0], ends[:-1]]).astype(np.int64)
    complete = np.ones(len(ends), dtype=bool)
    if len(ends) and trace.departures[-1] > trace.next_arrival:
        complete[-1] = False
    return starts, ends - starts, complete


def score_trace(trace: Trace, queue: QueueSpec, policies: Iterable[str], *,
                max_size: int = mt.DEFAULT_MAX_SIZE, random_method: str = "analytic",
                rng: np.random.Generator | None = None) -> dict[str, RunStats]:
    """Per-policy run statistics over the complete busy periods of one trace.

    Periods larger than ``max_size`` are failures for every policy.
    """
    policies = [check_policy(p) for p in policies]
    out = {p: RunStats() for p in policies}
    extra = {}
    starts, sizes, complete = _period_starts(trace)
    if not len(sizes):
        return out
    correct = trace.true_matching == np.arange(len(trace))
    fifo_ok = np.logical_and.reduceat(correct, starts)
    law = queue.duration_support()
    needs_periods = any(p != "fifo" for p in policies)
    periods = list(iter_busy_periods(trace)) if needs_periods else None
    if "ml" in policies:
        if queue.discipline == PROCESSOR_SHARING or not queue.service.has_density:
            raise DensityUndefinedError("maximum-likelihood matching needs a service density")
        extra["ml_agree"] = 0
    for k in np.flatnonzero(complete):
        b = int(sizes[k])
        big = b > max_size
        for p in policies:
            if big:
                val = 0.0
            elif b == 1:
                val = 1.0
            elif p == "fifo":
                val = float(fifo_ok[k])
            elif p == "random":
                bp = periods[k]
                if random_method == "analytic":
                    val = 1.0 / mt.count_valid_matchings(mt.biadjacency(bp, law), max_size)
                else:
                    pick = mt.random_match(bp, law, rng, max_size=max_size)
                    val = float(np.array_equal(pick, bp.true_matching))
            else:
                bp = periods[k]
                pick = mt.ml_match(bp, queue.service, max_size=max_size)
                val = float(np.array_equal(pick, bp.true_matching))
                extra["ml_agree"] += int(np.array_equal(pick, np.arange(b)))
            out[p].add(b, val, big)
    if "ml" in policies:
        out["ml"].ml_agree_fifo = extra["ml_agree"]
    return out


def _simulate_runs(queue, n_transactions, n_runs, seed):
    for r in range(n_runs):
        yield r, simulate(queue, n_transactions, rng=st.derive_rng(seed, r))


def estimate_accuracies(queue: QueueSpec, policies: Sequence[str] = POLICIES, n_transactions: int = 1000,
                        n_runs: int = 10, seed: int = 0, *, max_size: int = mt.DEFAULT_MAX_SIZE,
                        random_method: str = "analytic") -> dict[str, AccuracyEstimate]:
    """Estimates for several policies, all scored on the same simulated traces."""
    check_queue(queue)
    check_positive_int(n_transactions, "n_transactions")
    check_positive_int(n_runs, "n_runs")
    policies = [check_policy(p) for p in policies]
    if random_method not in ("analytic", "sampled"):
        raise ValueError("random_method must be 'analytic' or 'sampled'")
    runs = {p: [] for p in policies}
    for r, trace in _simulate_runs(queue, n_transactions, n_runs, seed):
        stats = score_trace(trace, queue, policies, max_size=max_size, random_method=random_method,
                            rng=st.derive_rng(seed, r, 1))
        for p in policies:
            runs[p].append(stats[p])
    return {p: AccuracyEstimate.from_runs(p, runs[p]) for p in policies}


def estimate_accuracy(queue: QueueSpec, policy: str = "fifo", n_transactions: int = 1000,
                      n_runs: int = 10, seed: int = 0, *, max_size: int = mt.DEFAULT_MAX_SIZE,
                      random_method: str = "analytic") -> AccuracyEstimate:
    """Monte Carlo estimate of the probability of matching a busy period correctly."""
    return estimate_accuracies(queue, [policy], n_transactions, n_runs, seed, max_size=max_size,
                               random_method=random_method)[check_policy(policy)]


def accuracy_by_size(queue: QueueSpec, policy: str = "fifo", n_transactions: int = 1000,
                     n_runs: int = 10, seed: int = 0, **kwargs) -> dict[int, tuple[float, int, float]]:
    """Map size b to (conditional success rate, periods of that size, empirical P[B=b])."""
    est = estimate_accuracy(queue, policy, n_transactions, n_runs, seed, **kwargs)
    return {b: (rate, cnt, cnt / est.periods_observed) for b, (rate, cnt) in est.by_size.items()}


def ml_fifo_agreement(queue: QueueSpec, n_transactions: int = 1000, n_runs: int = 10, seed: int = 0,
                      *, max_size: int = mt.DEFAULT_MAX_SIZE) -> float:
    """Fraction of scored busy periods on which the ML matching is the identity."""
    agree = periods = 0
    for r, trace in _simulate_runs(queue, n_transactions, n_runs, seed):
        stats = score_trace(trace, queue, ["ml"], max_size=max_size)["ml"]
        agree += stats.ml_agree_fifo + stats.size_counts.get(1, 0)
        periods += stats.periods - stats.oversized
    return agree / periods if periods else 1.0


def unit_batch_method(queue: QueueSpec) -> str:
    x, t = queue.arrival, queue.service
    if x.kind == "exponential" and t.kind in ("exponential", "deterministic", "uniform"):
        return "closed-form"
    if t.kind == "deterministic":
        return "closed-form"
    return "quadrature"


def unit_batch_prob(queue: QueueSpec, method: str = "auto", *, n_pairs: int = 10**6, seed: int = 0) -> float:
    """Probability that a busy period holds a single transaction, ``P[X > T]``.

    ``method`` is ``"auto"`` (closed form when available, otherwise
    quadrature of the arrival ccdf over service quantiles) or
    ``"monte-carlo"`` over independent (X, T) pairs.
    """
    check_queue(queue)
    x, t = queue.arrival, queue.service
    if method == "monte-carlo":
        rng = st.derive_rng(seed, 0)
        xs = st.sample(x, rng, n_pairs)
        ts = st.sample(t, rng, n_pairs)
        return float(np.mean(xs > ts))
    if method != "auto":
        raise ValueError("method must be 'auto' or 'monte-carlo'")
    if x.kind == "exponential":
        lam = x.rate
        if t.kind == "exponential":
            return t.rate / (lam + t.rate)
        if t.kind == "deterministic":
            return math.exp(-lam * t.value)
        if t.kind == "uniform":
            a, b = t.low, t.high
            return (math.exp(-lam * a) - math.exp(-lam * b)) / (lam * (b - a))
    if t.kind == "deterministic":
        return float(st.ccdf(x, t.value))
    return min(max(st.expect(t, lambda v: st.ccdf(x, v)), 0.0), 1.0)


class TrackingAccuracyEstimator(BaseEstimator):
    """Estimator-style wrapper around :func:`estimate_accuracy`.

    ``fit`` takes a queue or a list of queues and stores one
    :class:`AccuracyEstimate` per queue in ``estimates_``; ``predict``
    returns point estimates, reusing fitted results where possible.
    """

    def __init__(self, policy="fifo", n_transactions=1000, n_runs=10, max_busy_period=mt.DEFAULT_MAX_SIZE,
                 random_method="analytic", random_state=0):
        self.policy = policy
        self.n_transactions = n_transactions
        self.n_runs = n_runs
        self.max_busy_period = max_busy_period
        self.random_method = random_method
        self.random_state = random_state

    def _estimate(self, queue, index):
        seed = 0 if self.random_state is None else int(self.random_state)
        return estimate_accuracy(queue, self.policy, self.n_transactions, self.n_runs,
                                 int(np.random.SeedSequence([seed, index]).generate_state(1)[0]),
                                 max_size=self.max_busy_period, random_method=self.random_method)

    def fit(self, X, y=None):
        queues = check_queues(X)
        check_policy(self.policy)
        self.queues_ = tuple(queues)
        self.estimates_ = [self._estimate(q, i) for i, q in enumerate(queues)]
        self.accuracy_ = np.array([e.point_estimate for e in self.estimates_])
        self.stderr_ = np.array([e.standard_error for e in self.estimates_])
        return self

    def predict(self, X):
        queues = check_queues(X)
        fitted = dict(zip(getattr(self, "queues_", ()), getattr(self, "estimates_", ())))
        out = []
        for i, q in enumerate(queues):
            est = fitted.get(q) or self._estimate(q, i)
            out.append(est.point_estimate)
        return np.array(out)


def write_accuracy_csv(rows: Iterable[tuple[str, AccuracyEstimate]], path,
                       extra: Mapping[str, object] | None = None) -> None:
    """One summary row per (queue, policy), followed by one row per busy-period size."""
    extra = dict(extra or {})
    header = ["queue_id", "policy", "busy_period_size", "estimate", "stderr", "periods", "oversized",
              "frequency", *extra]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for qid, est in rows:
            w.writerow([qid, est.policy, "all", repr(est.point_estimate), repr(est.standard_error),
                        est.periods_observed, est.oversized_periods, "1.0", *extra.values()])
            for b, (rate, cnt) in sorted(est.by_size.items()):
                w.writerow([qid, est.policy, b, repr(float(rate)), "", cnt, int(b > mt.DEFAULT_MAX_SIZE) * cnt,
                            repr(est.size_frequency(b)), *extra.values()])
