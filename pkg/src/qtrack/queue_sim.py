"""Trace generation for infinite-server and processor-sharing queues.

A :class:`Trace` carries sorted arrival epochs, sorted departure epochs and
the ground-truth matching between them.  :func:`busy_periods` cuts a trace
into the maximal segments during which the queue is occupied; timestamp
matching decomposes across these segments.
"""
from __future__ import annotations

import csv
import heapq
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import stochastics as st
from .exceptions import InstabilityWarning
from .stochastics import DistributionSpec

INFINITE_SERVER = "infinite-server"
PROCESSOR_SHARING = "processor-sharing"
DISCIPLINES = (INFINITE_SERVER, PROCESSOR_SHARING)


@dataclass(frozen=True)
class QueueSpec:
    """Arrival law, service (or job-length) law and discipline of one queue."""

    arrival: DistributionSpec
    service: DistributionSpec
    discipline: str = INFINITE_SERVER
    name: str | None = None

    def __post_init__(self):
        if self.discipline not in DISCIPLINES:
            raise ValueError(f"discipline must be one of {DISCIPLINES}, got {self.discipline!r}")
        if self.discipline == PROCESSOR_SHARING and not self.load < 1.0:
            raise ValueError(f"processor-sharing queue needs load factor < 1, got {self.load:.4g}")

    @property
    def arrival_rate(self) -> float:
        return st.rate(self.arrival)

    @property
    def service_rate(self) -> float:
        return st.rate(self.service)

    @property
    def load(self) -> float:
        return st.mean(self.service) / st.mean(self.arrival)

    @property
    def poisson_arrivals(self) -> bool:
        return self.arrival.kind == "exponential" or (
            self.arrival.kind == "weibull" and self.arrival.shape == 1.0
        )

    def duration_support(self) -> tuple[float, float]:
        """Support of the time spent in the queue.

        Under processor sharing a job stays at least its length but has no
        upper bound on its sojourn.
        """
        lo, hi = st.support(self.service)
        if self.discipline == PROCESSOR_SHARING:
            return (lo, math.inf)
        return (lo, hi)

    def to_dict(self) -> dict:
        out = {
            "arrival": self.arrival.to_dict(),
            "service": self.service.to_dict(),
            "discipline": self.discipline,
        }
        if self.name is not None:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, data) -> "QueueSpec":
        unknown = set(data) - {"arrival", "service", "discipline", "name"}
        if unknown:
            raise ValueError(f"unexpected queue keys: {sorted(unknown)}")
        return cls(
            arrival=st.from_dict(data["arrival"]),
            service=st.from_dict(data["service"]),
            discipline=data.get("discipline", INFINITE_SERVER),
            name=data.get("name"),
        )


@dataclass(frozen=True, eq=False)
class Trace:
    """Timestamps and ground truth of one simulated run.

    ``true_matching[i]`` is the rank (0-based) of the departure of the
    i-th arrival, so ``departures[true_matching[i]] - arrivals[i]`` is the
    time the i-th arrival spent in the queue (``durations[i]``).
    ``job_lengths`` equals ``durations`` for infinite-server queues.
    ``next_arrival`` is the first arrival epoch beyond the horizon; a final
    busy period still running at that epoch is incomplete.
    """

    arrivals: np.ndarray
    departures: np.ndarray
    true_matching: np.ndarray
    durations: np.ndarray
    job_lengths: np.ndarray
    next_arrival: float = math.inf
    discipline: str = INFINITE_SERVER

    def __len__(self):
        return len(self.arrivals)


@dataclass(frozen=True, eq=False)
class BusyPeriod:
    """One busy period with local (0-based) indices."""

    arrivals: np.ndarray
    departures: np.ndarray
    true_matching: np.ndarray
    durations: np.ndarray
    start_index: int
    complete: bool = True
    interarrivals: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.arrivals)


def _arrival_epochs(arrival: DistributionSpec, n: int, rng) -> tuple[np.ndarray, float]:
    # first arrival at time X(1) after an empty start; one extra gap gives the horizon
    gaps = np.asarray(st.sample(arrival, rng, n + 1), dtype=float)
    epochs = np.cumsum(gaps)
    return epochs[:n], float(epochs[n])


def trace_from_durations(arrivals, durations, *, next_arrival=math.inf, job_lengths=None,
                         discipline=INFINITE_SERVER) -> Trace:
    """Assemble a trace from arrival epochs and per-arrival time in system."""
    y = np.asarray(arrivals, dtype=float)
    t = np.asarray(durations, dtype=float)
    if y.shape != t.shape or y.ndim != 1:
        raise ValueError("arrivals and durations must be 1-d arrays of equal length")
    if y.size and np.any(np.diff(y) <= 0):
        raise ValueError("arrival epochs must be strictly increasing")
    if np.any(t < 0):
        raise ValueError("durations must be nonnegative")
    dep = y + t
    order = np.argsort(dep, kind="stable")  # ties broken by arrival index
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    jl = t.copy() if job_lengths is None else np.asarray(job_lengths, dtype=float)
    dep = dep[order]
    # recompute so that departures[rank] - arrivals reproduces durations bit for bit
    return Trace(y, dep, rank, dep[rank] - y, jl, float(next_arrival), discipline)


def simulate_infinite_server(spec: QueueSpec, n: int, seed=None, *, rng=None) -> Trace:
    """Simulate ``n`` transactions through a GI/GI/infinity queue."""
    if spec.discipline != INFINITE_SERVER:
        raise ValueError("simulate_infinite_server needs an infinite-server queue")
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed) if rng is None else rng
    y, horizon = _arrival_epochs(spec.arrival, n, rng)
    t = np.asarray(st.sample(spec.service, rng, n), dtype=float)
    return trace_from_durations(y, t, next_arrival=horizon)


def processor_sharing_sojourns(arrivals, job_lengths) -> np.ndarray:
    """Exact sojourn times under egalitarian processor sharing.

    Every resident job attains service at the same rate, so a job leaves
    once the common attained service has grown by its length since its
    arrival.  The heap holds those exit levels.
    """
    y = np.asarray(arrivals, dtype=float)
    jl = np.asarray(job_lengths, dtype=float)
    n = len(y)
    dep = np.empty(n)
    heap: list[tuple[float, int]] = []
    level = 0.0  # attained service of any job present since the start
    now = 0.0
    i = 0
    while i < n or heap:
        next_arr = y[i] if i < n else math.inf
        if heap:
            k = len(heap)
            exit_level, j = heap[0]
            t_exit = now + (exit_level - level) * k
            if t_exit <= next_arr:
                heapq.heappop(heap)
                # restart the level at each idle epoch to keep rounding local
                level = exit_level if heap else 0.0
                now = t_exit
                dep[j] = now
                continue
            level += (next_arr - now) / k
        now = next_arr
        heapq.heappush(heap, (level + jl[i], i))
        i += 1
    return dep - y


def simulate_processor_sharing(spec: QueueSpec, n: int, seed=None, *, rng=None) -> Trace:
    """Simulate ``n`` transactions through an egalitarian processor-sharing queue."""
    if spec.discipline != PROCESSOR_SHARING:
        raise ValueError("simulate_processor_sharing needs a processor-sharing queue")
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed) if rng is None else rng
    y, horizon = _arrival_epochs(spec.arrival, n, rng)
    jl = np.asarray(st.sample(spec.service, rng, n), dtype=float)
    soj = processor_sharing_sojourns(y, jl)
    # a job never leaves before its own length has elapsed; undo rounding of (y + s) - y by a few ulps
    short = (y + soj) - y < jl
    while short.any():
        soj[short] += np.spacing(y[short] + soj[short])
        short = (y + soj) - y < jl
    trace = trace_from_durations(y, soj, next_arrival=horizon, job_lengths=jl,
                                 discipline=PROCESSOR_SHARING)
    _check_stability(trace)
    return trace


def _check_stability(trace: Trace) -> None:
    n = len(trace)
    if n < 200:
        return
    # occupancy seen by arrivals, compared over the four quarters of the run
    occ = np.arange(n) - np.searchsorted(trace.departures, trace.arrivals, side="left")
    quarters = [q.mean() for q in np.array_split(occ, 4)]
    if all(b > a for a, b in zip(quarters, quarters[1:])) and quarters[-1] > 4 * max(quarters[0], 1.0):
        warnings.warn("occupancy grows throughout the run; check the load factor",
                      InstabilityWarning, stacklevel=3)


def simulate(spec: QueueSpec, n: int, seed=None, *, rng=None) -> Trace:
    if spec.discipline == PROCESSOR_SHARING:
        return simulate_processor_sharing(spec, n, seed, rng=rng)
    return simulate_infinite_server(spec, n, seed, rng=rng)


def period_bounds(trace: Trace) -> np.ndarray:
    """End offsets (exclusive) of the busy periods, in arrival index.

    Period p covers arrivals ``bounds[p-1]:bounds[p]`` and the departures
    with the same ranks.  A departure and an arrival at the same epoch are
    ordered departure first.
    """
    n = len(trace)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    arrived = np.searchsorted(trace.arrivals, trace.departures, side="left")
    ends = np.flatnonzero(arrived == np.arange(1, n + 1)) + 1
    return ends.astype(np.int64)


def period_sizes(trace: Trace, complete_only: bool = True) -> np.ndarray:
    ends = period_bounds(trace)
    sizes = np.diff(np.concatenate([[0], ends]))
    if complete_only and sizes.size and not _last_complete(trace):
        sizes = sizes[:-1]
    return sizes


def _last_complete(trace: Trace) -> bool:
    return len(trace) == 0 or trace.departures[-1] <= trace.next_arrival


def busy_periods(trace: Trace) -> list[BusyPeriod]:
    """Partition a trace into busy periods, in time order."""
    return list(iter_busy_periods(trace))


def iter_busy_periods(trace: Trace) -> Iterator[BusyPeriod]:
    ends = period_bounds(trace)
    last_ok = _last_complete(trace)
    start = 0
    gaps = np.diff(np.concatenate([trace.arrivals, [trace.next_arrival]]))
    for p, end in enumerate(ends):
        yield BusyPeriod(
            arrivals=trace.arrivals[start:end],
            departures=trace.departures[start:end],
            true_matching=trace.true_matching[start:end] - start,
            durations=trace.durations[start:end],
            start_index=int(start),
            complete=bool(last_ok or p < len(ends) - 1),
            interarrivals=gaps[start:end],
        )
        start = int(end)


def make_busy_period(arrivals: Sequence[float], departures: Sequence[float],
                     true_matching: Sequence[int] | None = None) -> BusyPeriod:
    """Busy period from raw timestamps, e.g. for matching a recorded segment."""
    y = np.asarray(arrivals, dtype=float)
    d = np.asarray(departures, dtype=float)
    if y.shape != d.shape:
        raise ValueError("a busy period has as many departures as arrivals")
    pi = np.arange(len(y)) if true_matching is None else np.asarray(true_matching, dtype=np.int64)
    return BusyPeriod(y, d, pi, d[pi] - y, 0)


def write_trace_csv(trace: Trace, path, extra: dict | None = None) -> None:
    """Write one row per transaction; ``extra`` adds constant trailing columns."""
    extra = dict(extra or {})
    ends = period_bounds(trace)
    period_id = np.repeat(np.arange(len(ends)), np.diff(np.concatenate([[0], ends])))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "arrival_time", "departure_rank", "departure_time", "duration",
                    "busy_period_id", *extra])
        for i in range(len(trace)):
            r = int(trace.true_matching[i])
            w.writerow([i, repr(float(trace.arrivals[i])), r, repr(float(trace.departures[r])),
                        repr(float(trace.durations[i])), int(period_id[i]), *extra.values()])
