"""Input checks shared by the estimators and the experiment runner."""
from __future__ import annotations

import numbers

import numpy as np

from .queue_sim import QueueSpec

_POLICY_ALIASES = {"fifo": "fifo", "random": "random", "rand": "random", "ml": "ml",
                   "maximum-likelihood": "ml"}


def check_policy(policy) -> str:
    try:
        return _POLICY_ALIASES[str(policy).lower()]
    except KeyError:
        raise ValueError(f"unknown matching policy {policy!r}; expected fifo, random or ml") from None


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_queue(queue) -> QueueSpec:
    if not isinstance(queue, QueueSpec):
        raise TypeError(f"expected a QueueSpec, got {type(queue).__name__}")
    return queue


def check_queues(X) -> list[QueueSpec]:
    """Accept one queue or a sequence of queues."""
    if isinstance(X, QueueSpec):
        return [X]
    queues = list(X)
    if not queues:
        raise ValueError("need at least one queue")
    for q in queues:
        check_queue(q)
    return queues


def check_accuracies(accuracies, n: int) -> np.ndarray:
    """Point estimates as a float vector of length ``n``; estimate objects are unwrapped."""
    vals = [getattr(a, "point_estimate", a) for a in accuracies]
    arr = np.asarray(vals, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"expected {n} accuracies, got shape {arr.shape}")
    if np.any(~np.isfinite(arr)) or np.any((arr < 0) | (arr > 1)):
        raise ValueError("accuracies must lie in [0, 1]")
    return arr


def check_budget(budget, n: int) -> int:
    if isinstance(budget, bool) or not isinstance(budget, numbers.Integral) or budget < 0:
        raise ValueError(f"budget must be a nonnegative integer, got {budget!r}")
    if budget > n:
        raise ValueError(f"budget {budget} exceeds the number of queues {n}")
    return int(budget)
