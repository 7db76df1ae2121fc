"""Timestamp matching inside a busy period.

Permutations are 0-based integer arrays: ``perm[i]`` is the departure rank
assigned to the i-th arrival of the period.  A matching is *valid* when every
implied duration ``departures[perm[i]] - arrivals[i]`` lies in the support of
the time-in-system law, so validity needs only the support bounds.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import stochastics as st
from .exceptions import BusyPeriodTooLargeError, DimensionMismatchError
from .queue_sim import BusyPeriod
from .stochastics import SUPPORT_TOL, DistributionSpec

DEFAULT_MAX_SIZE = 20

_MASK64 = (1 << 64) - 1


def _bounds(law) -> tuple[float, float]:
    if isinstance(law, DistributionSpec):
        return st.support(law)
    lo, hi = law
    return float(lo), float(hi)


def implied_durations(bp: BusyPeriod, perm) -> np.ndarray:
    perm = np.asarray(perm)
    if perm.shape != (bp.size,):
        raise DimensionMismatchError(f"matching has length {perm.size}, busy period has {bp.size}")
    return bp.departures[perm] - bp.arrivals


def is_permutation(perm, n: int) -> bool:
    perm = np.asarray(perm)
    return perm.shape == (n,) and np.array_equal(np.sort(perm), np.arange(n))


def is_valid(bp: BusyPeriod, perm, law, tol: float = SUPPORT_TOL) -> bool:
    """Whether every duration implied by ``perm`` lies in the support of ``law``.

    ``law`` is a :class:`DistributionSpec` or explicit ``(lo, hi)`` bounds.
    """
    if not is_permutation(perm, bp.size):
        raise DimensionMismatchError(f"not a permutation of size {bp.size}: {perm!r}")
    lo, hi = _bounds(law)
    d = implied_durations(bp, perm)
    return bool(np.all((d >= lo - tol) & (d <= hi + tol)))


def biadjacency(bp: BusyPeriod, law, tol: float = SUPPORT_TOL) -> np.ndarray:
    """0/1 matrix with ``A[i, j] = 1`` iff arrival i may pair with departure j."""
    lo, hi = _bounds(law)
    d = bp.departures[None, :] - bp.arrivals[:, None]
    return ((d >= lo - tol) & (d <= hi + tol)).astype(np.int8)


def format_matrix(a) -> str:
    return "\n".join("".join("1" if v else "0" for v in row) for row in np.asarray(a))


def permanent(a, max_size: int = DEFAULT_MAX_SIZE) -> int:
    """Permanent of a square integer matrix by Ryser's inclusion-exclusion.

    Column subsets are enumerated in vectorised blocks.  Arithmetic runs in
    wrapping 64-bit integers, which is exact whenever the permanent itself
    fits in int64 (always true for 0/1 matrices up to size 20).
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1
    if n > max_size:
        raise BusyPeriodTooLargeError(n, max_size)
    at = np.ascontiguousarray(a.astype(np.int64).T)
    bits = np.arange(n, dtype=np.int64)
    block = 1 << min(n, 15)
    total = 0
    for start in range(1, 1 << n, block):
        masks = np.arange(start, min(start + block, 1 << n), dtype=np.int64)
        sel = (masks[:, None] >> bits) & 1
        rowsums = sel @ at
        prods = np.prod(rowsums, axis=1)
        odd = (n - sel.sum(axis=1)) & 1
        part = int(np.where(odd == 1, -prods, prods).sum())
        total = (total + part) & _MASK64
    return total - (1 << 64) if total >= 1 << 63 else total


def _chain_count(a: np.ndarray) -> int | None:
    """Perfect-matching count when the row neighbourhoods are nested, else None."""
    counts = a.sum(axis=1)
    order = np.argsort(counts, kind="stable")
    rows = a[order]
    if not np.all(rows[:-1] <= rows[1:]):
        return None
    out = 1
    for k, c in enumerate(counts[order]):
        c = int(c) - k
        if c <= 0:
            return 0
        out *= c
    return out


def count_valid_matchings(a, max_size: int = DEFAULT_MAX_SIZE) -> int:
    """Number of perfect matchings of a 0/1 biadjacency matrix.

    When the row neighbourhoods form a chain (the usual staircase shape
    for support bounded only below) the count is a product; otherwise
    :func:`permanent` is used.
    """
    a = np.asarray(a)
    if a.shape[0] == 0:
        return 1
    chained = _chain_count(a)
    if chained is not None:
        return chained
    return permanent(a, max_size)


def fifo_match(bp: BusyPeriod) -> np.ndarray:
    return np.arange(bp.size)


def random_match(bp: BusyPeriod, law, rng: np.random.Generator, *,
                 max_size: int = DEFAULT_MAX_SIZE, tol: float = SUPPORT_TOL) -> np.ndarray:
    """Uniform draw from the valid matchings of the busy period.

    Rows are assigned in order; each candidate column is weighted by the
    number of valid completions, which makes the joint draw exactly uniform.
    """
    b = bp.size
    if b > max_size:
        raise BusyPeriodTooLargeError(b, max_size)
    a = biadjacency(bp, law, tol)
    perm = np.empty(b, dtype=np.int64)
    cols = np.arange(b)
    for i in range(b):
        cand = cols[a[i, cols] == 1]
        if len(cand) == 1:
            # forced choice: the truth guarantees a completion exists
            perm[i] = cand[0]
            cols = cols[cols != cand[0]]
            continue
        weights = []
        for j in cand:
            rest = cols[cols != j]
            weights.append(count_valid_matchings(a[np.ix_(np.arange(i + 1, b), rest)], max_size))
        weights = np.asarray(weights, dtype=float)
        if weights.sum() == 0:
            raise ValueError("busy period admits no valid matching")
        j = cand[rng.choice(len(cand), p=weights / weights.sum())]
        perm[i] = j
        cols = cols[cols != j]
    return perm


def likelihood_matrix(bp: BusyPeriod, service: DistributionSpec, tol: float = SUPPORT_TOL) -> np.ndarray:
    """``log f(D[j] - Y[i])`` with ``-inf`` for pairs outside the support."""
    d = bp.departures[None, :] - bp.arrivals[:, None]
    w = st.logpdf(service, np.clip(d, 0.0, None))
    inside = st.in_support(service, d, tol)
    return np.where(inside, w, -np.inf)


def log_likelihood(bp: BusyPeriod, perm, service: DistributionSpec) -> float:
    w = likelihood_matrix(bp, service)
    return float(w[np.arange(bp.size), np.asarray(perm)].sum())


def _best_assignment(w: np.ndarray) -> float:
    if w.shape[0] == 0:
        return 0.0
    finite = np.isfinite(w)
    if not finite.any():
        return -math.inf
    lo, hi = w[finite].min(), w[finite].max()
    penalty = lo - (hi - lo + 1.0) * (w.shape[0] + 1)
    r, c = linear_sum_assignment(np.where(finite, w, penalty), maximize=True)
    if not finite[r, c].all():
        return -math.inf
    return float(w[r, c].sum())


def ml_match(bp: BusyPeriod, service: DistributionSpec, *, max_size: int | None = DEFAULT_MAX_SIZE,
             rel_tol: float = 1e-9) -> np.ndarray:
    """Maximum-likelihood matching, ties going to the lexicographically smallest permutation.

    The likelihood is a product over pairs, so the argmax is a maximum
    weight assignment on the log-density matrix.  Near-ties within
    ``rel_tol`` count as ties, which makes FIFO win whenever it is optimal.
    """
    b = bp.size
    if max_size is not None and b > max_size:
        raise BusyPeriodTooLargeError(b, max_size)
    w = likelihood_matrix(bp, service)  # raises DensityUndefinedError for point masses
    w = np.where(w == np.inf, np.finfo(float).max / (4 * max(b, 1)), w)
    best = _best_assignment(w)
    if not math.isfinite(best):
        raise ValueError("busy period admits no matching of positive likelihood")
    tol = rel_tol * max(1.0, abs(best))
    ident = np.trace(w)
    if ident >= best - tol:
        return np.arange(b)
    perm = np.empty(b, dtype=np.int64)
    cols = np.arange(b)
    acc = 0.0
    for i in range(b):
        for j in cols:
            if not np.isfinite(w[i, j]):
                continue
            rest = cols[cols != j]
            val = acc + w[i, j] + _best_assignment(w[np.ix_(np.arange(i + 1, b), rest)])
            if val >= best - tol:
                perm[i] = j
                acc += w[i, j]
                cols = rest
                break
        else:  # pragma: no cover - the optimum always has a completion
            raise RuntimeError("lexicographic search lost the optimum")
    return perm
