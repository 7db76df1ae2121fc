"""Stochastic, convex and spread orders, and the optimality certificates built on them.

Empirical checks compare two sample sets on a fixed grid with
Dvoretzky-Kiefer-Wolfowitz bands and return one of four verdicts:
``stDominates``, ``cxDominated``, ``none`` or ``inconclusive``.  When both
laws are in the catalog the checks are done analytically instead.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import stochastics as st
from .accuracy import estimate_accuracy, unit_batch_prob
from .queue_sim import PROCESSOR_SHARING, QueueSpec, period_sizes, simulate
from .stochastics import DistributionSpec

ST_DOMINATES = "stDominates"
CX_DOMINATED = "cxDominated"
NONE = "none"
INCONCLUSIVE = "inconclusive"

_EXACT_TOL = 1e-12


@dataclass(frozen=True)
class OrderVerdict:
    """Outcome of an order check.

    ``margins`` holds the compared differences at each ``grid`` point
    (first minus second), ``band`` the noise allowance applied to them.
    """

    relation: str
    grid: np.ndarray = field(repr=False)
    margins: np.ndarray = field(repr=False)
    band: float
    confidence: float
    method: str = "empirical"
    note: str = ""

    @property
    def holds(self) -> bool:
        return self.relation in (ST_DOMINATES, CX_DOMINATED)

    @property
    def worst_margin(self) -> float:
        return float(self.margins.min()) if self.margins.size else 0.0


def dkw_epsilon(n: int, confidence: float) -> float:
    """Half-width of the DKW band for an empirical cdf of ``n`` samples."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


def _empirical_ccdf(sorted_samples: np.ndarray, x: np.ndarray) -> np.ndarray:
    return 1.0 - np.searchsorted(sorted_samples, x, side="right") / sorted_samples.size


def _as_samples(s, name) -> np.ndarray:
    a = np.sort(np.asarray(s, dtype=float).ravel())
    if a.size == 0:
        raise ValueError(f"{name} is empty")
    return a


def quantile_grid(s1: np.ndarray, s2: np.ndarray, grid_size: int) -> np.ndarray:
    pooled = np.concatenate([s1, s2])
    levels = (np.arange(grid_size) + 0.5) / grid_size
    return np.unique(np.quantile(pooled, levels))


def st_dominates(samples1, samples2, grid_size: int = 200, confidence: float = 0.99,
                 grid=None) -> OrderVerdict:
    """Whether the first sample is stochastically larger than the second.

    The empirical ccdfs are compared on ``grid`` (default: pooled
    quantiles).  A shortfall beyond the combined DKW band gives ``none``;
    a shortfall inside the band gives ``inconclusive``.
    """
    s1 = _as_samples(samples1, "samples1")
    s2 = _as_samples(samples2, "samples2")
    x = quantile_grid(s1, s2, grid_size) if grid is None else np.asarray(grid, dtype=float)
    d = _empirical_ccdf(s1, x) - _empirical_ccdf(s2, x)
    band = dkw_epsilon(s1.size, confidence) + dkw_epsilon(s2.size, confidence)
    if np.any(d < -band):
        rel = NONE
    elif np.all(d >= 0):
        rel = ST_DOMINATES
    else:
        rel = INCONCLUSIVE
    return OrderVerdict(rel, x, d, band, confidence)


def cx_dominated(samples1, samples2, grid_size: int = 200, confidence: float = 0.99,
                 grid=None) -> OrderVerdict:
    """Whether the first sample is smaller in convex order than the second.

    Requires equal means (within a normal band) and a stop-loss transform
    ``E[(Z1 - t)^+] <= E[(Z2 - t)^+]`` at every grid point, again up to a
    normal band with a Bonferroni correction over the grid.
    """
    s1 = _as_samples(samples1, "samples1")
    s2 = _as_samples(samples2, "samples2")
    x = quantile_grid(s1, s2, grid_size) if grid is None else np.asarray(grid, dtype=float)
    alpha = 1.0 - confidence
    z_mean = stats.norm.ppf(1.0 - alpha / 2.0)
    se_mean = math.sqrt(s1.var(ddof=1 if s1.size > 1 else 0) / s1.size
                        + s2.var(ddof=1 if s2.size > 1 else 0) / s2.size)
    mean_gap = float(s1.mean() - s2.mean())
    mean_band = z_mean * se_mean + _EXACT_TOL * max(1.0, abs(s2.mean()))
    excess1 = np.maximum(s1[None, :] - x[:, None], 0.0) if s1.size * x.size <= 4_000_000 else None
    sl1, v1 = _stop_loss_stats(s1, x, excess1)
    sl2, v2 = _stop_loss_stats(s2, x, None)
    d = sl1 - sl2
    z = stats.norm.ppf(1.0 - alpha / (2.0 * max(x.size, 1)))
    bands = z * np.sqrt(v1 / s1.size + v2 / s2.size) + _EXACT_TOL
    margins = bands - d  # nonnegative where the stop-loss order holds within noise
    if abs(mean_gap) > mean_band:
        return OrderVerdict(NONE, x, margins, float(bands.max(initial=0.0)), confidence,
                            note=f"means differ by {mean_gap:.4g} (band {mean_band:.3g})")
    rel = CX_DOMINATED if np.all(margins >= 0) else NONE
    return OrderVerdict(rel, x, margins, float(bands.max(initial=0.0)), confidence)


def _stop_loss_stats(s: np.ndarray, x: np.ndarray, excess=None):
    if excess is None:
        means = np.empty(x.size)
        var = np.empty(x.size)
        for i, t in enumerate(x):
            e = np.maximum(s - t, 0.0)
            means[i] = e.mean()
            var[i] = e.var()
        return means, var
    return excess.mean(axis=1), excess.var(axis=1)


# analytic checks on catalog laws

def _law_grid(a: DistributionSpec, b: DistributionSpec, n: int = 4001) -> np.ndarray:
    hi = max(float(st.ppf(a, 1.0 - 1e-9)) if a.kind in ("exponential", "weibull") else st.support(a)[1],
             float(st.ppf(b, 1.0 - 1e-9)) if b.kind in ("exponential", "weibull") else st.support(b)[1])
    pts = [np.linspace(0.0, hi, n)]
    # both sides of every support endpoint, where step functions jump
    for spec in (a, b):
        for e in st.support(spec):
            if math.isfinite(e):
                pts.append(np.array([e - 1e-9, e, e + 1e-9]))
    g = np.unique(np.concatenate(pts))
    return g[g >= 0]


def st_dominates_law(a: DistributionSpec, b: DistributionSpec) -> OrderVerdict:
    """Analytic check of ``a >=st b`` by comparing ccdfs on a dense grid.

    Identical laws get ``inconclusive``: they are ordered both ways, so no
    strict comparison follows from them.
    """
    x = _law_grid(a, b)
    d = np.asarray(st.ccdf(a, x)) - np.asarray(st.ccdf(b, x))
    if np.all(np.abs(d) <= _EXACT_TOL):
        return OrderVerdict(INCONCLUSIVE, x, d, 0.0, 1.0, "analytic", "identical laws")
    rel = ST_DOMINATES if np.all(d >= -_EXACT_TOL) else NONE
    note = ""
    if rel == NONE and np.any(d > _EXACT_TOL):
        sign = np.sign(np.where(np.abs(d) <= _EXACT_TOL, 0.0, d))
        first = sign[np.flatnonzero(sign)[0]]
        note = f"ccdfs cross near x={x[np.flatnonzero(sign == -first)[0]]:.4g}"
    return OrderVerdict(rel, x, d, 0.0, 1.0, "analytic", note)


def cx_dominated_law(a: DistributionSpec, b: DistributionSpec) -> OrderVerdict:
    """Analytic check of ``a <=cx b`` through means and stop-loss transforms."""
    x = _law_grid(a, b, 801)
    d = np.array([st.stop_loss(b, t) - st.stop_loss(a, t) for t in x])
    ma, mb = st.mean(a), st.mean(b)
    if abs(ma - mb) > 1e-9 * max(1.0, abs(mb)):
        return OrderVerdict(NONE, x, d, 0.0, 1.0, "analytic", f"means differ ({ma:.4g} vs {mb:.4g})")
    rel = CX_DOMINATED if np.all(d >= -1e-10) else NONE
    return OrderVerdict(rel, x, d, 0.0, 1.0, "analytic")


# spreads

def _rng(seed, *keys) -> np.random.Generator:
    return st.derive_rng(*np.atleast_1d(seed).tolist(), *keys)


def spread_samples(service: DistributionSpec, n: int, seed=0, *, signed: bool = False) -> np.ndarray:
    """``|T(1) - T(2)|`` over ``n`` independent pairs (the signed differences if ``signed``)."""
    rng = _rng(seed, 0)
    t = np.asarray(st.sample(service, rng, (n, 2)), dtype=float)
    v = t[:, 0] - t[:, 1]
    return v if signed else np.abs(v)


def spread_ccdf(service: DistributionSpec, x):
    """Analytic ccdf of ``|T(1) - T(2)|``, or None when no closed form is coded."""
    xa = np.asarray(x, dtype=float)
    k = service.kind
    if k == "weibull" and service.shape == 1.0:
        return np.where(xa < 0, 1.0, np.exp(-np.maximum(xa, 0.0) / service.scale))
    if k == "exponential":
        # difference of iid exponentials is Laplace, so |V| is exponential with the same rate
        return np.where(xa < 0, 1.0, np.exp(-service.rate * np.maximum(xa, 0.0)))
    if k == "uniform":
        w = service.high - service.low
        return np.where(xa < 0, 1.0, np.clip(1.0 - xa / w, 0.0, 1.0) ** 2)
    if k == "deterministic":
        return np.where(xa < 0, 1.0, 0.0)
    return None


def _scale_family(a: DistributionSpec, b: DistributionSpec) -> float | None:
    """Factor s with ``b = s * a`` in law, or None when they are not scalings of one law."""
    def norm(d):
        if d.kind == "weibull" and d.shape == 1.0:
            return st.exponential(1.0 / d.scale)
        return d
    a, b = norm(a), norm(b)
    if a.kind != b.kind:
        return None
    if a.kind == "exponential":
        return a.rate / b.rate
    if a.kind == "weibull":
        return b.scale / a.scale if math.isclose(a.shape, b.shape, rel_tol=1e-12) else None
    if a.kind == "deterministic":
        return b.value / a.value
    # uniform(l, h) scales to uniform(s l, s h)
    s = b.high / a.high
    return s if math.isclose(b.low, s * a.low, rel_tol=1e-12, abs_tol=1e-15) else None


def spread_order(a: DistributionSpec, b: DistributionSpec, n: int = 10**5, seed=0,
                 confidence: float = 0.99) -> OrderVerdict:
    """Check ``|V_a| >=st |V_b|`` for the spreads of two service laws."""
    s = _scale_family(a, b)
    if s is not None:
        # |V| scales with the law, so the order follows the scale factor
        g = np.array([s])
        if math.isclose(s, 1.0, rel_tol=1e-12):
            return OrderVerdict(INCONCLUSIVE, g, np.zeros(1), 0.0, 1.0, "analytic", "identical laws")
        rel = ST_DOMINATES if s < 1.0 or a.kind == "deterministic" else NONE
        return OrderVerdict(rel, g, np.array([1.0 - s]), 0.0, 1.0, "analytic", "scaled family")
    if b.kind == "deterministic":
        x = np.array([0.0])
        return OrderVerdict(ST_DOMINATES, x, np.zeros(1), 0.0, 1.0, "analytic", "second spread is zero")
    ca = spread_ccdf(a, 0.0)
    cb = spread_ccdf(b, 0.0)
    if ca is not None and cb is not None:
        hi = max(_spread_hi(a), _spread_hi(b))
        x = np.linspace(0.0, hi, 4001)
        d = spread_ccdf(a, x) - spread_ccdf(b, x)
        rel = ST_DOMINATES if np.all(d >= -_EXACT_TOL) else NONE
        return OrderVerdict(rel, x, d, 0.0, 1.0, "analytic")
    return st_dominates(spread_samples(a, n, (seed, 1)), spread_samples(b, n, (seed, 2)),
                        confidence=confidence)


def _spread_hi(d: DistributionSpec) -> float:
    if d.kind == "uniform":
        return d.high - d.low
    if d.kind == "deterministic":
        return 0.0
    return 25.0 * st.mean(d)


# busy periods

def busy_period_samples(queue: QueueSpec, n_periods: int, seed=0, *, chunk: int = 20_000) -> np.ndarray:
    """Sizes of at least ``n_periods`` complete busy periods, truncated to exactly that many."""
    out = []
    total = 0
    r = 0
    while total < n_periods:
        trace = simulate(queue, chunk, rng=_rng(seed, r))
        sizes = period_sizes(trace, complete_only=True)
        out.append(sizes)
        total += sizes.size
        r += 1
    return np.concatenate(out)[:n_periods]


def busy_period_order_check(qa: QueueSpec, qb: QueueSpec, n_periods: int = 10**5, seed=0,
                            grid=None, confidence: float = 0.99) -> OrderVerdict:
    """Check ``B_a >=st B_b`` on busy-period sizes, by default on b = 1..20."""
    grid = np.arange(1, 21) if grid is None else grid
    ba = busy_period_samples(qa, n_periods, (seed, 0))
    bb = busy_period_samples(qb, n_periods, (seed, 1))
    return st_dominates(ba, bb, confidence=confidence, grid=grid)


# certificates

@dataclass
class Precondition:
    name: str
    verdict: str
    holds: bool | None  # None when the check was inconclusive
    method: str = "analytic"
    equal: bool = False  # both sides equal in law: weakly ordered, but nothing strict


@dataclass
class Prediction:
    """Predicted inequality ``value_k <= value_m`` and its measured check."""

    quantity: str
    value_k: float
    value_m: float
    stderr: float = 0.0
    confirmed: bool | None = None


@dataclass
class Certificate:
    theorem: str
    k: str
    m: str
    preconditions: list
    predictions: list = field(default_factory=list)
    note: str = ""

    @property
    def issued(self) -> bool:
        pre = self.preconditions
        return bool(pre) and all(p.holds is True for p in pre) and not all(p.equal for p in pre)

    @property
    def confirmed(self) -> bool | None:
        if not self.issued or not self.predictions:
            return None
        vals = [p.confirmed for p in self.predictions]
        if any(v is False for v in vals):
            return False
        return True if all(v is True for v in vals) else None

    @property
    def accuracy_confirmed(self) -> bool | None:
        """Confirmation of the measured tracking-accuracy prediction alone."""
        vals = [p.confirmed for p in self.predictions if p.quantity.startswith("P^")]
        return vals[0] if vals else None


@dataclass
class CertificateReport:
    qa: QueueSpec
    qb: QueueSpec
    policy: str
    certificates: list
    notes: list = field(default_factory=list)

    def issued(self, theorem: str | None = None) -> list:
        return [c for c in self.certificates if c.issued and (theorem is None or c.theorem == theorem)]

    def for_theorem(self, theorem: str) -> list:
        return [c for c in self.certificates if c.theorem == theorem]

    def to_rows(self) -> list[dict]:
        rows = []
        for c in self.certificates:
            base = {"theorem": c.theorem, "k": c.k, "m": c.m, "policy": self.policy}
            for p in c.preconditions:
                rows.append({**base, "item": "precondition", "name": p.name, "verdict": p.verdict,
                             "holds": _tri(p.holds), "detail": p.method})
            rows.append({**base, "item": "certificate", "name": "issued", "verdict": "",
                         "holds": _tri(c.issued), "detail": c.note})
            for p in c.predictions:
                rows.append({**base, "item": "prediction", "name": p.quantity,
                             "verdict": f"{p.value_k!r} <= {p.value_m!r} (se {p.stderr!r})",
                             "holds": _tri(p.confirmed), "detail": ""})
        return rows

    def to_text(self) -> str:
        lines = [f"pair: a = {_describe(self.qa)} ; b = {_describe(self.qb)} ; policy = {self.policy}"]
        for c in self.certificates:
            status = "issued" if c.issued else "not issued"
            lines.append(f"  {c.theorem} [k={c.k}, m={c.m}]: {status}")
            for p in c.preconditions:
                lines.append(f"    - {p.name}: {p.verdict} ({p.method})")
            for p in c.predictions:
                mark = {True: "confirmed", False: "contradicted", None: "unchecked"}[p.confirmed]
                lines.append(f"    > {p.quantity}: {p.value_k:.6g} <= {p.value_m:.6g} "
                             f"(se {p.stderr:.3g}) {mark}")
            if c.note:
                lines.append(f"    note: {c.note}")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


CERTIFICATE_FIELDS = ["theorem", "k", "m", "policy", "item", "name", "verdict", "holds", "detail"]


def _tri(v) -> str:
    return {True: "yes", False: "no", None: "inconclusive"}[v]


def _describe(q: QueueSpec) -> str:
    return f"{q.discipline} arrival={q.arrival} service={q.service}"


def _holds(verdict: OrderVerdict) -> bool | None:
    if verdict.holds:
        return True
    return None if verdict.relation == INCONCLUSIVE else False


def _st_pre(name, a, b) -> Precondition:
    v = st_dominates_law(a, b)
    if v.note == "identical laws":
        return Precondition(name, INCONCLUSIVE + " (identical laws)", True, v.method, equal=True)
    return Precondition(name, v.relation + (f" ({v.note})" if v.note else ""), _holds(v), v.method)


def _support_pre(name, k: DistributionSpec, m: DistributionSpec) -> Precondition:
    ak, am = st.support(k)[0], st.support(m)[0]
    ok = ak <= am + st.SUPPORT_TOL
    return Precondition(name, f"{ak:g} <= {am:g}" if ok else f"{ak:g} > {am:g}", ok,
                        equal=abs(ak - am) <= st.SUPPORT_TOL)


def _exact_prediction(quantity, vk, vm) -> Prediction:
    return Prediction(quantity, float(vk), float(vm), 0.0, bool(vk <= vm + 1e-12))


def _measured_prediction(quantity, ek, em, z: float = 2.0) -> Prediction:
    se = math.hypot(ek.standard_error, em.standard_error)
    ok = ek.point_estimate <= em.point_estimate + z * se
    return Prediction(quantity, ek.point_estimate, em.point_estimate, se, bool(ok))


def _same_family(q1: QueueSpec, q2: QueueSpec) -> bool:
    return (_scale_family(q1.service, q2.service) is not None
            and _scale_family(q1.arrival, q2.arrival) is not None)


def certify_heuristic_optimality(qa: QueueSpec, qb: QueueSpec, policy: str = "fifo", *,
                                 measure: bool = True, n_transactions: int = 1000, n_runs: int = 10,
                                 seed: int = 0, n_spread: int = 10**5) -> CertificateReport:
    """Evaluate the optimality theorems on a pair of queues, in both orientations.

    Each certificate compares queue k (predicted harder to track) with
    queue m.  An issued certificate carries its predictions: the load
    factor and unit-batch orderings exactly, and the accuracy ordering
    from measurement, which counts as confirmed within 2 joint standard
    errors.
    """
    from ._validation import check_policy

    policy = check_policy(policy)
    labels = {"a": qa, "b": qb}
    cache: dict = {}

    def measured(label):
        if label not in cache:
            cache[label] = estimate_accuracy(labels[label], policy, n_transactions, n_runs, seed)
        return cache[label]

    certs: list[Certificate] = []
    notes: list[str] = []
    both_ps = qa.discipline == qb.discipline == PROCESSOR_SHARING
    both_is = qa.discipline == qb.discipline != PROCESSOR_SHARING
    for k_lab, m_lab in (("a", "b"), ("b", "a")):
        k, m = labels[k_lab], labels[m_lab]
        arr = _st_pre("X_k <=st X_m", m.arrival, k.arrival)
        srv = _st_pre("T_k >=st T_m", k.service, m.service)
        acc_q = f"P^{policy}"
        fresh = []
        if both_is and policy == "fifo":
            v = spread_order(k.service, m.service, n_spread, seed)
            same = v.note == "identical laws"
            spr = Precondition("|V_k| >=st |V_m|", v.relation, True if same else _holds(v), v.method, equal=same)
            fresh.append(Certificate("fifo-load-factor", k_lab, m_lab, [arr, srv, spr],
                                     [_exact_prediction("rho_m <= rho_k", m.load, k.load)]))
            fresh.append(Certificate("unit-batch", k_lab, m_lab, [arr, srv, spr],
                                     [_exact_prediction("P[B_k=1] <= P[B_m=1]",
                                                        unit_batch_prob(k), unit_batch_prob(m))]))
        if both_is and policy == "random":
            sup = _support_pre("alpha_k <= alpha_m", k.service, m.service)
            fresh.append(Certificate("random-load-factor", k_lab, m_lab, [arr, srv, sup],
                                     [_exact_prediction("rho_m <= rho_k", m.load, k.load)]))
            fresh.append(Certificate("unit-batch", k_lab, m_lab, [arr, srv, sup],
                                     [_exact_prediction("P[B_k=1] <= P[B_m=1]",
                                                        unit_batch_prob(k), unit_batch_prob(m))]))
        if both_is and policy == "fifo" and k.poisson_arrivals and m.poisson_arrivals:
            nk, nm = st.scaled(k.service, k.arrival_rate), st.scaled(m.service, m.arrival_rate)
            v = cx_dominated_law(nm, nk)
            cx = Precondition("lambda_m T_m <=cx lambda_k T_k", v.relation, _holds(v), v.method,
                              equal=bool(np.all(np.abs(v.margins) <= 1e-10)))
            # the more variable normalized service (k) is predicted to be the harder queue
            fresh.append(Certificate("fifo-convex", k_lab, m_lab, [cx],
                                     [_exact_prediction("P[B_k=1] <= P[B_m=1]",
                                                        unit_batch_prob(k), unit_batch_prob(m))]))
        if both_ps and policy == "random":
            sup = _support_pre("alpha_k <= alpha_m", k.service, m.service)
            jobs = _st_pre("J_k >=st J_m", k.service, m.service)
            fresh.append(Certificate("ps-random", k_lab, m_lab, [arr, jobs, sup],
                                     [_exact_prediction("rho_m <= rho_k", m.load, k.load),
                                      _exact_prediction("P[B_k=1] <= P[B_m=1]",
                                                        unit_batch_prob(k), unit_batch_prob(m))]))
        if (policy == "random" and k.discipline == PROCESSOR_SHARING
                and m.discipline != PROCESSOR_SHARING):
            sup = _support_pre("alpha_ps <= alpha_inf", k.service, m.service)
            jobs = _st_pre("J_ps >=st T_inf", k.service, m.service)
            fresh.append(Certificate("ps-vs-infinite", k_lab, m_lab, [arr, jobs, sup],
                                     [_exact_prediction("rho_inf <= rho_ps", m.load, k.load),
                                      _exact_prediction("P[B_ps=1] <= P[B_inf=1]",
                                                        unit_batch_prob(k), unit_batch_prob(m))]))
        if both_is and policy in ("fifo", "random") and _same_family(k, m):
            strict = k.load > m.load * (1 + 1e-12)
            pre = [Precondition("same-family scaling", "services and arrivals are scalings of one law", True),
                   Precondition("rho_k > rho_m", f"{k.load:.6g} vs {m.load:.6g}", strict)]
            fresh.append(Certificate("scaled-family", k_lab, m_lab, pre))
        for c in fresh:
            if not c.issued:
                c.predictions = []
            elif measure:
                kk, mm = (c.k, c.m)
                c.predictions.append(_measured_prediction(f"{acc_q}_k <= {acc_q}_m", measured(kk), measured(mm)))
        certs.extend(fresh)
    if (qa.service.kind == qb.service.kind == "weibull" and qa.service.scale == qb.service.scale
            and qa.service.shape != qb.service.shape):
        notes.append("same-scale Weibull services with different shapes have crossing ccdfs at the "
                     "scale parameter, so neither service dominates the other in the usual "
                     "stochastic order and the service precondition cannot hold")
    if policy == "ml":
        notes.append("no optimality theorem covers maximum-likelihood matching")
    return CertificateReport(qa, qb, policy, certs, notes)


def write_certificates_csv(reports: Sequence[CertificateReport], path, extra: dict | None = None,
                           pair_ids: Sequence[str] | None = None) -> None:
    extra = dict(extra or {})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair_id", *CERTIFICATE_FIELDS, *extra])
        for i, rep in enumerate(reports):
            pid = pair_ids[i] if pair_ids is not None else str(i)
            for row in rep.to_rows():
                w.writerow([pid, *(row[f] for f in CERTIFICATE_FIELDS), *extra.values()])


def certificates_text(reports: Sequence[CertificateReport]) -> str:
    buf = io.StringIO()
    for rep in reports:
        buf.write(rep.to_text())
        buf.write("\n")
    return buf.getvalue()
