"""Experiment configuration and the reproducible experiment suites.

Every run is driven by an :class:`ExperimentConfig`.  Work is split into
independent tasks whose random streams are derived from the master seed
and the task's coordinates, so outputs do not depend on how many worker
processes execute them.  Each CSV row carries the config hash and seed.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import yaml

from . import __version__
from . import stochastics as st
from ._validation import check_policy
from .accuracy import (POLICIES, estimate_accuracies, estimate_accuracy, unit_batch_method,
                       unit_batch_prob)
from .allocation import (AllocationProblem, load_factor_allocation, optimal_allocation, overlap_fraction,
                         random_allocation, unit_batch_allocation)
from .exceptions import ConfigError
from .ordering import (CERTIFICATE_FIELDS, busy_period_order_check, certificates_text,
                       certify_heuristic_optimality)
from .queue_sim import QueueSpec

KINDS = ("fig5", "fig6", "verify-order", "custom")
FIG5_RATES = tuple(round(0.5 * i, 10) for i in range(1, 11))
STRATEGY_ORDER = ("optimal", "unit-batch", "load-factor", "random")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun an experiment exactly.

    Fields not used by ``kind`` are ignored.  Defaults follow the
    reference setup: 1000 transactions and 10 runs per estimate, Poisson
    arrivals of rate 1, Weibull shapes (1.0, 1.5, 0.5) for the policy
    comparison, and 10 queues with budget 2 for the allocation study.
    """

    kind: str
    seed: int = 0
    n_transactions: int = 1000
    n_runs: int = 10
    max_busy_period: int = 20
    policies: tuple = POLICIES
    # fig5
    shapes: tuple = (1.0, 1.5, 0.5)
    arrival_rate: float = 1.0
    service_rates: tuple = FIG5_RATES
    # fig6
    n_configs: int = 200
    budget: int = 2
    n_queues: int = 10
    t_max: tuple = (1.0, 2.0, 4.0, 8.0)
    service_rate_low: float = 0.5
    shape_range: tuple = (0.1, 2.0)
    policy: str = "fifo"
    # verify-order
    pairs: tuple = ()
    n_periods: int = 10**5
    # custom
    queues: tuple = ()
    # output
    out: str = "results"
    format: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        _validate(self)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = _plain(v)
        return out

    @property
    def config_hash(self) -> str:
        """Hash of the fields that affect results (not paths or worker counts)."""
        d = {k: v for k, v in self.to_dict().items() if k not in ("out", "jobs", "format")}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _plain(v):
    if isinstance(v, QueueSpec):
        return v.to_dict()
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def _positive_int(cfg, name):
    v = getattr(cfg, name)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(f"{name} must be a positive integer, got {v!r}", name)


def _sorted_grid(cfg, name, positive=True):
    v = getattr(cfg, name)
    if not v:
        raise ConfigError(f"{name} must be a nonempty list", name)
    arr = [float(x) for x in v]
    if positive and min(arr) <= 0:
        raise ConfigError(f"{name} entries must be positive", name)
    if any(b <= a for a, b in zip(arr, arr[1:])):
        raise ConfigError(f"{name} must be sorted in increasing order without repeats", name)


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {cfg.kind!r}", "kind")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {cfg.seed!r}", "seed")
    for name in ("n_transactions", "n_runs", "max_busy_period", "n_configs", "n_queues", "jobs",
                 "n_periods"):
        _positive_int(cfg, name)
    if isinstance(cfg.budget, bool) or not isinstance(cfg.budget, int) or cfg.budget < 0:
        raise ConfigError(f"budget must be a nonnegative integer, got {cfg.budget!r}", "budget")
    if cfg.kind == "fig6" and cfg.budget > cfg.n_queues:
        raise ConfigError("budget exceeds n_queues", "budget")
    try:
        for p in cfg.policies:
            check_policy(p)
        check_policy(cfg.policy)
    except ValueError as exc:
        raise ConfigError(str(exc), "policies") from None
    if not cfg.policies:
        raise ConfigError("policies must be nonempty", "policies")
    # shapes keep their panel order; the sweep grids must be sorted
    if not cfg.shapes or min(cfg.shapes) <= 0:
        raise ConfigError("shapes must be a nonempty list of positive numbers", "shapes")
    _sorted_grid(cfg, "service_rates")
    _sorted_grid(cfg, "t_max")
    if not cfg.arrival_rate > 0:
        raise ConfigError("arrival_rate must be positive", "arrival_rate")
    if not cfg.service_rate_low > 0:
        raise ConfigError("service_rate_low must be positive", "service_rate_low")
    if cfg.kind == "fig6" and min(cfg.t_max) < cfg.service_rate_low:
        raise ConfigError("every t_max must be at least service_rate_low", "t_max")
    lo, hi = cfg.shape_range
    if not 0 < lo <= hi:
        raise ConfigError("shape_range must be [low, high] with 0 < low <= high", "shape_range")
    if cfg.format != "csv":
        raise ConfigError(f"unsupported output format {cfg.format!r}; only csv is available", "format")
    if cfg.kind == "custom" and not cfg.queues:
        raise ConfigError("a custom experiment needs a queues list", "queues")


_LIST_FIELDS = {"policies", "shapes", "service_rates", "t_max", "shape_range"}


def _key_lines(text: str) -> dict:
    """Line numbers (1-based) of the top-level keys of a YAML mapping."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def _parse_queue(item, where) -> QueueSpec:
    if isinstance(item, QueueSpec):
        return item
    try:
        return QueueSpec.from_dict(item)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid queue: {exc}", where) from None


def _parse_pair(item, where) -> dict:
    if not isinstance(item, dict) or not {"a", "b"} <= set(item):
        raise ConfigError("each pair needs queues 'a' and 'b' (and optionally 'policy' and 'name')", where)
    unknown = set(item) - {"a", "b", "policy", "name"}
    if unknown:
        raise ConfigError(f"unexpected pair keys: {sorted(unknown)}", where)
    return {"name": str(item.get("name", "")), "a": _parse_queue(item["a"], where),
            "b": _parse_queue(item["b"], where), "policy": check_policy(item.get("policy", "fifo"))}


def config_from_dict(data: dict, lines: dict | None = None) -> ExperimentConfig:
    """Build a config from a plain mapping, rejecting unknown keys."""
    lines = lines or {}

    def loc(key):
        return f"line {lines[key]} ({key})" if key in lines else key

    if not isinstance(data, dict):
        raise ConfigError("the config must be a mapping of keys to values", "line 1")
    if "kind" not in data:
        raise ConfigError("missing required key 'kind'", "kind")
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}", loc(unknown[0]))
    kwargs = {}
    for key, value in data.items():
        if key in _LIST_FIELDS:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{key} must be a list", loc(key))
            value = tuple(value)
            if key != "policies":
                try:
                    value = tuple(float(v) for v in value)
                except (TypeError, ValueError):
                    raise ConfigError(f"{key} must hold numbers", loc(key)) from None
            else:
                try:
                    value = tuple(check_policy(v) for v in value)
                except ValueError as exc:
                    raise ConfigError(str(exc), loc(key)) from None
        elif key == "queues":
            if not isinstance(value, list):
                raise ConfigError("queues must be a list", loc(key))
            value = tuple(_parse_queue(q, f"{loc(key)}[{i}]") for i, q in enumerate(value))
        elif key == "pairs":
            if not isinstance(value, list):
                raise ConfigError("pairs must be a list", loc(key))
            value = tuple(_parse_pair(p, f"{loc(key)}[{i}]") for i, p in enumerate(value))
        elif key == "policy":
            try:
                value = check_policy(value)
            except ValueError as exc:
                raise ConfigError(str(exc), loc(key)) from None
        elif key in ("arrival_rate", "service_rate_low") and isinstance(value, (int, float)):
            value = float(value)
        kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError as exc:
        raise ConfigError(exc.message, loc(exc.location) if exc.location else None) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    """Parse a YAML config file.  Errors carry the offending line where known."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else None
        raise ConfigError(f"cannot parse config: {getattr(exc, 'problem', exc)}", where) from None
    if data is None:
        raise ConfigError("config is empty; 'kind' is required", "line 1")
    return config_from_dict(data, _key_lines(text))


# task plumbing

def task_seed(seed: int, *keys: int) -> int:
    """A 32-bit integer seed for the task at ``keys``."""
    return int(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]).generate_state(1)[0])


def run_tasks(func: Callable, tasks: Sequence, jobs: int = 1) -> list:
    """Apply ``func`` to every task, in order, on ``jobs`` worker processes."""
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_rows(path, header: Sequence[str], rows: Sequence[Sequence], cfg: ExperimentConfig) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*header, "config_hash", "seed"])
        for r in rows:
            w.writerow([*(_fmt(v) for v in r), cfg.config_hash, cfg.seed])


def write_manifest(out_dir: Path, cfg: ExperimentConfig, outputs: Sequence[str], wall: float,
                   extra: dict | None = None) -> Path:
    import scipy
    import sklearn

    manifest = {
        "kind": cfg.kind,
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "versions": {"qtrack": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__, "scikit-learn": sklearn.__version__, "pyyaml": yaml.__version__},
        "wall_time_seconds": round(wall, 3),
        "jobs": cfg.jobs,
        "outputs": list(outputs),
        "accuracy_weighting": "period-pooled",
    }
    manifest.update(extra or {})
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# fig5: matching policies on a single queue

@dataclass
class Fig5Result:
    rows: list  # (shape, service_rate, scale, policy, estimate, stderr, periods, oversized, unit_batch, method, agreement)
    files: dict = field(default_factory=dict)

    def value(self, shape, rate, policy, column="estimate"):
        idx = FIG5_HEADER.index(column)
        for r in self.rows:
            if math.isclose(r[0], shape) and math.isclose(r[1], rate) and r[3] == policy:
                return r[idx]
        raise KeyError((shape, rate, policy))

    def panel(self, shape, policy, column="estimate") -> np.ndarray:
        idx = FIG5_HEADER.index(column)
        rs = sorted((r for r in self.rows if math.isclose(r[0], shape) and r[3] == policy), key=lambda r: r[1])
        return np.array([r[idx] for r in rs], dtype=float)


FIG5_HEADER = ["shape", "service_rate", "scale", "policy", "estimate", "stderr", "periods", "oversized",
               "unit_batch", "unit_batch_method", "ml_fifo_agreement"]


def _fig5_task(task):
    shape, rate, cfg_d = task
    policies = cfg_d["policies"]
    service = st.weibull_with_rate(shape, rate)
    queue = QueueSpec(st.exponential(cfg_d["arrival_rate"]), service)
    if "ml" in policies and not service.has_density:
        policies = [p for p in policies if p != "ml"]
    # one seed for the whole sweep: neighbouring grid points share arrival and uniform streams
    ests = estimate_accuracies(queue, policies, cfg_d["n_transactions"], cfg_d["n_runs"],
                               task_seed(cfg_d["seed"], 5), max_size=cfg_d["max_busy_period"])
    p1 = unit_batch_prob(queue)
    method = unit_batch_method(queue)
    rows = []
    for p in policies:
        e = ests[p]
        agree = ""
        if p == "ml":
            scored = e.periods_observed - e.oversized_periods
            singles = e.by_size.get(1, (0.0, 0))[1]
            agree = (e.ml_agree_fifo + singles) / scored if scored else 1.0
        rows.append([shape, rate, service.scale, p, e.point_estimate, e.standard_error, e.periods_observed,
                     e.oversized_periods, p1, method, agree])
    return rows


def run_fig5(cfg: ExperimentConfig, out_dir=None) -> Fig5Result:
    """Accuracy of each policy against service rate, one panel per Weibull shape."""
    tasks = [(float(w), float(r), _task_dict(cfg)) for w in cfg.shapes for r in cfg.service_rates]
    chunks = run_tasks(_fig5_task, tasks, cfg.jobs)
    rows = [r for chunk in chunks for r in chunk]
    res = Fig5Result(rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / "fig5_accuracy.csv", FIG5_HEADER, rows, cfg)
        (out / "fig5_plot.json").write_text(json.dumps(_fig5_plot(cfg, res), indent=1, sort_keys=True) + "\n")
        res.files = {"csv": str(out / "fig5_accuracy.csv"), "plot": str(out / "fig5_plot.json")}
    return res


def _task_dict(cfg: ExperimentConfig) -> dict:
    return {"policies": list(cfg.policies), "arrival_rate": cfg.arrival_rate, "n_transactions": cfg.n_transactions,
            "n_runs": cfg.n_runs, "seed": cfg.seed, "max_busy_period": cfg.max_busy_period,
            "policy": cfg.policy, "n_queues": cfg.n_queues, "budget": cfg.budget,
            "service_rate_low": cfg.service_rate_low, "shape_range": list(cfg.shape_range)}


def _fig5_plot(cfg, res: Fig5Result) -> dict:
    panels = []
    for w in cfg.shapes:
        pol = [p for p in cfg.policies if any(r[3] == p and math.isclose(r[0], w) for r in res.rows)]
        panels.append({
            "shape": w,
            "service_rate": list(cfg.service_rates),
            "accuracy": {p: res.panel(w, p).tolist() for p in pol},
            "stderr": {p: res.panel(w, p, "stderr").tolist() for p in pol},
            "unit_batch": res.panel(w, pol[0], "unit_batch").tolist(),
        })
    return {"config_hash": cfg.config_hash, "seed": cfg.seed, "x_label": "service rate",
            "y_label": "tracking accuracy", "panels": panels}


# fig6: allocation strategies over random rosters

FIG6_CONFIG_HEADER = ["t_max", "config_id", "strategy", "objective", "ratio_to_optimal", "overlap_with_optimal",
                      "selected_ids"]
FIG6_QUEUE_HEADER = ["t_max", "config_id", "queue_id", "service_rate", "shape", "load", "unit_batch",
                     "accuracy", "stderr"]
FIG6_SUMMARY_HEADER = ["t_max", "strategy", "mean_objective", "stderr", "mean_ratio", "ratio_stderr",
                       "mean_overlap", "overlap_stderr", "n_configs"]
FIG6_PAIRED_HEADER = ["t_max", "comparison", "mean_difference", "stderr", "t_statistic"]
PAIRED_COMPARISONS = (("optimal", "unit-batch"), ("unit-batch", "load-factor"), ("load-factor", "random"),
                      ("optimal", "random"), ("unit-batch", "random"))


def random_roster(rng: np.random.Generator, n_queues: int, t_max: float, rate_low: float,
                  shape_range, arrival_rate: float = 1.0) -> list[QueueSpec]:
    """Queues with Weibull services whose rates and shapes are drawn uniformly."""
    rates = rng.uniform(rate_low, t_max, n_queues)
    shapes = rng.uniform(shape_range[0], shape_range[1], n_queues)
    arrival = st.exponential(arrival_rate)
    return [QueueSpec(arrival, st.weibull_with_rate(float(w), float(mu)), name=f"q{k}")
            for k, (mu, w) in enumerate(zip(rates, shapes))]


def _fig6_task(task):
    ti, t_max, c, d = task
    queues = random_roster(st.derive_rng(d["seed"], 6, ti, c), d["n_queues"], t_max, d["service_rate_low"],
                           d["shape_range"], d["arrival_rate"])
    ests = [estimate_accuracy(q, d["policy"], d["n_transactions"], d["n_runs"], task_seed(d["seed"], 6, ti, c, k),
                              max_size=d["max_busy_period"]) for k, q in enumerate(queues)]
    p1 = [unit_batch_prob(q) for q in queues]
    problem = AllocationProblem(tuple(queues), d["budget"], tuple(ests))
    results = {
        "optimal": optimal_allocation(problem),
        "unit-batch": unit_batch_allocation(problem, p1),
        "load-factor": load_factor_allocation(problem),
        "random": random_allocation(problem, rng=st.derive_rng(d["seed"], 7, ti, c)),
    }
    opt = results["optimal"]
    cfg_rows = []
    for s in STRATEGY_ORDER:
        r = results[s]
        cfg_rows.append([t_max, c, s, r.objective, r.objective / opt.objective, overlap_fraction(r, opt),
                         ";".join(str(i) for i in r.selected)])
    q_rows = [[t_max, c, k, q.service_rate, q.service.shape, q.load, p1[k], e.point_estimate, e.standard_error]
              for k, (q, e) in enumerate(zip(queues, ests))]
    return cfg_rows, q_rows


@dataclass
class Fig6Result:
    config_rows: list
    queue_rows: list
    summary_rows: list
    paired_rows: list
    files: dict = field(default_factory=dict)

    def per_config(self, t_max, strategy, column="objective") -> np.ndarray:
        idx = FIG6_CONFIG_HEADER.index(column)
        rs = sorted((r for r in self.config_rows if math.isclose(r[0], t_max) and r[2] == strategy),
                    key=lambda r: r[1])
        return np.array([r[idx] for r in rs], dtype=float)

    def summary(self, t_max, strategy, column="mean_objective") -> float:
        idx = FIG6_SUMMARY_HEADER.index(column)
        for r in self.summary_rows:
            if math.isclose(r[0], t_max) and r[1] == strategy:
                return r[idx]
        raise KeyError((t_max, strategy))

    def paired(self, t_max, a, b) -> tuple[float, float]:
        name = f"{a} - {b}"
        for r in self.paired_rows:
            if math.isclose(r[0], t_max) and r[1] == name:
                return r[2], r[3]
        raise KeyError((t_max, name))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size < 2:
        return float(x.mean()), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def run_fig6(cfg: ExperimentConfig, out_dir=None) -> Fig6Result:
    """Mean objective, ratio to optimal and overlap with optimal for each allocation strategy."""
    d = _task_dict(cfg)
    tasks = [(ti, float(t), c, d) for ti, t in enumerate(cfg.t_max) for c in range(cfg.n_configs)]
    parts = run_tasks(_fig6_task, tasks, cfg.jobs)
    config_rows = [r for cr, _ in parts for r in cr]
    queue_rows = [r for _, qr in parts for r in qr]
    res = Fig6Result(config_rows, queue_rows, [], [])
    for t in cfg.t_max:
        for s in STRATEGY_ORDER:
            obj = _mean_se(res.per_config(t, s))
            ratio = _mean_se(res.per_config(t, s, "ratio_to_optimal"))
            ov = _mean_se(res.per_config(t, s, "overlap_with_optimal"))
            res.summary_rows.append([float(t), s, obj[0], obj[1], ratio[0], ratio[1], ov[0], ov[1], cfg.n_configs])
        for a, b in PAIRED_COMPARISONS:
            diff = res.per_config(t, a) - res.per_config(t, b)
            m, se = _mean_se(diff)
            tstat = m / se if se and se > 0 else (math.inf if m > 0 else (0.0 if m == 0 else -math.inf))
            res.paired_rows.append([float(t), f"{a} - {b}", m, se, tstat])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {"configs": "fig6_configs.csv", "queues": "fig6_queues.csv", "summary": "fig6_summary.csv",
                 "paired": "fig6_paired.csv", "plot": "fig6_plot.json"}
        write_rows(out / files["configs"], FIG6_CONFIG_HEADER, config_rows, cfg)
        write_rows(out / files["queues"], FIG6_QUEUE_HEADER, queue_rows, cfg)
        write_rows(out / files["summary"], FIG6_SUMMARY_HEADER, res.summary_rows, cfg)
        write_rows(out / files["paired"], FIG6_PAIRED_HEADER, res.paired_rows, cfg)
        plot = {"config_hash": cfg.config_hash, "seed": cfg.seed, "t_max": list(cfg.t_max),
                "objective": {s: [res.summary(t, s) for t in cfg.t_max] for s in STRATEGY_ORDER},
                "ratio_to_optimal": {s: [res.summary(t, s, "mean_ratio") for t in cfg.t_max] for s in STRATEGY_ORDER},
                "overlap_with_optimal": {s: [res.summary(t, s, "mean_overlap") for t in cfg.t_max]
                                         for s in STRATEGY_ORDER}}
        (out / files["plot"]).write_text(json.dumps(plot, indent=1, sort_keys=True) + "\n")
        res.files = {k: str(out / v) for k, v in files.items()}
    return res


# verify-order: theorem certificates over a roster of queue pairs

def default_pairs() -> tuple:
    """Pairs that exercise each certificate, its counterexamples and the identical case."""
    poisson = st.exponential(1.0)

    def q(service, discipline="infinite-server"):
        return QueueSpec(poisson, service, discipline)

    return (
        {"name": "scaled-exponential", "a": q(st.exponential(1.0)), "b": q(st.exponential(2.0)), "policy": "fifo"},
        {"name": "scaled-exponential-random", "a": q(st.exponential(1.0)), "b": q(st.exponential(2.0)),
         "policy": "random"},
        {"name": "deterministic-vs-exponential", "a": q(st.deterministic(1.0)), "b": q(st.exponential(1.0)),
         "policy": "fifo"},
        {"name": "deterministic-vs-uniform", "a": q(st.deterministic(1.5)), "b": q(st.uniform(0.0, 2.0)),
         "policy": "random"},
        {"name": "weibull-shape-2-vs-8", "a": q(st.weibull(2.0, 1.0)), "b": q(st.weibull(8.0, 1.0)),
         "policy": "fifo"},
        {"name": "processor-sharing", "a": q(st.exponential(mean=0.8), "processor-sharing"),
         "b": q(st.exponential(mean=0.4), "processor-sharing"), "policy": "random"},
        {"name": "processor-sharing-vs-infinite-server", "a": q(st.exponential(mean=0.8), "processor-sharing"),
         "b": q(st.exponential(mean=0.4)), "policy": "random"},
        {"name": "identical", "a": q(st.exponential(1.0)), "b": q(st.exponential(1.0)), "policy": "fifo"},
    )


def default_busy_period_checks() -> tuple:
    poisson = st.exponential(1.0)
    return (
        ("faster-arrivals-slower-service", QueueSpec(poisson, st.exponential(1.0)),
         QueueSpec(st.exponential(0.5), st.exponential(2.0))),
        ("exponential-vs-deterministic", QueueSpec(poisson, st.exponential(1.0)),
         QueueSpec(poisson, st.deterministic(1.0))),
        ("deterministic-vs-exponential", QueueSpec(poisson, st.deterministic(1.0)),
         QueueSpec(poisson, st.exponential(1.0))),
        ("identical", QueueSpec(poisson, st.exponential(1.0)), QueueSpec(poisson, st.exponential(1.0))),
    )


def _verify_task(task):
    i, pair, d = task
    return certify_heuristic_optimality(pair["a"], pair["b"], pair["policy"], n_transactions=d["n_transactions"],
                                        n_runs=d["n_runs"], seed=task_seed(d["seed"], 8, i))


def _bp_task(task):
    i, (name, qa, qb), d = task
    v = busy_period_order_check(qa, qb, d["n_periods"], seed=task_seed(d["seed"], 9, i))
    return [name, "B_a >=st B_b", v.relation, v.worst_margin, v.band]


@dataclass
class VerifyResult:
    reports: list
    names: list
    busy_period_rows: list
    files: dict = field(default_factory=dict)


def run_verify(cfg: ExperimentConfig, out_dir=None) -> VerifyResult:
    pairs = cfg.pairs or default_pairs()
    d = {**_task_dict(cfg), "n_periods": cfg.n_periods}
    reports = run_tasks(_verify_task, [(i, p, d) for i, p in enumerate(pairs)], cfg.jobs)
    names = [p["name"] or str(i) for i, p in enumerate(pairs)]
    bp_rows = run_tasks(_bp_task, [(i, c, d) for i, c in enumerate(default_busy_period_checks())]
                        if not cfg.pairs else [], cfg.jobs)
    res = VerifyResult(reports, names, bp_rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = [[names[i], *(row[f] for f in CERTIFICATE_FIELDS)]
                for i, rep in enumerate(reports) for row in rep.to_rows()]
        write_rows(out / "certificates.csv", ["pair", *CERTIFICATE_FIELDS], rows, cfg)
        text = "".join(f"[{n}]\n{certificates_text([r])}" for n, r in zip(names, reports))
        (out / "certificates.txt").write_text(text)
        files = {"certificates": str(out / "certificates.csv"), "report": str(out / "certificates.txt")}
        if bp_rows:
            write_rows(out / "busy_period_orders.csv", ["check", "relation_tested", "verdict", "worst_margin",
                                                        "band"], bp_rows, cfg)
            files["busy_periods"] = str(out / "busy_period_orders.csv")
        res.files = files
    return res


# custom: accuracy table and allocation comparison for a given roster

def _custom_task(task):
    k, queue, d = task
    policies = [p for p in d["policies"] if p != "ml" or (queue.service.has_density
                                                          and queue.discipline != "processor-sharing")]
    ests = estimate_accuracies(queue, policies, d["n_transactions"], d["n_runs"], task_seed(d["seed"], 10, k),
                               max_size=d["max_busy_period"])
    return ests, unit_batch_prob(queue)


@dataclass
class CustomResult:
    accuracy_rows: list
    allocation_rows: list
    files: dict = field(default_factory=dict)


def run_custom(cfg: ExperimentConfig, out_dir=None) -> CustomResult:
    d = _task_dict(cfg)
    queues = list(cfg.queues)
    parts = run_tasks(_custom_task, [(k, q, d) for k, q in enumerate(queues)], cfg.jobs)
    acc_rows = []
    for k, (ests, p1) in enumerate(parts):
        for p, e in ests.items():
            acc_rows.append([queues[k].name or k, p, e.point_estimate, e.standard_error, e.periods_observed,
                             e.oversized_periods, queues[k].load, p1])
    alloc_rows = []
    if cfg.budget <= len(queues) and cfg.policy in parts[0][0]:
        ids = tuple(q.name or str(k) for k, q in enumerate(queues))
        problem = AllocationProblem(tuple(queues), cfg.budget, tuple(e[cfg.policy] for e, _ in parts), ids)
        opt = optimal_allocation(problem)
        for r in (opt, unit_batch_allocation(problem, [p for _, p in parts]), load_factor_allocation(problem),
                  random_allocation(problem, rng=st.derive_rng(cfg.seed, 11))):
            alloc_rows.append([r.strategy, ";".join(map(str, r.selected)), r.objective, overlap_fraction(r, opt)])
    res = CustomResult(acc_rows, alloc_rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / "accuracy.csv", ["queue_id", "policy", "estimate", "stderr", "periods", "oversized",
                                          "load", "unit_batch"], acc_rows, cfg)
        files = {"accuracy": str(out / "accuracy.csv")}
        if alloc_rows:
            write_rows(out / "allocation.csv", ["strategy", "selected_ids", "objective", "overlap_with_optimal"],
                       alloc_rows, cfg)
            files["allocation"] = str(out / "allocation.csv")
        res.files = files
    return res


RUNNERS = {"fig5": run_fig5, "fig6": run_fig6, "verify-order": run_verify, "custom": run_custom}


def run_experiment(cfg: ExperimentConfig, out_dir=None):
    """Run ``cfg`` and write its outputs and manifest under ``out_dir`` (default ``cfg.out``)."""
    out = Path(cfg.out if out_dir is None else out_dir)
    t0 = time.perf_counter()
    res = RUNNERS[cfg.kind](cfg, out)
    wall = time.perf_counter() - t0
    extra = {}
    if cfg.kind == "fig5":
        extra["service_rate_grid"] = list(cfg.service_rates)
    write_manifest(out, cfg, sorted(os.path.basename(p) for p in res.files.values()), wall, extra)
    return res
