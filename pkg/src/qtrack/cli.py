"""Command-line interface.

Exit codes: 0 on success, 1 for usage or configuration errors, 2 when a
run fails.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import yaml

from . import stochastics as st
from .accuracy import estimate_accuracies, write_accuracy_csv
from .exceptions import ConfigError, QTrackError
from .experiments import config_from_dict, load_config, run_experiment, task_seed, write_manifest
from .queue_sim import QueueSpec, busy_periods, simulate, write_trace_csv

log = logging.getLogger("qtrack")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _literal(text: str) -> dict:
    """A distribution or queue literal given inline (JSON or YAML) or as @file."""
    if text.startswith("@"):
        text = _read(text[1:])
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise UsageError(f"cannot parse {text!r}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"expected a mapping, got {text!r}")
    return data


def _global_options(parser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="master seed (default 0)")
    parser.add_argument("--out", default=default, help="output directory (default: results)")
    parser.add_argument("--config", default=default, help="YAML experiment config")
    parser.add_argument("--jobs", type=int, default=default, help="worker processes (default 1)")
    parser.add_argument("--format", choices=["csv"], default=default, help="output format")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def _queue_options(parser) -> None:
    parser.add_argument("--arrival", default='{"kind": "exponential", "rate": 1.0}',
                        help="inter-arrival law literal, e.g. '{\"kind\": \"exponential\", \"rate\": 1}'")
    parser.add_argument("--service", default='{"kind": "exponential", "rate": 1.0}',
                        help="service (job-length) law literal, e.g. '{\"kind\": \"weibull\", \"shape\": 1.5, "
                             "\"scale\": 1}'")
    parser.add_argument("--discipline", default="infinite-server",
                        choices=["infinite-server", "processor-sharing"])
    parser.add_argument("--queues", help="YAML file holding a list of queues (overrides --arrival/--service)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qtrack", description="Timestamp-based transaction tracking through queues.")
    _global_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="simulate one queue and export the trace")
    _queue_options(p)
    p.add_argument("-n", "--n-transactions", type=int, default=1000)

    p = sub.add_parser("accuracy", parents=[common], help="estimate tracking accuracy per policy")
    _queue_options(p)
    p.add_argument("--policy", action="append", choices=["fifo", "random", "ml"],
                   help="policy to score (repeatable; default: every applicable policy)")
    p.add_argument("--n-transactions", type=int, default=1000)
    p.add_argument("--n-runs", type=int, default=10)

    p = sub.add_parser("allocate", parents=[common], help="compare allocation strategies on a queue roster")
    p.add_argument("--queues", help="YAML file holding a list of queues")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--policy", choices=["fifo", "random", "ml"], default=None)
    p.add_argument("--n-transactions", type=int, default=None)
    p.add_argument("--n-runs", type=int, default=None)

    p = sub.add_parser("verify", parents=[common], help="issue and check optimality certificates")
    p.add_argument("--n-transactions", type=int, default=None)
    p.add_argument("--n-runs", type=int, default=None)
    p.add_argument("--n-periods", type=int, default=None)

    p = sub.add_parser("experiment", parents=[common], help="run a reference experiment")
    p.add_argument("name", choices=["fig5", "fig6"])
    p.add_argument("--n-transactions", type=int, default=None)
    p.add_argument("--n-runs", type=int, default=None)
    p.add_argument("--n-configs", type=int, default=None, help="fig6 only")
    return parser


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _base_config(args, kind: str) -> dict:
    data: dict = {}
    if getattr(args, "config", None):
        _read(args.config)
        cfg = load_config(args.config)
        if cfg.kind != kind:
            raise ConfigError(f"config kind is {cfg.kind!r} but this command runs {kind!r}", "kind")
        data = cfg.to_dict()
    data["kind"] = kind
    for flag, key in (("seed", "seed"), ("out", "out"), ("jobs", "jobs"), ("format", "format"),
                      ("n_transactions", "n_transactions"), ("n_runs", "n_runs"), ("n_configs", "n_configs"),
                      ("n_periods", "n_periods"), ("budget", "budget"), ("policy", "policy")):
        v = getattr(args, flag, None)
        if v is not None and not isinstance(v, list):
            data[key] = v
    return data


def _queues_from_args(args) -> list[QueueSpec]:
    if getattr(args, "queues", None):
        try:
            items = yaml.safe_load(_read(args.queues))
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse queues: {exc}", args.queues) from None
        if isinstance(items, dict) and "queues" in items:
            items = items["queues"]
        if not isinstance(items, list) or not items:
            raise UsageError(f"{args.queues} must hold a nonempty list of queues")
        try:
            return [QueueSpec.from_dict(q) for q in items]
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid queue: {exc}", args.queues) from None
    try:
        return [QueueSpec(st.from_dict(_literal(args.arrival)), st.from_dict(_literal(args.service)),
                          args.discipline)]
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _out_dir(args, default="results") -> Path:
    out = Path(getattr(args, "out", None) or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    queue = _queues_from_args(args)[0]
    data = _base_config(args, "custom")
    data.update(queues=[queue.to_dict()], budget=1)
    cfg = config_from_dict(data)
    t0 = time.perf_counter()
    trace = simulate(queue, args.n_transactions, rng=st.derive_rng(cfg.seed, 0))
    out = _out_dir(args, cfg.out)
    path = out / "trace.csv"
    write_trace_csv(trace, path, {"config_hash": cfg.config_hash, "seed": cfg.seed})
    write_manifest(out, cfg, [path.name], time.perf_counter() - t0)
    sizes = [bp.size for bp in busy_periods(trace) if bp.complete]
    print(f"wrote {path}: {len(trace)} transactions, {len(sizes)} complete busy periods")
    return 0


def cmd_accuracy(args) -> int:
    queues = _queues_from_args(args)
    policies = args.policy or ["fifo", "random", "ml"]
    data = _base_config(args, "custom")
    data.update(queues=[q.to_dict() for q in queues], policies=list(policies))
    cfg = config_from_dict(data)
    out = _out_dir(args, cfg.out)
    t0 = time.perf_counter()
    rows = []
    for k, q in enumerate(queues):
        usable = [p for p in policies if p != "ml" or (q.service.has_density and q.discipline == "infinite-server")]
        skipped = sorted(set(policies) - set(usable))
        if skipped:
            log.warning("queue %d: skipping %s (needs a service density on an infinite-server queue)", k, skipped)
        ests = estimate_accuracies(q, usable, cfg.n_transactions, cfg.n_runs, task_seed(cfg.seed, 10, k),
                                   max_size=cfg.max_busy_period)
        rows.extend((q.name or str(k), e) for e in ests.values())
    path = out / "accuracy.csv"
    write_accuracy_csv(rows, path, {"config_hash": cfg.config_hash, "seed": cfg.seed})
    write_manifest(out, cfg, [path.name], time.perf_counter() - t0)
    for qid, e in rows:
        print(f"queue {qid} {e.policy:6s} {e.point_estimate:.4f} +/- {e.standard_error:.4f} "
              f"({e.periods_observed} busy periods)")
    return 0


def cmd_allocate(args) -> int:
    data = _base_config(args, "custom")
    if getattr(args, "queues", None):
        data["queues"] = [q.to_dict() for q in _queues_from_args(args)]
    if "queues" not in data or not data["queues"]:
        raise UsageError("allocate needs --queues FILE or a custom config with a queues list")
    data.setdefault("policies", [data.get("policy", "fifo")])
    if data.get("policy", "fifo") not in data["policies"]:
        data["policies"] = [*data["policies"], data["policy"]]
    cfg = config_from_dict(data)
    if cfg.budget > len(cfg.queues):
        raise UsageError(f"budget {cfg.budget} exceeds the number of queues {len(cfg.queues)}")
    res = run_experiment(cfg, _out_dir(args, cfg.out))
    for strategy, selected, obj, overlap in res.allocation_rows:
        print(f"{strategy:12s} selected [{selected}] objective {obj:.4f} overlap {overlap:.2f}")
    return 0


def cmd_verify(args) -> int:
    data = _base_config(args, "verify-order")
    cfg = config_from_dict(data)
    res = run_experiment(cfg, _out_dir(args, cfg.out))
    for name, rep in zip(res.names, res.reports):
        issued = [f"{c.theorem}[k={c.k}]" + {True: "+", False: "!", None: "?"}[c.accuracy_confirmed]
                  for c in rep.issued()]
        print(f"{name}: {', '.join(issued) if issued else 'no certificate'}")
    print(f"report: {res.files.get('report')}")
    return 0


def cmd_experiment(args) -> int:
    data = _base_config(args, args.name)
    cfg = config_from_dict(data)
    res = run_experiment(cfg, _out_dir(args, cfg.out))
    for path in res.files.values():
        print(f"wrote {path}")
    return 0


COMMANDS = {"simulate": cmd_simulate, "accuracy": cmd_accuracy, "allocate": cmd_allocate, "verify": cmd_verify,
            "experiment": cmd_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"qtrack: error: {exc}", file=sys.stderr)
        return 1
    except (QTrackError, ValueError, ArithmeticError, OSError, RuntimeError) as exc:
        print(f"qtrack: run failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
