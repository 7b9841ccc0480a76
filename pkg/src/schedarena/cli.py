"""Command line: ``schedarena run | gen | report``.

Exit codes: 0 ok, 2 bad configuration, 3 policy does not fit the workload,
4 a trace disagrees with its embedded report.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import statistics
import sys
import tempfile
from datetime import datetime, timezone

from .engine import EmptySet, FaultConfig, MetricsReport, PolicyWorkloadMismatch, run
from .engine import NoDeadline as EngineNoDeadline
from .platform import PlatformError, load_platform
from .policies import PolicyParseError, parse_policy
from .report import TraceError, compare_trace, metrics_from_trace
from .workload import (
    NoDeadline,
    Workload,
    WorkloadError,
    gen_bots,
    gen_dags,
    gen_gangs,
    load_workload,
    workload_to_dict,
)

EXIT_CONFIG = 2
EXIT_MISMATCH = 3
EXIT_REPORT = 4

SCALARS = MetricsReport.SCALARS


class ConfigError(ValueError):
    pass


def _mismatch_errors():
    from .botsched import Infeasible, NeedTwoProcessors
    from .energy import MandatoryOverload
    from .gangsched import GangTooLarge

    return (PolicyWorkloadMismatch, NoDeadline, EngineNoDeadline, EmptySet, GangTooLarge,
            NeedTwoProcessors, MandatoryOverload, Infeasible)


# ---------------------------------------------------------------------------
# Generator specs: "kind:key=value,key=value"


GEN_KEYS = {
    "gangs": {"count": 5, "size": "randint:1:4", "cost": "uniform:1:10", "arrival": "poisson:1",
              "maxsize": None, "mandatory": 1, "deadline": None},
    "dags": {"count": 1, "layers": 3, "fanout": 2, "cost": "uniform:1:10", "ccr": 1.0, "slack": None,
             "mandatory": 1},
    "bots": {"count": 1, "tasks": 4, "procs": 2, "h": 0.5, "cost": "uniform:1:10", "deadline": None,
             "acf": 1},
}


def parse_gen_spec(text: str):
    kind, _, rest = text.partition(":")
    if kind not in GEN_KEYS:
        raise ConfigError(f"unknown generator {kind!r}; use one of {sorted(GEN_KEYS)}")
    params = dict(GEN_KEYS[kind])
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq or key not in params:
            raise ConfigError(f"bad generator parameter {item!r}; {kind} takes {sorted(params)}")
        params[key] = val
    return kind, params


def _opt(v, conv):
    return None if v is None else conv(v)


def generate(text: str, seed: int) -> Workload:
    kind, p = parse_gen_spec(text)
    try:
        if kind == "gangs":
            return Workload(gangs=gen_gangs(int(p["count"]), p["size"], p["cost"], p["arrival"], seed,
                                            max_size=_opt(p["maxsize"], int), mandatory_fraction=float(p["mandatory"]),
                                            deadline_factor=_opt(p["deadline"], float)))
        if kind == "dags":
            return Workload(dags=gen_dags(int(p["count"]), int(p["layers"]), int(p["fanout"]), p["cost"],
                                          float(p["ccr"]), _opt(p["slack"], float), seed,
                                          mandatory_fraction=float(p["mandatory"])))
        return Workload(bots=gen_bots(int(p["count"]), int(p["tasks"]), float(p["h"]), seed,
                                      processors=int(p["procs"]), cost_distribution=p["cost"],
                                      deadline_factor=_opt(p["deadline"], float), actual_cost_factor=float(p["acf"])))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, WorkloadError):
            raise
        raise ConfigError(f"bad generator spec {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# Helpers


def parse_seeds(text) -> list:
    """``"3"``, ``"1,2,5"`` or an inclusive range ``"0-4"``."""
    if text is None:
        text = os.environ.get("SCHEDARENA_SEED", "0")
    seeds = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if "-" in part[1:]:
                lo, hi = part.split("-", 1) if not part.startswith("-") else (None, None)
                seeds.extend(range(int(lo), int(hi) + 1))
            elif part:
                seeds.append(int(part))
    except (TypeError, ValueError):
        raise ConfigError(f"bad seed list {text!r}") from None
    if not seeds:
        raise ConfigError("seed list is empty")
    return seeds


def write_atomic(path, text: str) -> None:
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(["" if v is None else v for v in r])
    return buf.getvalue()


def aggregate(reports) -> dict:
    """Mean and sample standard deviation of every scalar over ``reports``."""
    out = {}
    for key in SCALARS:
        vals = [r[key] for r in reports if r.get(key) is not None]
        if not vals:
            out[key] = {"mean": None, "std": None}
            continue
        out[key] = {"mean": statistics.fmean(vals), "std": statistics.stdev(vals) if len(vals) > 1 else None}
    return out


def _aggregate_rows(names, reports):
    agg = aggregate(reports)
    rows = [["run"] + list(SCALARS)]
    rows += [[n] + [r.get(k) for k in SCALARS] for n, r in zip(names, reports)]
    rows.append(["mean"] + [agg[k]["mean"] for k in SCALARS])
    rows.append(["std"] + [agg[k]["std"] for k in SCALARS])
    return rows, agg


def _extras(outcome) -> dict:
    out = {}
    for key in ("mandatoryMisses", "bypass", "migrations"):
        if key in outcome.extra:
            out[key] = outcome.extra[key]
    return out


# ---------------------------------------------------------------------------
# Subcommands


def cmd_run(args) -> int:
    if (args.workload is None) == (args.gen is None):
        raise ConfigError("give exactly one of --workload and --gen")
    parse_policy(args.policy)
    platform = load_platform(args.platform)
    seeds = parse_seeds(args.seeds)
    fc = FaultConfig(args.fault_lambda, args.checkpoint_interval, args.checkpoint_overhead)
    fixed = load_workload(args.workload) if args.workload else None
    if args.gen:
        parse_gen_spec(args.gen)
    os.makedirs(args.out, exist_ok=True)

    reports, names = [], []
    for seed in seeds:
        workload = fixed if fixed is not None else generate(args.gen, seed)
        result = run(workload, platform, args.policy, fc, energy_config=args.energy, seed=seed)
        rep = result.report.to_dict()
        metrics = {"seed": seed, "policy": args.policy, "energy": args.energy, "traceHash": result.trace_hash}
        metrics.update(rep)
        metrics.update(_extras(result.outcome))
        d = os.path.join(args.out, f"seed-{seed}")
        os.makedirs(d, exist_ok=True)
        write_atomic(os.path.join(d, "metrics.json"), json.dumps(metrics, indent=1, sort_keys=True) + "\n")
        write_atomic(os.path.join(d, "metrics.csv"),
                     _csv([list(SCALARS), [rep[k] for k in SCALARS]]))
        if args.trace:
            write_atomic(os.path.join(d, "trace.jsonl"), result.trace_jsonl())
        echo = {
            "platform": args.platform,
            "workload": args.workload,
            "gen": args.gen,
            "policy": args.policy,
            "seed": seed,
            "faultLambda": args.fault_lambda,
            "checkpointInterval": args.checkpoint_interval,
            "checkpointOverhead": args.checkpoint_overhead,
            "energy": args.energy,
            "trace": args.trace,
            "metadata": {"writtenAt": datetime.now(timezone.utc).isoformat()},
        }
        write_atomic(os.path.join(d, "config.echo.json"), json.dumps(echo, indent=1, sort_keys=True) + "\n")
        reports.append(rep)
        names.append(f"seed-{seed}")

    rows, agg = _aggregate_rows(names, reports)
    write_atomic(os.path.join(args.out, "aggregate.json"),
                 json.dumps({"seeds": seeds, "aggregate": agg}, indent=1, sort_keys=True) + "\n")
    write_atomic(os.path.join(args.out, "aggregate.csv"), _csv(rows))
    _emit(rows, {"seeds": seeds, "runs": dict(zip(names, reports)), "aggregate": agg}, args.format)
    return 0


def _emit(rows, obj, fmt):
    if fmt == "csv":
        sys.stdout.write(_csv(rows))
    else:
        sys.stdout.write(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def cmd_gen(args) -> int:
    seed = parse_seeds(args.seed)[0]
    workload = generate(args.spec, seed)
    text = json.dumps(workload_to_dict(workload), indent=1, sort_keys=True) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(args.out, text)
    return 0


def cmd_report(args) -> int:
    reports, names, failed = [], [], False
    for path in args.traces:
        with open(path) as fh:
            text = fh.read()
        try:
            diffs = compare_trace(text)
        except (TraceError, KeyError, ValueError) as exc:
            diffs = [f"unreadable trace: {exc}"]
        if diffs:
            failed = True
            for d in diffs:
                print(f"{path}: {d}", file=sys.stderr)
            continue
        reports.append(metrics_from_trace(text))
        names.append(path)
    if failed:
        return EXIT_REPORT
    rows, agg = _aggregate_rows(names, reports)
    runs = {n: {k: r[k] for k in SCALARS} for n, r in zip(names, reports)}
    _emit(rows, {"runs": runs, "aggregate": agg}, args.format)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="schedarena", description="Seeded scheduling experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a workload under a policy for one or more seeds")
    r.add_argument("--platform", required=True, help="platform JSON file")
    r.add_argument("--workload", help="workload JSON file")
    r.add_argument("--gen", help="generator spec instead of a workload file, e.g. dags:count=2,layers=3")
    r.add_argument("--policy", required=True)
    r.add_argument("--seeds", default=None, help="e.g. 0-4 or 1,2,7 (default $SCHEDARENA_SEED or 0)")
    r.add_argument("--fault-lambda", type=float, default=0.0)
    r.add_argument("--checkpoint-interval", type=float, default=None)
    r.add_argument("--checkpoint-overhead", type=float, default=0.0)
    r.add_argument("--energy", choices=("none", "slack-reclaim", "mfed-ccrt"), default="none")
    r.add_argument("--out", default="out")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--trace", action="store_true", help="also write trace.jsonl per seed")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gen", help="write a synthetic workload file")
    g.add_argument("spec", help="e.g. bots:tasks=3,procs=2 or gangs:count=10,size=randint:1:4")
    g.add_argument("--seed", default=None)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    p = sub.add_parser("report", help="recompute metrics from traces and check them")
    p.add_argument("traces", nargs="+")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _mismatch_errors() as exc:
        print(f"schedarena: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (ConfigError, PolicyParseError, WorkloadError, PlatformError, OSError, ValueError, KeyError) as exc:
        print(f"schedarena: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
