"""Recompute a run's metrics from its JSONL trace alone.

The reducer reads only the trace lines: the Header, the events and the
closing Report line.  It shares no metric code with the simulator, so a match
is an end-to-end consistency check of both.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction

from .timebase import as_time


class TraceError(ValueError):
    pass


def _t(x):
    return None if x is None else as_time(x)


def _flt(x):
    return None if x is None else float(x)


def read_trace(text_or_lines):
    """Split a trace into (header, events, report); ``report`` may be None."""
    lines = text_or_lines.splitlines() if isinstance(text_or_lines, str) else list(text_or_lines)
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise TraceError("empty trace")
    rows = [json.loads(ln) for ln in lines]
    if rows[0].get("kind") != "Header":
        raise TraceError("trace must start with a Header line")
    report = rows[-1] if rows[-1].get("kind") == "Report" else None
    events = rows[1:-1] if report is not None else rows[1:]
    return rows[0], events, report


def hash_lines(lines) -> str:
    h = hashlib.sha256()
    for ln in lines:
        h.update(ln.encode())
        h.update(b"\n")
    return h.hexdigest()


@dataclass
class _Task:
    app: str
    task: str
    arrival: Fraction
    deadline: object
    cost: Fraction
    min_cost: Fraction
    start: object = None
    finish: object = None
    executed: Fraction = Fraction(0)


def _energy(header, busy_slots, horizon) -> float:
    pm = header["powerModel"]
    exact = float(pm["exponent"]).is_integer()
    if exact:
        static, dyn, e = Fraction(str(pm["static"])), Fraction(str(pm["dynamic"])), int(pm["exponent"])

        def power(f):
            return static + dyn * Fraction(str(f)) ** e
    else:
        static, dyn, e = pm["static"], pm["dynamic"], pm["exponent"]

        def power(f):
            return static + dyn * float(f) ** e

    busy = {p: Fraction(0) for p in header["processors"]}
    for proc, start, end, _f, _task in busy_slots:
        busy[proc] = busy.get(proc, Fraction(0)) + (end - start)
    total = 0
    for proc, start, end, f, _task in sorted(busy_slots, key=lambda s: (str(s[0]), s[1], s[4])):
        total += power(f) * (end - start)
    idle = sum((horizon - b for b in busy.values()), 0)
    if not exact:
        idle = float(idle)
    total += static * idle
    return float(total)


def metrics_from_trace(text_or_lines) -> dict:
    """Scalar metrics and per-task rows, in the same shape as the report line."""
    header, events, _ = read_trace(text_or_lines)
    tasks = {}
    busy_slots = []
    lost_total = Fraction(0)
    failures = rollbacks = 0
    for ev in events:
        kind = ev["kind"]
        if kind == "Arrival":
            key = (ev["app"], ev["task"])
            tasks[key] = _Task(ev["app"], ev["task"], as_time(ev["t"]), _t(ev.get("deadline")),
                               Fraction(str(ev["cost"])), Fraction(str(ev["minCost"])))
        elif kind == "SlotFinish":
            start, end = as_time(ev["start"]), as_time(ev["t"])
            busy_slots.append((ev["proc"], start, end, ev["freq"], ev["task"]))
            if ev.get("copy"):
                continue
            rec = tasks[(ev["app"], ev["task"])]
            rec.executed += as_time(ev["executed"])
            rec.start = start if rec.start is None else min(rec.start, start)
            if ev.get("complete"):
                rec.finish = end if rec.finish is None else max(rec.finish, end)
        elif kind == "Failure":
            failures += 1
            if ev.get("outcome") == "rollback":
                rollbacks += 1
            for tid, amount in (ev.get("lost") or {}).items():
                amount = as_time(amount)
                tasks[(ev["app"], tid)].executed -= amount
                lost_total += amount

    recs = sorted(tasks.values(), key=lambda r: (r.app, r.task))
    for r in recs:
        if r.finish is None or r.start is None:
            raise TraceError(f"task {r.app}/{r.task} never completes in the trace")
    n = len(recs)
    horizon = max([as_time(header.get("energyHorizon") or 0)] + [s[2] for s in busy_slots])
    out = {
        "tasks": n,
        "avgResponse": None,
        "makespan": 0.0,
        "tgr": None,
        "avgTardiness": None,
        "energyJoules": _energy(header, busy_slots, horizon) if (header["processors"] or busy_slots) else 0.0,
        "avgPrecision": None,
        "failuresInjected": failures,
        "rollbacks": rollbacks,
        "lostWork": float(lost_total),
    }
    if n:
        out["avgResponse"] = _flt(sum((r.finish - r.arrival for r in recs), Fraction(0)) / n)
        out["makespan"] = float(max(r.finish for r in recs) - min(r.start for r in recs))
        prec = Fraction(0)
        for r in recs:
            if r.cost == r.min_cost:
                prec += 1
            else:
                prec += 1 - (r.cost - r.executed) / (r.cost - r.min_cost)
        out["avgPrecision"] = float(prec / n)
        if all(r.deadline is not None for r in recs):
            out["tgr"] = float(Fraction(sum(r.finish <= r.deadline for r in recs), n))
            late = sum((max(Fraction(0), r.finish - r.deadline) for r in recs), Fraction(0))
            out["avgTardiness"] = float(late / n)
    out["perTask"] = [
        {"task": r.task, "app": r.app, "a": float(r.arrival), "s": float(r.start), "f": float(r.finish),
         "d": _flt(r.deadline), "executed": float(r.executed)}
        for r in recs
    ]
    return out


def compare_trace(text_or_lines) -> list:
    """Differences between the recomputed metrics and the trace's Report line.

    An empty list means the trace is consistent.  The hash of the Header and
    event lines is checked too.
    """
    lines = text_or_lines.splitlines() if isinstance(text_or_lines, str) else list(text_or_lines)
    lines = [ln for ln in lines if ln.strip()]
    _, _, report = read_trace(lines)
    if report is None:
        return ["trace has no Report line"]
    diffs = []
    if report.get("traceHash") != hash_lines(lines[:-1]):
        diffs.append("traceHash does not match the trace body")
    mine = metrics_from_trace(lines)
    for key, value in mine.items():
        theirs = report.get(key)
        if key == "perTask" and isinstance(theirs, list) and len(theirs) == len(value):
            for a, b in zip(theirs, value):
                if a != b:
                    diffs.append(f"perTask {b['app']}/{b['task']}: report {a} != recomputed {b}")
                    break
        elif theirs != value:
            diffs.append(f"{key}: report {theirs!r} != recomputed {value!r}")
    return diffs
