"""Discrete-event core: ordered event queue, metrics, failures, checkpointing.

``run`` is the single entry point used by the CLI; it picks the simulator for
the policy's workload class and returns the metrics report together with the
processed event trace.
"""
from __future__ import annotations

import hashlib
import heapq
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .timebase import INF, RESOLUTION, as_time, floor_time, to_float

ARRIVAL = "Arrival"
DATA_READY = "DataReady"
SLOT_START = "SlotStart"
SLOT_FINISH = "SlotFinish"
CHECKPOINT_TICK = "CheckpointTick"
FAILURE = "Failure"
DEADLINE_REACHED = "DeadlineReached"

# Processing order at equal timestamps.
KIND_RANK = {
    FAILURE: 0,
    SLOT_FINISH: 1,
    CHECKPOINT_TICK: 2,
    DEADLINE_REACHED: 3,
    ARRIVAL: 4,
    DATA_READY: 4,
    SLOT_START: 5,
}


class SimulationError(RuntimeError):
    pass


class PolicyWorkloadMismatch(ValueError):
    pass


class EmptySet(ValueError):
    pass


class NoDeadline(ValueError):
    pass


@dataclass(frozen=True)
class SimEvent:
    time: Fraction
    seq: int
    kind: str
    payload: dict = field(default_factory=dict, compare=False)

    def sort_key(self):
        return (self.time, KIND_RANK[self.kind], self.seq)

    def to_dict(self) -> dict:
        d = {"t": to_float(self.time), "seq": self.seq, "kind": self.kind}
        d.update(_jsonable(self.payload))
        return d


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


class EventQueue:
    """Min-heap of events ordered by (time, kind rank, sequence number)."""

    def __init__(self):
        self._heap = []
        self._seq = 0
        self.now = Fraction(0)

    def push(self, time, kind, **payload) -> SimEvent:
        if kind not in KIND_RANK:
            raise SimulationError(f"unknown event kind {kind!r}")
        if time < self.now:
            raise SimulationError(f"event {kind} at {time} scheduled in the past (now {self.now})")
        ev = SimEvent(time, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, (ev.sort_key(), ev))
        return ev

    def pop(self) -> SimEvent:
        _, ev = heapq.heappop(self._heap)
        self.now = ev.time
        return ev

    def peek_time(self):
        return self._heap[0][1].time if self._heap else None

    def __len__(self):
        return len(self._heap)

    def kinds(self) -> set:
        return {e.kind for _, e in self._heap}

    def __bool__(self):
        return bool(self._heap)


def trace_lines(header: dict, events) -> list:
    lines = [json.dumps(_jsonable(header), sort_keys=True)]
    lines += [json.dumps(e.to_dict() if isinstance(e, SimEvent) else e, sort_keys=True) for e in events]
    return lines


def trace_hash(lines) -> str:
    h = hashlib.sha256()
    for line in lines:
        h.update(line.encode())
        h.update(b"\n")
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Metrics


@dataclass(frozen=True)
class TaskRecord:
    task_id: str
    app_id: str
    arrival: Fraction
    start: Fraction
    finish: Fraction
    deadline: Optional[Fraction]
    executed: Fraction
    cost: Fraction
    min_cost: Fraction

    @property
    def precision(self) -> Fraction:
        if self.cost == self.min_cost:
            return Fraction(1)
        return 1 - (self.cost - self.executed) / (self.cost - self.min_cost)

    def to_dict(self) -> dict:
        return {
            "task": self.task_id,
            "app": self.app_id,
            "a": to_float(self.arrival),
            "s": to_float(self.start),
            "f": to_float(self.finish),
            "d": to_float(self.deadline),
            "executed": to_float(self.executed),
        }


def _need(records):
    records = list(records)
    if not records:
        raise EmptySet("metric undefined on an empty task set")
    return records


def avg_response(records) -> Fraction:
    records = _need(records)
    return sum((r.finish - r.arrival for r in records), Fraction(0)) / len(records)


def makespan(records) -> Fraction:
    records = _need(records)
    return max(r.finish for r in records) - min(r.start for r in records)


def _deadlines(records):
    records = _need(records)
    if any(r.deadline is None for r in records):
        raise NoDeadline("every task needs a deadline")
    return records


def task_guarantee_ratio(records) -> Fraction:
    """Fraction of tasks with finish <= deadline (meeting it exactly counts)."""
    records = _deadlines(records)
    return Fraction(sum(1 for r in records if r.finish <= r.deadline), len(records))


def avg_tardiness(records) -> Fraction:
    records = _deadlines(records)
    return sum((max(Fraction(0), r.finish - r.deadline) for r in records), Fraction(0)) / len(records)


def avg_precision(records) -> Fraction:
    records = _need(records)
    return sum((r.precision for r in records), Fraction(0)) / len(records)


@dataclass
class MetricsReport:
    tasks: int = 0
    avg_response: Optional[Fraction] = None
    makespan: Fraction = Fraction(0)
    tgr: Optional[Fraction] = None
    avg_tardiness: Optional[Fraction] = None
    energy_joules: float = 0.0
    avg_precision: Optional[Fraction] = None
    failures_injected: int = 0
    rollbacks: int = 0
    lost_work: Fraction = Fraction(0)
    records: list = field(default_factory=list)

    SCALARS = (
        "tasks",
        "avgResponse",
        "makespan",
        "tgr",
        "avgTardiness",
        "energyJoules",
        "avgPrecision",
        "failuresInjected",
        "rollbacks",
        "lostWork",
    )

    @classmethod
    def from_records(cls, records, energy=0.0, failures=0, rollbacks=0, lost_work=Fraction(0)):
        records = sorted(records, key=lambda r: (r.app_id, r.task_id))
        rep = cls(records=records, energy_joules=energy, failures_injected=failures, rollbacks=rollbacks, lost_work=lost_work)
        rep.tasks = len(records)
        if records:
            rep.avg_response = avg_response(records)
            rep.makespan = makespan(records)
            rep.avg_precision = avg_precision(records)
            if all(r.deadline is not None for r in records):
                rep.tgr = task_guarantee_ratio(records)
                rep.avg_tardiness = avg_tardiness(records)
        return rep

    def scalars(self) -> dict:
        return {
            "tasks": self.tasks,
            "avgResponse": to_float(self.avg_response),
            "makespan": to_float(self.makespan),
            "tgr": to_float(self.tgr),
            "avgTardiness": to_float(self.avg_tardiness),
            "energyJoules": float(self.energy_joules),
            "avgPrecision": to_float(self.avg_precision),
            "failuresInjected": self.failures_injected,
            "rollbacks": self.rollbacks,
            "lostWork": to_float(self.lost_work),
        }

    def to_dict(self) -> dict:
        d = self.scalars()
        d["perTask"] = [r.to_dict() for r in self.records]
        return d

    def csv_row(self) -> list:
        s = self.scalars()
        return ["" if s[k] is None else s[k] for k in self.SCALARS]


# ---------------------------------------------------------------------------
# Failures and checkpointing


def failure_times(rate, rng: np.random.Generator):
    """Endless Poisson-process arrival times (grid-rounded)."""
    t = Fraction(0)
    while rate > 0:
        t += max(RESOLUTION, as_time(rng.exponential(1.0 / float(rate))))
        yield t


def inject_failures(rate, horizon, seed) -> list:
    """Failure events of a Poisson process with intensity ``rate`` on [0, horizon]."""
    if rate < 0:
        raise ValueError("failure rate must be >= 0")
    out = []
    if rate == 0:
        return out
    rng = np.random.default_rng(seed)
    for i, t in enumerate(failure_times(rate, rng)):
        if t > horizon:
            break
        out.append(SimEvent(t, i, FAILURE, {}))
    return out


def effective_time(elapsed, interval=None, overhead=0) -> Fraction:
    """Productive time within ``elapsed`` wall time of one execution segment.

    Checkpoints are taken every ``interval`` from the segment start; each one
    (but the implicit one at the start) pauses execution for ``overhead``.
    """
    elapsed = Fraction(elapsed)
    if not interval or not overhead:
        return elapsed
    interval, overhead = Fraction(interval), Fraction(overhead)
    n_full = math.floor(elapsed / interval)
    paused = (n_full - 1) * overhead if n_full >= 1 else 0
    if n_full >= 1:
        paused += min(overhead, elapsed - n_full * interval)
    return elapsed - paused


def wall_time_for(productive, interval=None, overhead=0) -> Fraction:
    """Inverse of ``effective_time``: wall time needed for ``productive`` time."""
    productive = Fraction(productive)
    if not interval or not overhead or productive <= interval:
        return productive
    interval, overhead = Fraction(interval), Fraction(overhead)
    if overhead >= interval:
        raise ValueError("checkpoint overhead must be shorter than the interval")
    q, r = divmod(productive - interval, interval - overhead)
    if r == 0:
        return interval + q * interval
    return interval + q * interval + overhead + r


@dataclass
class MemberProgress:
    """One task of an application during an execution segment."""

    task_id: str
    executed_before: Fraction  # work already secured when the segment began
    target: Fraction  # total work the task must reach
    rate: Fraction  # work units per productive time unit

    def progress(self, segment_start, t, interval=None, overhead=0) -> Fraction:
        eff = effective_time(t - segment_start, interval, overhead)
        return min(self.target, self.executed_before + floor_time(eff * self.rate))

    def finish_time(self, segment_start, interval=None, overhead=0):
        from .timebase import ceil_time

        work = self.target - self.executed_before
        return segment_start + ceil_time(wall_time_for(work / self.rate, interval, overhead))


@dataclass
class CheckpointState:
    """Local checkpoints of one application and its consistent global checkpoint."""

    segment_start: Fraction
    members: list
    interval: Optional[Fraction] = None
    overhead: Fraction = Fraction(0)
    global_time: Fraction = Fraction(0)
    local: dict = field(default_factory=dict)  # task -> (time, executed)

    def __post_init__(self):
        self.global_time = self.segment_start
        for m in self.members:
            self.local[m.task_id] = (self.segment_start, m.executed_before)

    def last_checkpoint(self, t) -> Fraction:
        if not self.interval:
            return self.segment_start
        n = math.floor((t - self.segment_start) / self.interval)
        return self.segment_start + max(0, n) * self.interval

    def advance(self, t) -> None:
        """Record the local checkpoints taken up to ``t`` (grid is wall clock)."""
        g = self.last_checkpoint(t)
        for m in self.members:
            self.local[m.task_id] = (g, m.progress(self.segment_start, g, self.interval, self.overhead))
        self.global_time = min(ts for ts, _ in self.local.values())


@dataclass(frozen=True)
class Rollback:
    checkpoint_time: Fraction
    restored: dict  # task -> executed amount after rollback
    lost: dict  # task -> work lost

    @property
    def lost_work(self) -> Fraction:
        return sum(self.lost.values(), Fraction(0))


def checkpoint_and_rollback(state: CheckpointState, failure_time) -> Rollback:
    """Roll every unfinished member back to the latest checkpoint <= failure_time.

    A member that already completed keeps its persisted result.  A failure at
    the very instant of a checkpoint loses nothing: the checkpoint counts.
    """
    t = as_time(failure_time)
    state.advance(t)
    g = state.global_time
    restored, lost = {}, {}
    for m in state.members:
        now_progress = m.progress(state.segment_start, t, state.interval, state.overhead)
        if now_progress >= m.target and m.finish_time(state.segment_start, state.interval, state.overhead) <= t:
            restored[m.task_id] = m.target
            lost[m.task_id] = Fraction(0)
            continue
        at_g = state.local[m.task_id][1]
        restored[m.task_id] = at_g
        lost[m.task_id] = now_progress - at_g
    return Rollback(g, restored, lost)


# ---------------------------------------------------------------------------
# Orchestration


@dataclass(frozen=True)
class FaultConfig:
    rate: float = 0.0
    checkpoint_interval: Optional[Fraction] = None
    checkpoint_overhead: Fraction = Fraction(0)

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("failure rate must be >= 0")
        if self.checkpoint_interval is not None:
            object.__setattr__(self, "checkpoint_interval", as_time(self.checkpoint_interval))
            if self.checkpoint_interval <= 0:
                raise ValueError("checkpoint interval must be > 0")
        object.__setattr__(self, "checkpoint_overhead", as_time(self.checkpoint_overhead))
        if self.checkpoint_interval is not None and self.checkpoint_overhead >= self.checkpoint_interval:
            raise ValueError("checkpoint overhead must be shorter than the interval")


@dataclass
class Outcome:
    """What a workload-class simulator hands back to ``run``."""

    records: list
    slots: list  # ScheduledSlot with processor set
    events: list  # processed SimEvents in order
    energy_horizon: Fraction = Fraction(0)
    failures: int = 0
    rollbacks: int = 0
    lost_work: Fraction = Fraction(0)
    extra: dict = field(default_factory=dict)


@dataclass
class RunResult:
    report: MetricsReport
    trace: list  # SimEvent list
    header: dict
    outcome: Outcome

    @property
    def lines(self) -> list:
        return trace_lines(self.header, self.trace)

    @property
    def trace_hash(self) -> str:
        return trace_hash(self.lines)

    def trace_jsonl(self) -> str:
        lines = self.lines
        report = {"kind": "Report", "traceHash": trace_hash(lines)}
        report.update(self.report.to_dict())
        return "\n".join(lines + [json.dumps(report, sort_keys=True)]) + "\n"


def compute_energy(platform, slots, horizon) -> float:
    """Busy energy of every slot plus static power over each processor's idle time."""
    from .platform import energy_consumed

    horizon = max([horizon] + [s.finish for s in slots])
    busy = {p.id: Fraction(0) for p in platform.processors}
    for s in slots:
        busy[s.processor] = busy.get(s.processor, Fraction(0)) + s.duration
    idle = [horizon - b for b in busy.values()]
    ordered = sorted(slots, key=lambda s: (str(s.processor), s.start, s.task_id))
    return energy_consumed(platform.power_model, ordered, idle)


def static_events(records, slots, tasks) -> list:
    """Replay a static schedule through the event queue to get an ordered trace."""
    q = EventQueue()
    for t, app in tasks:
        q.push(
            t.arrival,
            ARRIVAL,
            task=t.id,
            app=app,
            cost=t.cost,
            minCost=t.min_cost,
            deadline=t.deadline,
        )
        if t.data_ready > t.arrival:
            q.push(t.data_ready, DATA_READY, task=t.id)
    app_of = {t.id: app for t, app in tasks}
    last_slot = {}
    for s in slots:
        if not s.copy:
            last_slot[s.task_id] = max(last_slot.get(s.task_id, s.finish), s.finish)
    for s in sorted(slots, key=lambda s: (s.start, str(s.processor), s.task_id)):
        app = app_of[s.task_id]
        q.push(s.start, SLOT_START, task=s.task_id, app=app, proc=s.processor, freq=s.frequency, copy=s.copy)
        q.push(
            s.finish,
            SLOT_FINISH,
            task=s.task_id,
            app=app,
            proc=s.processor,
            freq=s.frequency,
            start=s.start,
            executed=s.executed,
            copy=s.copy,
            complete=(not s.copy and s.finish == last_slot[s.task_id]),
        )
    events = []
    while q:
        events.append(q.pop())
    return events


def run(workload, platform, policy, fault_config=None, energy_config="none", seed=0) -> RunResult:
    """Simulate ``workload`` on ``platform`` under ``policy``.

    ``policy`` is a policy string (see ``schedarena.policies``) or a parsed
    ``Policy``.  The returned trace is deterministic for fixed inputs and seed.
    """
    from .policies import parse_policy

    pol = parse_policy(policy) if isinstance(policy, str) else policy
    energy_config = energy_config or "none"
    if energy_config not in ("none", "slack-reclaim", "mfed-ccrt"):
        raise PolicyWorkloadMismatch(f"unknown energy policy {energy_config!r}")
    if fault_config is None or fault_config.rate == 0:
        # nothing can fail, so checkpoints would only cost time
        fault_config = FaultConfig()
    classes = workload.classes
    if classes and classes != {pol.workload_class}:
        raise PolicyWorkloadMismatch(
            f"policy {pol.text!r} schedules {pol.workload_class}, workload has {sorted(classes)}"
        )
    if fault_config.rate > 0 and pol.workload_class != "gangs":
        raise PolicyWorkloadMismatch("failure injection is modelled for gang policies only")
    if energy_config == "mfed-ccrt" and pol.workload_class != "periodic":
        raise PolicyWorkloadMismatch("mfed-ccrt applies to periodic task sets")
    if energy_config == "slack-reclaim" and pol.workload_class not in ("bots", "periodic"):
        raise PolicyWorkloadMismatch("slack-reclaim applies to bag-of-tasks and periodic workloads")

    if workload.is_empty():
        outcome = Outcome([], [], [])
    elif pol.workload_class == "gangs":
        from . import gangsched

        outcome = gangsched.simulate_gangs(workload.gangs, platform, pol, fault_config, seed)
    elif pol.workload_class == "dags":
        from . import dagsched

        outcome = dagsched.run_dags(workload.dags, platform, pol, seed)
    elif pol.workload_class == "bots":
        from . import botsched

        outcome = botsched.run_bots(workload.bots, platform, pol, energy_config, seed)
    else:
        from . import energy

        outcome = energy.run_periodic(workload.periodic, platform, pol, energy_config)

    horizon = max([outcome.energy_horizon] + [s.finish for s in outcome.slots])
    joules = compute_energy(platform, outcome.slots, horizon) if platform.processors or outcome.slots else 0.0
    report = MetricsReport.from_records(
        outcome.records, joules, outcome.failures, outcome.rollbacks, outcome.lost_work
    )
    pm = platform.power_model
    header = {
        "kind": "Header",
        "policy": pol.text,
        "energy": energy_config,
        "seed": seed,
        "processors": [p.id for p in platform.processors],
        "powerModel": {"static": pm.static, "dynamic": pm.dynamic, "exponent": pm.exponent},
        "energyHorizon": to_float(horizon),
    }
    return RunResult(report, outcome.events, header, outcome)
