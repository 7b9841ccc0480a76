"""DVFS: slack reclamation and MFED with CC-RT-DVFS for periodic tasks.

Periodic jobs have a mandatory and an optional part and are due at the next
release.  MFED runs preemptively: every pending mandatory part (EDF among
them) before any optional part (EDF among those); an optional part still
running at its deadline is dropped.

Frequency settings for the periodic simulator:

* ``none``: everything at full speed.
* ``slack-reclaim``: mandatory parts share the unused worst-case time of
  earlier-finishing higher-priority jobs (an alpha queue that tracks the
  full-speed worst-case EDF schedule); optional parts run at full speed.
* ``mfed-ccrt``: mandatory parts run at the cycle-conserving level (sum of
  utilisations, mandatory plus optional, worst case until the parts
  complete, actual afterwards);
  the optional part of a job is stretched into the slack its mandatory
  part left behind.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .engine import Outcome, TaskRecord, static_events
from .platform import ScheduledSlot, pick_level
from .timebase import ceil_time, floor_time
from .workload import PeriodicTask, Task


class MandatoryOverload(ValueError):
    pass


@dataclass
class SlackLedger:
    """Processor-local slack: generated by early completions, spent by stretching."""

    slack: Fraction = Fraction(0)
    generated: Fraction = Fraction(0)
    spent: Fraction = Fraction(0)
    entries: list = field(default_factory=list)  # (task, worst case, actual)

    def credit(self, task_id, worst, actual, amount=None) -> None:
        amount = worst - actual if amount is None else amount
        self.entries.append((task_id, worst, actual))
        self.slack += amount
        self.generated += amount

    def debit(self, amount) -> None:
        if amount > self.slack:
            raise ValueError("cannot spend more slack than available")
        self.slack -= amount
        self.spent += amount


def reclaim_slack(ledger: SlackLedger, worst_duration, frequency_levels, latest_finish=None, start=0) -> Fraction:
    """Frequency for the next task given the slack in ``ledger``.

    Picks the smallest level >= D / (D + S); if the stretched worst case
    would end after ``latest_finish`` a higher level is used.  The stretch
    D/f - D is debited from the ledger.
    """
    D = Fraction(worst_duration)
    S = ledger.slack
    f = pick_level(frequency_levels, D / (D + S)) if S > 0 else Fraction(1)
    if latest_finish is not None and start + ceil_time(D / f) > latest_finish:
        room = latest_finish - start
        f = pick_level(frequency_levels, D / room) if room > 0 else Fraction(1)
        if start + ceil_time(D / f) > latest_finish:
            f = Fraction(1)
    ledger.debit(min(ledger.slack, ceil_time(D / f) - D))
    return f


def hyperperiod(tasks) -> Fraction:
    """Least common multiple of the (rational) periods."""
    periods = [Fraction(t.period) for t in tasks]
    if not periods:
        return Fraction(0)
    num = math.lcm(*(p.numerator for p in periods))
    den = math.gcd(*(p.denominator for p in periods))
    return Fraction(num, den)


def mandatory_utilization(tasks, speed=1) -> Fraction:
    return sum((t.mandatory_cost / (t.period * speed) for t in tasks), Fraction(0))


@dataclass
class CcRtState:
    """Per-task utilisation bookkeeping of cycle-conserving EDF."""

    tasks: dict  # id -> PeriodicTask
    levels: Optional[tuple]
    speed: Fraction = Fraction(1)
    util: dict = field(default_factory=dict)

    def level(self) -> Fraction:
        return pick_level(self.levels, sum(self.util.values(), Fraction(0)))


def cc_rt_dvfs_update(event: str, state: CcRtState, task_id, actual=None) -> Fraction:
    """Mandatory-part frequency after a ``release``, ``completion`` or ``finish`` event.

    On release the task counts with its worst-case utilisation, mandatory
    plus optional.  Once its mandatory part completes after ``actual``
    cycles the mandatory share drops to the actual one; when the whole job
    is over (optional part done or dropped) the task counts with the
    ``actual`` total it executed, until the next release.
    """
    t = state.tasks[task_id]
    denom = t.period * state.speed
    if event == "release":
        state.util[task_id] = (t.mandatory_cost + t.optional_cost) / denom
    elif event == "completion":
        state.util[task_id] = (Fraction(actual) + t.optional_cost) / denom
    elif event == "finish":
        state.util[task_id] = Fraction(actual) / denom
    else:
        raise ValueError(f"unknown event {event!r}")
    return state.level()


def optional_frequency(levels, f_mandatory, optional, mandatory_worst, mandatory_actual, now=None, deadline=None):
    """Level for an optional part that inherits its mandatory part's slack.

    With slack S = (worst - actual) of the mandatory part, the optional part
    O runs at f_m * O / (O + S), but never so slowly that it cannot finish
    by ``deadline``.
    """
    optional = Fraction(optional)
    if optional <= 0:
        return Fraction(f_mandatory)
    freed = Fraction(mandatory_worst) - Fraction(mandatory_actual)
    need = Fraction(f_mandatory) * optional / (optional + freed)
    if deadline is not None and now is not None:
        room = Fraction(deadline) - Fraction(now)
        need = max(need, optional / room) if room > 0 else Fraction(1)
    return pick_level(levels, need)


# ---------------------------------------------------------------------------
# Periodic simulation


@dataclass
class Job:
    task: PeriodicTask
    k: int
    release: Fraction
    deadline: Fraction
    m_actual: Fraction  # actual mandatory work
    m_done: Fraction = Fraction(0)
    o_done: Fraction = Fraction(0)
    m_reported: Fraction = Fraction(0)
    o_reported: Fraction = Fraction(0)
    m_finish: Optional[Fraction] = None
    dropped: bool = False
    o_freq: Optional[Fraction] = None

    @property
    def id(self) -> str:
        return f"{self.task.id}#{self.k}"

    @property
    def key(self):
        return (self.deadline, self.task.id, self.k)

    @property
    def mandatory_pending(self) -> bool:
        return self.m_done < self.m_actual

    @property
    def optional_pending(self) -> bool:
        return not self.mandatory_pending and not self.dropped and self.o_done < self.task.optional_cost


@dataclass
class PeriodicSchedule:
    slots: list
    jobs: list
    horizon: Fraction
    mandatory_misses: list
    alpha_log: list = field(default_factory=list)

    @property
    def energy_slots(self):
        return self.slots


def _alpha_consume(alpha, delta):
    """Advance the full-speed worst-case EDF schedule by ``delta``."""
    for entry in alpha:
        if delta <= 0:
            break
        use = min(entry[1], delta)
        entry[1] -= use
        delta -= use
    alpha[:] = [e for e in alpha if e[1] > 0]


def mfed_schedule(tasks, horizon=None, processor=None, energy="none") -> PeriodicSchedule:
    """Preemptive MFED over ``horizon`` (hyperperiod by default)."""
    tasks = list(tasks)
    from .platform import Processor

    proc = processor or Processor("p0")
    speed, levels = proc.speed_factor, proc.frequency_levels
    if mandatory_utilization(tasks, speed) > 1:
        raise MandatoryOverload("mandatory utilisation exceeds 1")
    H = hyperperiod(tasks) if horizon is None else Fraction(horizon)
    releases = sorted(
        (t.period * k, t.id, k, t) for t in tasks for k in range(int(math.ceil(H / t.period))) if t.period * k < H
    )
    cc = CcRtState({t.id: t for t in tasks}, levels, speed)
    for t in tasks:
        cc.util[t.id] = Fraction(0)
    alpha = []  # [job key, remaining worst-case time at full speed]
    jobs, active, slots, misses = [], [], [], []
    missed = set()
    now, ri = Fraction(0), 0
    pieces = []  # (job, part, start, end, freq, work)

    while True:
        while ri < len(releases) and releases[ri][0] <= now:
            r, _, k, t = releases[ri]
            ri += 1
            j = Job(t, k, r, r + t.period, t.mandatory_cost * t.actual_cost_factor)
            jobs.append(j)
            active.append(j)
            cc_rt_dvfs_update("release", cc, t.id)
            alpha.append([j.key, t.mandatory_cost / speed])
            alpha.sort()
        for j in active:
            if j.optional_pending and now >= j.deadline:
                j.dropped = True
                cc_rt_dvfs_update("finish", cc, j.task.id, j.m_actual + j.o_done)
            if j.mandatory_pending and now >= j.deadline and id(j) not in missed:
                missed.add(id(j))
                misses.append(j)
        active = [j for j in active if j.mandatory_pending or j.optional_pending]
        next_release = releases[ri][0] if ri < len(releases) else None
        if not active:
            if next_release is None:
                break
            _alpha_consume(alpha, next_release - now)
            now = next_release
            continue

        mand = [j for j in active if j.mandatory_pending]
        if mand:
            j = min(mand, key=lambda j: j.key)
            part = "m"
            if energy == "mfed-ccrt":
                f = cc.level()
            elif energy == "slack-reclaim":
                earlier = sum((e[1] for e in alpha if e[0] < j.key), Fraction(0))
                own = sum((e[1] for e in alpha if e[0] == j.key), Fraction(0))
                rem_worst = (j.task.mandatory_cost - j.m_done) / speed
                f = pick_level(levels, rem_worst / (own + earlier)) if own + earlier > 0 else Fraction(1)
            else:
                f = Fraction(1)
            remaining = j.m_actual - j.m_done
        else:
            j = min(active, key=lambda j: j.key)
            part = "o"
            if energy == "mfed-ccrt":
                if j.o_freq is None:
                    j.o_freq = optional_frequency(
                        levels, cc.level(), j.task.optional_cost / speed, j.task.mandatory_cost / speed,
                        j.m_actual / speed, now, j.deadline,
                    )
                f = j.o_freq
            else:
                f = Fraction(1)
            remaining = j.task.optional_cost - j.o_done
        rate = speed * f
        finish = now + ceil_time(remaining / rate)
        candidates = [finish] + [x.deadline for x in active if x.deadline > now]
        if next_release is not None:
            candidates.append(next_release)
        end = min(candidates)
        work = min(remaining, (end - now) * rate)
        if part == "m":
            j.m_done += work
        else:
            j.o_done += work
        pieces.append((j, part, now, end, f, work))
        _alpha_consume(alpha, end - now)
        now = end
        if part == "m" and not j.mandatory_pending:
            j.m_finish = now
            cc_rt_dvfs_update("completion", cc, j.task.id, j.m_actual)
        elif part == "o" and j.o_done >= j.task.optional_cost:
            cc_rt_dvfs_update("finish", cc, j.task.id, j.m_actual + j.o_done)

    # merge contiguous pieces; amounts are reported in worst-case units on the
    # time grid, the last piece of each part absorbing the rounding
    merged = []
    for piece in pieces:
        last = merged[-1] if merged else None
        if last and last[0] is piece[0] and last[1] == piece[1] and last[3] == piece[2] and last[4] == piece[4]:
            merged[-1] = last[:3] + (piece[3], last[4], last[5] + piece[5])
        else:
            merged.append(piece)
    final = {(id(p[0]), p[1]): i for i, p in enumerate(merged)}
    for i, (j, part, s, e, f, w) in enumerate(merged):
        is_last = final[(id(j), part)] == i
        if part == "m":
            total = j.task.mandatory_cost * j.m_done / j.m_actual
            amount = (floor_time(total) - j.m_reported) if is_last else floor_time(w / j.task.actual_cost_factor)
            j.m_reported += amount
        else:
            amount = (floor_time(j.o_done) - j.o_reported) if is_last else floor_time(w)
            j.o_reported += amount
        slots.append(ScheduledSlot(j.id, s, e, amount, f, proc.id))
    return PeriodicSchedule(slots, jobs, H, misses)


def run_periodic(periodic, platform, policy, energy_config="none") -> Outcome:
    if not platform.processors:
        raise ValueError("periodic scheduling needs a processor")
    proc = platform.processors[0]
    sched = mfed_schedule(periodic, processor=proc, energy=energy_config)
    by_job = {}
    for s in sched.slots:
        by_job.setdefault(s.task_id, []).append(s)
    records, tasks = [], []
    for j in sched.jobs:
        ss = by_job[j.id]
        t = Task(j.id, j.task.mandatory_cost + j.task.optional_cost, j.task.mandatory_cost,
                 arrival=j.release, deadline=j.deadline)
        tasks.append((t, j.task.id))
        executed = sum((s.executed for s in ss), Fraction(0))
        records.append(TaskRecord(j.id, j.task.id, j.release, ss[0].start, ss[-1].finish, j.deadline,
                                  executed, t.cost, t.min_cost))
    events = static_events(records, sched.slots, tasks)
    return Outcome(records, sched.slots, events, sched.horizon,
                   extra={"schedule": sched, "mandatoryMisses": [j.id for j in sched.mandatory_misses]})
