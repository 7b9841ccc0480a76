"""Bag-of-tasks mapping over an ETC matrix, and CAEES VM selection.

Min-Min, Max-Min and Sufferage build the mapping iteratively: at every step
the completion time of each unassigned task on each processor is its ETC
entry plus the processor's current ready time.  Ties on completion time go to
the lower processor index, then the lower task id.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .energy import SlackLedger, reclaim_slack
from .engine import Outcome, PolicyWorkloadMismatch, TaskRecord, static_events
from .platform import PowerModel, ScheduledSlot, VmInstance
from .timebase import ceil_time
from .workload import BotApp, NoDeadline, Task


class NeedTwoProcessors(ValueError):
    pass


class Infeasible(RuntimeError):
    pass


@dataclass
class MappingState:
    ready: list  # per-processor ready time
    unassigned: list  # task indices
    log: list = field(default_factory=list)  # (task index, processor, start, finish)


@dataclass
class Mapping:
    assignment: dict  # task id -> processor index
    order: list  # (task id, processor, start, finish) in mapping order
    makespan: Fraction


def _ct(bot: BotApp, st: MappingState, i, j):
    start = max(st.ready[j], bot.tasks[i].earliest_start)
    return start + bot.etc[i][j], start


def _mct(bot, st, i):
    """(completion, processor) pairs sorted best first."""
    return sorted((_ct(bot, st, i, j)[0], j) for j in range(bot.n_processors))


def _map(bot: BotApp, pick) -> Mapping:
    st = MappingState([Fraction(0)] * bot.n_processors, list(range(len(bot.tasks))))
    while st.unassigned:
        i, j = pick(bot, st)
        finish, start = _ct(bot, st, i, j)
        st.ready[j] = finish
        st.unassigned.remove(i)
        st.log.append((i, j, start, finish))
    order = [(bot.tasks[i].id, j, s, f) for i, j, s, f in st.log]
    return Mapping({t: j for t, j, _, _ in order}, order, max((f for *_, f in order), default=Fraction(0)))


def _pick_min(bot, st):
    best = min((_mct(bot, st, i)[0] + (bot.tasks[i].id, i) for i in st.unassigned))
    return best[3], best[1]


def _pick_max(bot, st):
    best = min(((-c, j, bot.tasks[i].id, i) for i in st.unassigned for c, j in [_mct(bot, st, i)[0]]))
    return best[3], best[1]


def _pick_sufferage(bot, st):
    best = None
    for i in st.unassigned:
        (c1, j1), (c2, _) = _mct(bot, st, i)[:2]
        key = (-(c2 - c1), bot.tasks[i].id, i, j1)
        if best is None or key < best:
            best = key
    return best[2], best[3]


def min_min(bot: BotApp, platform=None) -> Mapping:
    return _map(bot, _pick_min)


def max_min(bot: BotApp, platform=None) -> Mapping:
    """Like Min-Min, but the task whose best completion time is largest goes first."""
    return _map(bot, _pick_max)


def sufferage(bot: BotApp, platform=None) -> Mapping:
    """The task that would lose most by missing its best processor goes first."""
    if bot.n_processors < 2:
        raise NeedTwoProcessors("sufferage needs at least two processors")
    return _map(bot, _pick_sufferage)


HEURISTICS = {"minmin": min_min, "maxmin": max_min, "sufferage": sufferage}


# ---------------------------------------------------------------------------
# CAEES


TIERS = ("a", "b", "c", "d")


@dataclass(frozen=True)
class VmChoice:
    vm: str
    tier: str
    frequency: Fraction
    start: Fraction
    finish: Fraction
    energy: object


class CloudState:
    """Mutable view of hosts and VMs during a CAEES run."""

    def __init__(self, hosts):
        self.hosts = tuple(hosts)
        self.vms = {vm.id: vm for h in self.hosts for vm in h.vms}
        self.host_of = {vm.id: h.id for h in self.hosts for vm in h.vms}

    def host_idle(self, host_id) -> bool:
        return not any(v.busy for v in self.vms.values() if v.host_id == host_id)

    def refresh(self, now) -> None:
        for k, v in self.vms.items():
            if v.busy and v.ready_time <= now:
                self.vms[k] = replace(v, busy=False)

    def occupy(self, choice: VmChoice) -> None:
        v = self.vms[choice.vm]
        self.vms[choice.vm] = replace(v, busy=True, ready_time=choice.finish, frequency=choice.frequency)


def _vm_options(task: Task, vm: VmInstance, now, levels_from, power: PowerModel):
    """(frequency, start, finish, marginal energy) for each level from ``levels_from`` up."""
    start = max(now, vm.ready_time if vm.busy else now, task.earliest_start)
    levels = vm.frequency_levels or (Fraction(1),)
    out = []
    for f in levels:
        if f < levels_from:
            continue
        dur = ceil_time(task.cost / (vm.speed_factor * f))
        out.append((f, start, start + dur, (power.power(f) - power.idle_power()) * dur))
    return out


def tier_candidates(task: Task, cloud: CloudState, now, power: PowerModel) -> dict:
    """Every feasible (tier, VmChoice) placement, grouped by tier."""
    if task.deadline is None:
        raise NoDeadline(f"task {task.id} has no deadline; CAEES needs one")
    found = {t: [] for t in TIERS}
    for vm in sorted(cloud.vms.values(), key=lambda v: v.id):
        if vm.busy:
            for f, s, e, en in _vm_options(task, vm, now, vm.frequency, power):
                if e <= task.deadline:
                    tier = "a" if f == vm.frequency else "b"
                    found[tier].append(VmChoice(vm.id, tier, f, s, e, en))
                    if tier == "a":
                        break
        else:
            tier = "d" if cloud.host_idle(vm.host_id) else "c"
            for f, s, e, en in _vm_options(task, vm, now, Fraction(0), power):
                if e <= task.deadline:
                    found[tier].append(VmChoice(vm.id, tier, f, s, e, en))
    return found


def caees_select(task: Task, cloud: CloudState, now=0, power: Optional[PowerModel] = None) -> VmChoice:
    """Pick a VM by CAEES tiers.

    (a) a busy VM at its current frequency, (b) a busy VM at a raised
    frequency, (c) an idle VM on a host with other busy VMs, (d) an idle VM
    on an idle host.  The first tier with a placement meeting the deadline
    wins; inside it the lowest marginal dynamic energy, then the VM id.
    """
    power = power or PowerModel()
    found = tier_candidates(task, cloud, now, power)
    for tier in TIERS:
        if found[tier]:
            return min(found[tier], key=lambda c: (c.energy, c.vm, c.frequency))
    raise Infeasible(f"task {task.id}: no VM can finish it by its deadline {task.deadline}")


# ---------------------------------------------------------------------------
# Engine glue


def _merge(bots):
    if len(bots) == 1:
        b = bots[0]
        return b, {t.id: b.id for t in b.tasks}
    tasks, etc, app = [], [], {}
    for b in bots:
        for t, row in zip(b.tasks, b.etc):
            nid = f"{b.id}/{t.id}"
            tasks.append(replace(t, id=nid))
            etc.append(row)
            app[nid] = b.id
    return BotApp("+".join(b.id for b in bots), tasks, etc), app


def run_bots(bots, platform, policy, energy_config="none", seed=0) -> Outcome:
    bots = list(bots)
    if policy.name == "caees":
        return _run_caees(bots, platform)
    bag, app = _merge(bots)
    procs = list(platform.processors)
    if bag.n_processors != len(procs):
        raise PolicyWorkloadMismatch(
            f"ETC has {bag.n_processors} columns but the platform has {len(procs)} processors"
        )
    mapping = HEURISTICS[policy.name](bag, platform)
    by_id = {t.id: t for t in bag.tasks}
    row = {t.id: i for i, t in enumerate(bag.tasks)}
    per_proc = {j: [] for j in range(len(procs))}
    for tid, j, _, _ in mapping.order:
        per_proc[j].append(tid)

    records, slots = [], []
    ledgers = {}
    for j, tids in per_proc.items():
        proc = procs[j]
        ledger = ledgers.setdefault(proc.id, SlackLedger())
        clock = Fraction(0)
        for tid in tids:
            task = by_id[tid]
            start = max(clock, task.earliest_start)
            D = bag.etc[row[tid]][j]
            f = Fraction(1)
            if energy_config == "slack-reclaim":
                f = reclaim_slack(ledger, D, proc.frequency_levels, task.deadline, start)
            actual = ceil_time(D * task.actual_cost_factor / f)
            if energy_config == "slack-reclaim":
                worst = ceil_time(D / f)
                ledger.credit(tid, worst, actual, worst - actual)
            slots.append(ScheduledSlot(tid, start, start + actual, task.cost, f, proc.id))
            records.append(TaskRecord(tid, app[tid], task.arrival, start, start + actual, task.deadline,
                                      task.cost, task.cost, task.min_cost))
            clock = start + actual
    events = static_events(records, slots, [(t, app[t.id]) for t in bag.tasks])
    return Outcome(records, slots, events, mapping.makespan, extra={"mapping": mapping, "ledgers": ledgers})


def _run_caees(bots, platform) -> Outcome:
    if not platform.hosts:
        raise PolicyWorkloadMismatch("caees needs a platform with hosts and VMs")
    cloud = CloudState(platform.hosts)
    tasks = sorted(((t, b.id) for b in bots for t in b.tasks), key=lambda x: (x[0].earliest_start, x[1], x[0].id))
    records, slots, choices = [], [], []
    for t, app in tasks:
        now = t.earliest_start
        cloud.refresh(now)
        c = caees_select(t, cloud, now, platform.power_model)
        cloud.occupy(c)
        choices.append((t.id, c))
        slots.append(ScheduledSlot(t.id, c.start, c.finish, t.cost, c.frequency, c.vm))
        records.append(TaskRecord(t.id, app, t.arrival, c.start, c.finish, t.deadline, t.cost, t.cost, t.min_cost))
    events = static_events(records, slots, tasks)
    return Outcome(records, slots, events, extra={"choices": choices})
