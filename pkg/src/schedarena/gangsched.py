"""Gang scheduling on per-processor queues.

Policies: AFCFS (optional backfilling, bypass threshold, task migration),
LGFS, and EDF gang scheduling combined with approximate computations and
checkpointing (restricted or holistic).

Each gang member waits in the queue of one processor.  A gang starts only
when every member's processor is idle, all members start at the same
instant, and the gang keeps its processors until its last member finishes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .engine import (
    ARRIVAL,
    CHECKPOINT_TICK,
    DEADLINE_REACHED,
    FAILURE,
    SLOT_FINISH,
    SLOT_START,
    CheckpointState,
    EventQueue,
    FaultConfig,
    MemberProgress,
    Outcome,
    TaskRecord,
    checkpoint_and_rollback,
    failure_times,
    wall_time_for,
)
from .platform import ScheduledSlot
from .timebase import ceil_time
from .workload import Gang, NoDeadline


class GangTooLarge(ValueError):
    pass


@dataclass
class GangDispatchState:
    processors: list
    queues: dict = field(default_factory=dict)  # pid -> [(gang id, member index)]
    bypass: dict = field(default_factory=dict)  # gang id -> times bypassed
    migrated_in: dict = field(default_factory=dict)  # pid -> migrated tasks accepted
    bypass_threshold: Optional[int] = None
    migration_limit: Optional[int] = None
    backfilling: bool = True
    queue_key: Optional[object] = None  # keeps queues sorted when set
    busy: dict = field(default_factory=dict)  # pid -> gang id holding it
    gangs: dict = field(default_factory=dict)  # waiting gangs
    location: dict = field(default_factory=dict)  # gang id -> [pid per member]
    migrated: set = field(default_factory=set)  # (gang id, member) moved at least once

    def __post_init__(self):
        self.processors = [str(p) for p in self.processors]
        for p in self.processors:
            self.queues.setdefault(p, [])
            self.migrated_in.setdefault(p, 0)

    def idle(self, pid) -> bool:
        return pid not in self.busy

    def at_head(self, gid, idx) -> bool:
        q = self.queues[self.location[gid][idx]]
        return bool(q) and q[0] == (gid, idx)

    def startable(self, gang: Gang) -> bool:
        procs = self.location[gang.id]
        if not all(self.idle(p) for p in procs):
            return False
        return self.backfilling or all(self.at_head(gang.id, i) for i in range(gang.size))

    def saturated(self, gang: Gang) -> bool:
        return self.bypass_threshold is not None and self.bypass.get(gang.id, 0) >= self.bypass_threshold

    @property
    def waiting(self) -> list:
        return list(self.gangs.values())


def admit(state: GangDispatchState, gang: Gang) -> list:
    """Put the members of an arriving gang into distinct processor queues.

    An explicit ``gang.placement`` is honoured; otherwise the least loaded
    queues are used (queue length, counting a busy processor as one more,
    then processor order).
    """
    if gang.size > len(state.processors):
        raise GangTooLarge(f"gang {gang.id} has {gang.size} tasks but only {len(state.processors)} processors exist")
    if gang.placement is not None:
        unknown = [p for p in gang.placement if p not in state.queues]
        if unknown:
            raise GangTooLarge(f"gang {gang.id} placed on unknown processors {unknown}")
        procs = list(gang.placement)
    else:
        load = lambda p: (len(state.queues[p]) + (0 if state.idle(p) else 1), state.processors.index(p))
        procs = sorted(state.processors, key=load)[: gang.size]
    state.gangs[gang.id] = gang
    state.location[gang.id] = procs
    state.bypass.setdefault(gang.id, 0)
    for i, p in enumerate(procs):
        state.queues[p].append((gang.id, i))
        if state.queue_key is not None:
            state.queues[p].sort(key=lambda ref: state.queue_key(state.gangs[ref[0]]) + (ref[1],))
    return procs


def start_gang(state: GangDispatchState, gang: Gang) -> list:
    procs = state.location[gang.id]
    for i, p in enumerate(procs):
        state.queues[p].remove((gang.id, i))
        state.busy[p] = gang.id
        if (gang.id, i) not in state.migrated:
            state.migrated_in[p] = 0
    del state.gangs[gang.id]
    return procs


def release_gang(state: GangDispatchState, gang_id) -> None:
    for p in [p for p, g in state.busy.items() if g == gang_id]:
        del state.busy[p]


def afcfs_bypass_update(state: GangDispatchState, blocked: Gang, dispatched: Gang) -> GangDispatchState:
    if blocked.id == dispatched.id:
        raise ValueError("a gang cannot bypass itself")
    state.bypass[blocked.id] = state.bypass.get(blocked.id, 0) + 1
    return state


def afcfs_order(state: GangDispatchState) -> list:
    return sorted(state.waiting, key=lambda g: (not state.saturated(g), g.arrival, g.id))


def afcfs_dispatch(state: GangDispatchState, now=0) -> list:
    """One AFCFS decision pass; returns ``(gang, processors)`` in start order.

    Gangs are tried in priority order (saturated bypass counters first, then
    arrival).  A gang that cannot start is passed over and its bypass count
    grows each time a later gang starts in its place.  A saturated gang that
    cannot start ends the pass, so nobody overtakes it.
    """
    started, blocked = [], []
    for g in afcfs_order(state):
        if state.startable(g):
            started.append((g, start_gang(state, g)))
            for b in blocked:
                afcfs_bypass_update(state, b, g)
        elif state.saturated(g):
            break
        else:
            blocked.append(g)
    return started


def afcfs_migrate(state: GangDispatchState) -> list:
    """Move members of blocked gangs onto idle processors.

    A gang qualifies when one of its members heads the queue of an idle
    processor.  Its members sitting on busy processors move to distinct idle
    processors whose migrated-task count is below the limit and go to the
    head of those queues.  A gang migrates only if all of them can move.
    Returns ``(gang id, member, from, to)`` tuples.
    """
    if state.migration_limit is None:
        return []
    moves = []
    free = [p for p in state.processors if state.idle(p)]
    for g in afcfs_order(state):
        if state.startable(g):
            free = [p for p in free if p not in state.location[g.id]]
            continue
        procs = state.location[g.id]
        if not any(state.idle(p) and state.at_head(g.id, i) for i, p in enumerate(procs)):
            continue
        stuck = [i for i, p in enumerate(procs) if not state.idle(p)]
        targets = [p for p in free if p not in procs and state.migrated_in[p] < state.migration_limit]
        targets.sort(key=lambda p: (state.migrated_in[p], state.processors.index(p)))
        if len(targets) < len(stuck):
            continue
        for i, dest in zip(stuck, targets):
            src = procs[i]
            state.queues[src].remove((g.id, i))
            state.queues[dest].insert(0, (g.id, i))
            state.migrated_in[dest] += 1
            state.migrated.add((g.id, i))
            procs[i] = dest
            moves.append((g.id, i, src, dest))
        free = [p for p in free if p not in procs]
    return moves


def _greedy(state: GangDispatchState, key) -> list:
    started = []
    for g in sorted(state.waiting, key=key):
        if state.startable(g):
            started.append((g, start_gang(state, g)))
    return started


def lgfs_key(g: Gang):
    return (-g.size, g.arrival, g.id)


def edf_key(g: Gang):
    return (g.deadline, g.arrival, g.id)


def lgfs_dispatch(state: GangDispatchState, now=0) -> list:
    """Largest gang first; every gang that can start does, in that order."""
    return _greedy(state, lgfs_key)


def edf_dispatch(state: GangDispatchState, now=0) -> list:
    return _greedy(state, edf_key)


# ---------------------------------------------------------------------------
# Simulation


@dataclass
class _Running:
    gang: Gang
    procs: list
    start: Fraction
    state: CheckpointState
    tokens: list  # per-member event token, bumped on interruption
    done: list  # per-member finish time or None
    executed: list  # final executed amount per member
    segments: int = 0
    tick_token: int = 0


def _mandatory_time(gang, procs, platform, fc):
    t = Fraction(0)
    for task, p in zip(gang.tasks, procs):
        rate = platform.processor(p).speed_factor / task.actual_cost_factor
        t = max(t, ceil_time(wall_time_for(task.min_cost / rate, fc.checkpoint_interval, fc.checkpoint_overhead)))
    return t


def _mandatory_done(run: _Running, k, o):
    st = run.state
    t = st.segment_start
    for i, (m, task) in enumerate(zip(st.members, run.gang.tasks)):
        if run.done[i] is None and m.executed_before < task.min_cost:
            t = max(t, st.segment_start + ceil_time(wall_time_for((task.min_cost - m.executed_before) / m.rate, k, o)))
    return t


def simulate_gangs(gangs, platform, policy, fault_config: Optional[FaultConfig] = None, seed=0) -> Outcome:
    fc = fault_config or FaultConfig()
    name, params = policy.name, policy.params
    mode = params.get("mode") if name == "edf-gang-ac" else None
    pids = [p.id for p in platform.processors]
    for g in gangs:
        if g.size > len(pids):
            raise GangTooLarge(f"gang {g.id} has {g.size} tasks but only {len(pids)} processors exist")
        if mode and g.deadline is None:
            raise NoDeadline(f"gang {g.id} has no deadline; {policy.text} needs one")

    state = GangDispatchState(pids)
    if name == "afcfs":
        state.backfilling = params["backfilling"]
        state.bypass_threshold = params["bypass_threshold"]
        state.migration_limit = params["migration_limit"]
        dispatch = afcfs_dispatch
    elif name == "lgfs":
        state.queue_key = lgfs_key
        dispatch = lgfs_dispatch
    else:
        state.queue_key = edf_key
        dispatch = edf_dispatch

    ss = np.random.SeedSequence(seed)
    rng_time, rng_proc = (np.random.default_rng(s) for s in ss.spawn(2))
    fail_stream = failure_times(fc.rate, rng_time) if fc.rate > 0 else None
    k, o = fc.checkpoint_interval, fc.checkpoint_overhead

    q = EventQueue()
    for g in sorted(gangs, key=lambda g: (g.arrival, g.id)):
        for i, t in enumerate(g.tasks):
            deadline = t.deadline if t.deadline is not None else g.deadline
            q.push(g.arrival, ARRIVAL, task=t.id, app=g.id, member=i, size=g.size,
                   cost=t.cost, minCost=t.min_cost, deadline=deadline)
    if fail_stream is not None:
        q.push(next(fail_stream), FAILURE)

    running = {}
    records, slots, events = [], [], []
    failures = rollbacks = 0
    lost_work = Fraction(0)
    pending = {g.id: g for g in gangs}
    live = {}  # (gang, member) -> token of the member's current finish event
    preclosed = set()
    migrations = 0

    def target(task):
        return task.min_cost if mode == "holistic" else task.cost

    def begin_segment(run: _Running, now):
        members = []
        for i, (task, p) in enumerate(zip(run.gang.tasks, run.procs)):
            rate = platform.processor(p).speed_factor / task.actual_cost_factor
            before = run.executed[i] if run.done[i] is None else target(task)
            members.append(MemberProgress(task.id, before, target(task), rate))
        run.state = CheckpointState(now, members, k, o)
        run.segments += 1
        for i, m in enumerate(members):
            if run.done[i] is not None:
                continue
            run.tokens[i] += 1
            live[(run.gang.id, i)] = run.tokens[i]
            q.push(now, SLOT_START, task=m.task_id, app=run.gang.id, proc=run.procs[i], freq=1)
            q.push(m.finish_time(now, k, o), SLOT_FINISH, task=m.task_id, app=run.gang.id, proc=run.procs[i],
                   freq=1, start=now, executed=m.target - m.executed_before, copy=False, complete=True,
                   member=i, token=run.tokens[i])
        if k is not None:
            run.tick_token += 1
            q.push(now + k, CHECKPOINT_TICK, app=run.gang.id, token=run.tick_token)

    def cut_segment(run: _Running, now, complete, final=None):
        """Stop unfinished members at ``now``.

        A member whose natural finish is exactly ``now`` completes normally;
        its pending finish event stays valid.
        """
        st = run.state
        for i, m in enumerate(st.members):
            if run.done[i] is not None:
                continue
            if m.finish_time(st.segment_start, k, o) <= now:
                slots.append(ScheduledSlot(m.task_id, st.segment_start, now, m.target - m.executed_before,
                                           Fraction(1), run.procs[i]))
                run.done[i] = now
                run.executed[i] = m.target
                preclosed.add((run.gang.id, i, run.tokens[i]))
                continue
            prog = m.progress(st.segment_start, now, k, o)
            run.tokens[i] += 1
            seg_work = prog - m.executed_before
            if now > st.segment_start:
                slots.append(ScheduledSlot(m.task_id, st.segment_start, now, seg_work, Fraction(1), run.procs[i]))
            live[(run.gang.id, i)] = run.tokens[i]
            q.push(now, SLOT_FINISH, task=m.task_id, app=run.gang.id, proc=run.procs[i], freq=1,
                   start=st.segment_start, executed=seg_work, copy=False, complete=complete,
                   member=i, token=run.tokens[i], cut=True)
            run.executed[i] = prog if final is None else final[m.task_id]
            if complete:
                run.done[i] = now
        run.tick_token += 1

    def finish_gang(run: _Running, now):
        g = run.gang
        for i, task in enumerate(g.tasks):
            deadline = task.deadline if task.deadline is not None else g.deadline
            records.append(TaskRecord(task.id, g.id, g.arrival, run.start, run.done[i], deadline,
                                      run.executed[i], task.cost, task.min_cost))
        release_gang(state, g.id)
        del running[g.id]

    def progress_now(run, now):
        st = run.state
        return [m.target if run.done[i] is not None else m.progress(st.segment_start, now, k, o)
                for i, m in enumerate(st.members)]

    def terminate(run: _Running, now):
        cut_segment(run, now, complete=True)
        finish_gang(run, now)

    while q:
        ev = q.pop()
        now = ev.time
        p = ev.payload
        keep = True
        if ev.kind == ARRIVAL:
            if p["member"] == p["size"] - 1:
                g = pending.pop(p["app"])
                admit(state, g)
                if mode == "restricted":
                    # watch for the moment only the mandatory part still fits
                    notify = g.deadline - _mandatory_time(g, state.location[g.id], platform, fc)
                    q.push(max(now, notify), DEADLINE_REACHED, app=g.id, notify=True)
        elif ev.kind == SLOT_FINISH:
            run = running.get(p["app"])
            i = p["member"]
            if p.get("cut"):
                pass
            elif live.get((p["app"], i)) != p["token"]:
                keep = False
            elif (p["app"], i, p["token"]) not in preclosed:
                m = run.state.members[i]
                slots.append(ScheduledSlot(m.task_id, p["start"], now, p["executed"], Fraction(1), run.procs[i]))
                run.done[i] = now
                run.executed[i] = m.target
            if keep and run is not None and p["app"] in running and all(d is not None for d in run.done):
                finish_gang(run, now)
        elif ev.kind == CHECKPOINT_TICK:
            run = running.get(p["app"])
            if run is None or run.tick_token != p["token"] or all(d is not None for d in run.done):
                keep = False
            else:
                run.state.advance(now)
                q.push(now + k, CHECKPOINT_TICK, app=run.gang.id, token=p["token"])
        elif ev.kind == DEADLINE_REACHED:
            keep = False
            run = running.get(p["app"])
            if p.get("notify"):
                g = state.gangs.get(p["app"])
                if g is not None and not state.startable(g):
                    blockers = {state.busy[x] for x in state.location[g.id] if not state.idle(x)}
                    ok = all(
                        all(v >= t.min_cost for v, t in zip(progress_now(running[b], now), running[b].gang.tasks))
                        for b in blockers
                    )
                    if blockers and ok:
                        for b in sorted(blockers):
                            terminate(running[b], now)
                        keep = True
            elif run is not None:
                keep = True
                if all(v >= t.min_cost for v, t in zip(progress_now(run, now), run.gang.tasks)):
                    terminate(run, now)
                else:
                    # past the deadline: stop as soon as every mandatory part is done
                    q.push(_mandatory_done(run, k, o), DEADLINE_REACHED, app=run.gang.id)
        elif ev.kind == FAILURE:
            keep = False
            busy = []
            for run in sorted(running.values(), key=lambda r: r.gang.id):
                st = run.state
                for i, m in enumerate(st.members):
                    if run.done[i] is None and m.finish_time(st.segment_start, k, o) > now:
                        busy.append((run.procs[i], run))
            busy.sort(key=lambda b: pids.index(b[0]))
            if busy:
                proc, run = busy[int(rng_proc.integers(len(busy)))]
                rb = checkpoint_and_rollback(run.state, now)
                failures += 1
                lost = {t: v for t, v in rb.lost.items() if v}
                done_at_cp = all(rb.restored[t.id] >= t.min_cost for t in run.gang.tasks)
                ev.payload.update(proc=proc, app=run.gang.id, checkpoint=rb.checkpoint_time, lost=lost)
                lost_work += rb.lost_work
                keep = True
                if mode == "restricted" and done_at_cp:
                    ev.payload["outcome"] = "terminate"
                    cut_segment(run, now, complete=True, final=rb.restored)
                    finish_gang(run, now)
                else:
                    ev.payload["outcome"] = "rollback"
                    rollbacks += 1
                    cut_segment(run, now, complete=False, final=rb.restored)
                    if any(d is None for d in run.done):
                        begin_segment(run, now)
            if running or state.gangs or pending or len(q):
                q.push(next(fail_stream), FAILURE)
        if keep:
            events.append(ev)

        if q and q.peek_time() == now:
            continue
        # decision instant
        if name == "afcfs":
            migrations += len(afcfs_migrate(state))
        for g, procs in dispatch(state, now):
            run = _Running(g, list(procs), now, None, [0] * g.size, [None] * g.size, [Fraction(0)] * g.size)
            running[g.id] = run
            begin_segment(run, now)
            if mode == "restricted":
                q.push(max(now, g.deadline), DEADLINE_REACHED, app=g.id)
        if not running and not state.gangs and not pending and q.kinds() <= {FAILURE}:
            break

    slots.sort(key=lambda s: (s.start, s.processor, s.task_id))
    return Outcome(records, slots, events, Fraction(0), failures, rollbacks, lost_work,
                   extra={"bypass": dict(state.bypass), "migrations": migrations})
