"""Workflow (DAG) schedulers.

List scheduling (HLF, ISH, HEFT, EDF, LSTF), dominant sequence clustering,
duplication (DSH), simulated annealing, a genetic algorithm, and EDF with
approximate computations that packs partial tasks into schedule gaps
(first/best/worst fit).

Communication between tasks on the same processor is free; across
processors it costs the edge weight.  Static schedules use worst-case costs.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .engine import Outcome, TaskRecord, static_events
from .platform import Platform, Processor, ScheduledSlot, Timeline
from .timebase import INF, ceil_time
from .workload import (
    DagApp,
    Edge,
    NoDeadline,
    Task,
    min_amount_for_error,
    task_levels,
    validate_dag,
)


class ScheduleInvalid(AssertionError):
    pass


@dataclass
class DagSchedule:
    slots: dict  # task id -> primary ScheduledSlot
    copies: list = field(default_factory=list)  # duplicated task instances
    meta: dict = field(default_factory=dict)

    @property
    def makespan(self) -> Fraction:
        if not self.slots:
            return Fraction(0)
        return max(s.finish for s in self.slots.values()) - min(s.start for s in self.slots.values())

    def all_slots(self) -> list:
        return list(self.slots.values()) + list(self.copies)

    def by_processor(self) -> dict:
        out = {}
        for s in self.all_slots():
            out.setdefault(s.processor, []).append(s)
        for v in out.values():
            v.sort(key=lambda s: s.start)
        return out

    def gantt_rows(self) -> list:
        """(task, processor, start, finish) rows, copies marked with '*'."""
        rows = []
        for s in sorted(self.all_slots(), key=lambda s: (s.start, s.processor, s.task_id)):
            rows.append((s.task_id + ("*" if s.copy else ""), s.processor, float(s.start), float(s.finish)))
        return rows

    def to_dict(self) -> dict:
        return {
            "makespan": float(self.makespan),
            "slots": [
                {
                    "task": s.task_id,
                    "proc": s.processor,
                    "start": float(s.start),
                    "finish": float(s.finish),
                    "executed": float(s.executed),
                    "copy": s.copy,
                }
                for s in sorted(self.all_slots(), key=lambda s: (s.start, s.processor, s.task_id))
            ],
        }


class _Builder:
    """Incremental schedule construction over per-processor timelines."""

    def __init__(self, dag: DagApp, platform: Platform):
        self.dag = dag
        self.platform = platform
        self.procs = platform.processors
        self.timelines = {p.id: Timeline(p) for p in self.procs}
        self.placed = {}
        self.instances = {}  # task -> list of slots (primary and copies)
        self.copies = []
        self.order = []

    def exec_time(self, task: Task, proc: Processor, work=None) -> Fraction:
        return proc.duration(task.cost if work is None else work)

    def data_arrival(self, task_id, proc: Processor, extra=()) -> Fraction:
        task = self.dag.task(task_id)
        t = task.earliest_start
        for u in self.dag.parents(task_id):
            inst = self.instances.get(u, []) + [e for e in extra if e.task_id == u]
            if not inst:
                return INF
            comm = self.dag.comm(u, task_id)
            t = max(t, min(c.finish + (0 if c.processor == proc.id else comm) for c in inst))
        return t

    def place(self, task_id, proc: Processor, start, duration, executed=None, copy=False) -> ScheduledSlot:
        task = self.dag.task(task_id)
        slot = ScheduledSlot(
            task_id, start, start + duration, task.cost if executed is None else executed, Fraction(1), proc.id, copy
        )
        self.timelines[proc.id].add(slot)
        self.instances.setdefault(task_id, []).append(slot)
        if copy:
            self.copies.append(slot)
        else:
            self.placed[task_id] = slot
            self.order.append(task_id)
        return slot

    def ready_heap(self, key):
        indeg = {t.id: len(self.dag.parents(t.id)) for t in self.dag.nodes}
        heap = [(key(t), t) for t, d in indeg.items() if d == 0]
        heapq.heapify(heap)
        return heap, indeg

    def release_children(self, task_id, heap, indeg, key):
        for c in self.dag.children(task_id):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, (key(c), c))

    def result(self, **meta) -> DagSchedule:
        meta.setdefault("order", list(self.order))
        return DagSchedule(dict(self.placed), list(self.copies), meta)


def list_schedule(
    dag: DagApp,
    platform: Platform,
    priority: Callable[[str], tuple],
    *,
    insertion: bool = False,
    select: str = "est",
) -> DagSchedule:
    """Generic two-phase list scheduler.

    Among ready tasks the one with the smallest ``priority`` key is taken and
    placed on the processor giving the earliest start (``select="est"``) or
    finish (``"eft"``); ties go to the lower processor index.  With
    ``insertion`` a task may fill an idle gap that is long enough for it.
    """
    b = _Builder(dag, platform)
    heap, indeg = b.ready_heap(priority)
    while heap:
        _, tid = heapq.heappop(heap)
        task = dag.task(tid)
        best = None
        for proc in b.procs:
            dur = b.exec_time(task, proc)
            ready = b.data_arrival(tid, proc)
            start = b.timelines[proc.id].earliest_start(ready, dur, insertion)
            score = start if select == "est" else start + dur
            if best is None or score < best[0]:
                best = (score, proc, start, dur)
        _, proc, start, dur = best
        b.place(tid, proc, start, dur)
        b.release_children(tid, heap, indeg, priority)
    return b.result()


def _level_priority(levels):
    return lambda tid: (-levels[tid], tid)


def hlf(dag: DagApp, platform: Platform) -> DagSchedule:
    """Highest Level First: level-ordered, earliest start, append only."""
    levels = task_levels(validate_dag(dag))
    return list_schedule(dag, platform, _level_priority(levels))


def ish(dag: DagApp, platform: Platform) -> DagSchedule:
    """Insertion Scheduling Heuristic: HLF priorities plus whole-task gap filling."""
    levels = task_levels(validate_dag(dag))
    return list_schedule(dag, platform, _level_priority(levels), insertion=True)


def heft(dag: DagApp, platform: Platform) -> DagSchedule:
    validate_dag(dag)
    inv_speed = sum(1 / p.speed_factor for p in platform.processors) / len(platform.processors)
    levels = task_levels(dag, cost=lambda t: t.cost * inv_speed)
    return list_schedule(dag, platform, _level_priority(levels), insertion=True, select="eft")


def edf(dag: DagApp, platform: Platform) -> DagSchedule:
    """Plain EDF list scheduling (append only); tasks without deadline go last."""
    validate_dag(dag)
    key = lambda tid: (dag.task(tid).deadline if dag.task(tid).deadline is not None else INF, tid)
    return list_schedule(dag, platform, key)


def lstf(dag: DagApp, platform: Platform, deadlines: Optional[dict] = None) -> DagSchedule:
    """Least Space-Time First: smallest (DAG deadline - level) first.

    ``deadlines`` maps task id to the deadline of the DAG the task belongs to,
    for composite workloads; by default every task uses ``dag.deadline``.
    """
    validate_dag(dag)
    if deadlines is None:
        if dag.deadline is None:
            raise NoDeadline(f"dag {dag.id} has no deadline")
        deadlines = {t.id: dag.deadline for t in dag.nodes}
    levels = task_levels(dag)
    return list_schedule(dag, platform, lambda tid: (deadlines[tid] - levels[tid], tid))


# ---------------------------------------------------------------------------
# Dominant sequence clustering


@dataclass
class Clustering:
    clusters: tuple  # tuples of task ids
    mapping: dict  # cluster index -> processor id
    order: dict  # processor id -> tuple of task ids
    ds_history: list = field(default_factory=list)
    accepted: list = field(default_factory=list)  # merged edges


def dominant_sequence(dag: DagApp, cluster_of: dict, levels=None) -> Fraction:
    """Length of the longest path of the clustered, scheduled graph.

    Each cluster runs its tasks sequentially in level order; edges inside a
    cluster cost nothing.
    """
    levels = levels or task_levels(dag)
    ready_at = {}
    finish = {}
    for tid in sorted(dag.topological_order, key=lambda t: (-levels[t], t)):
        c = cluster_of[tid]
        t = ready_at.get(c, Fraction(0))
        for u in dag.parents(tid):
            t = max(t, finish[u] + (0 if cluster_of[u] == c else dag.comm(u, tid)))
        finish[tid] = t + dag.task(tid).cost
        ready_at[c] = finish[tid]
    return max(finish.values())


def _relabel(cluster_of):
    groups = {}
    for tid in sorted(cluster_of):
        groups.setdefault(cluster_of[tid], []).append(tid)
    return tuple(sorted(tuple(g) for g in groups.values()))


def dsc(dag: DagApp, platform: Optional[Platform] = None) -> Clustering:
    """Cluster tasks so that the dominant sequence shrinks.

    Edges are examined once, heaviest first; zeroing an edge by merging its
    endpoint clusters is kept only if the dominant sequence does not grow.
    The clusters are then merged down to the processor count (cheapest
    merge by resulting DS first), mapped largest-work cluster to fastest
    processor, and ordered by level.
    """
    validate_dag(dag)
    levels = task_levels(dag)
    cluster_of = {t: i for i, t in enumerate(sorted(dag.tasks_by_id))}
    ds = dominant_sequence(dag, cluster_of, levels)
    history, accepted = [ds], []
    for e in sorted(dag.edges, key=lambda e: (-e.comm, e.parent, e.child)):
        a, b = cluster_of[e.parent], cluster_of[e.child]
        if a == b:
            continue
        trial = {t: (a if c == b else c) for t, c in cluster_of.items()}
        new = dominant_sequence(dag, trial, levels)
        if new <= ds:
            cluster_of, ds = trial, new
            history.append(ds)
            accepted.append((e.parent, e.child))

    clusters = list(_relabel(cluster_of))
    if platform is not None:
        q = len(platform.processors)
        while len(clusters) > q:
            best = None
            if len(clusters) <= 32:
                for i in range(len(clusters)):
                    for j in range(i + 1, len(clusters)):
                        trial = {t: k for k, c in enumerate(clusters) for t in c}
                        for t in clusters[j]:
                            trial[t] = i
                        score = (dominant_sequence(dag, trial, levels), clusters[i], clusters[j])
                        if best is None or score < best[0]:
                            best = (score, i, j)
            else:
                work = [sum(dag.task(t).cost for t in c) for c in clusters]
                i, j = sorted(range(len(clusters)), key=lambda k: (work[k], clusters[k]))[:2]
                best = (None, min(i, j), max(i, j))
            _, i, j = best
            merged = tuple(sorted(clusters[i] + clusters[j]))
            clusters = sorted([c for k, c in enumerate(clusters) if k not in (i, j)] + [merged])
        procs = sorted(platform.processors, key=lambda p: -p.speed_factor)
        proc_ids = [p.id for p in procs]
        while len(clusters) < q:
            clusters.append(())
    else:
        proc_ids = [f"c{k}" for k in range(len(clusters))]

    by_work = sorted(
        range(len(clusters)),
        key=lambda k: (-sum(dag.task(t).cost for t in clusters[k]), clusters[k]),
    )
    mapping = {k: proc_ids[rank] for rank, k in enumerate(by_work)}
    order = {
        mapping[k]: tuple(sorted(clusters[k], key=lambda t: (-levels[t], t))) for k in range(len(clusters))
    }
    return Clustering(tuple(clusters), mapping, order, history, accepted)


def schedule_clustering(dag: DagApp, platform: Platform, clustering: Clustering) -> DagSchedule:
    """Materialise a clustering: fixed processors, fixed per-processor order."""
    levels = task_levels(dag)
    assign = {t: pid for pid, ts in clustering.order.items() for t in ts}
    order = sorted(dag.topological_order, key=lambda t: (-levels[t], t))
    sched = decode(dag, platform, assign, order)
    sched.meta["clustering"] = clustering
    return sched


def decode(dag: DagApp, platform: Platform, assign: dict, order) -> DagSchedule:
    """Place tasks in ``order`` on their assigned processors, appending each."""
    b = _Builder(dag, platform)
    procs = {p.id: p for p in platform.processors}
    for tid in order:
        proc = procs[assign[tid]]
        dur = b.exec_time(dag.task(tid), proc)
        start = max(b.timelines[proc.id].ready_time, b.data_arrival(tid, proc))
        b.place(tid, proc, start, dur)
    return b.result()


# ---------------------------------------------------------------------------
# Duplication scheduling heuristic


def dsh(dag: DagApp, platform: Platform) -> DagSchedule:
    """HLF with recursive duplication of predecessors into the idle slot.

    For each candidate processor the duplication slot runs from the end of
    its last scheduled task to the examined task's start.  The parent whose
    data arrives latest is copied there (recursively pulling its own latest
    parent when that makes the copy earlier) while the copy fits and the
    task's start strictly improves.
    """
    levels = task_levels(validate_dag(dag))
    key = _level_priority(levels)
    b = _Builder(dag, platform)
    heap, indeg = b.ready_heap(key)
    steps = []
    while heap:
        _, tid = heapq.heappop(heap)
        best = None
        for proc in b.procs:
            start, copies, cand_steps = _dsh_candidate(b, tid, proc)
            if best is None or start < best[0]:
                best = (start, proc, copies, cand_steps)
        start, proc, copies, cand_steps = best
        for c in copies:
            b.place(c.task_id, proc, c.start, c.duration, copy=True)
        b.place(tid, proc, start, b.exec_time(dag.task(tid), proc))
        steps.extend(cand_steps)
        b.release_children(tid, heap, indeg, key)
    return b.result(duplication_steps=steps)


def _latest_remote_parent(b: _Builder, tid, proc, extra):
    """Parent whose data arrives last on ``proc`` and has no instance there."""
    worst = None
    for u in b.dag.parents(tid):
        inst = b.instances.get(u, []) + [e for e in extra if e.task_id == u]
        if any(c.processor == proc.id for c in inst):
            continue
        comm = b.dag.comm(u, tid)
        arr = min(c.finish + comm for c in inst)
        if worst is None or (arr, u) > (worst[0], worst[1]):
            worst = (arr, u)
    return worst


def _try_duplicate(b: _Builder, u, proc, cursor, limit, extra, depth=0):
    """Copies (ancestors first) that put ``u`` on ``proc`` finishing by ``limit``."""
    task = b.dag.task(u)
    dur = b.exec_time(task, proc)
    start = max(cursor, b.data_arrival(u, proc, extra))
    chain = []
    crit = _latest_remote_parent(b, u, proc, extra)
    if crit is not None and depth < 8 and crit[0] > cursor:
        sub = _try_duplicate(b, crit[1], proc, cursor, start, extra, depth + 1)
        if sub is not None:
            sub_cursor = sub[-1].finish
            alt = max(sub_cursor, b.data_arrival(u, proc, list(extra) + sub))
            if alt < start:
                chain, start = sub, alt
    if start + dur > limit:
        return None
    return chain + [ScheduledSlot(u, start, start + dur, task.cost, Fraction(1), proc.id, True)]


def _dsh_candidate(b: _Builder, tid, proc):
    cursor = b.timelines[proc.id].ready_time
    est = max(cursor, b.data_arrival(tid, proc))
    copies, steps = [], []
    while True:
        crit = _latest_remote_parent(b, tid, proc, copies)
        if crit is None or crit[0] <= cursor:
            break
        dup = _try_duplicate(b, crit[1], proc, cursor, est, copies)
        if dup is None:
            break
        trial = copies + dup
        new_cursor = trial[-1].finish
        new_est = max(new_cursor, b.data_arrival(tid, proc, trial))
        if new_est >= est:
            break
        steps.append({"task": tid, "proc": proc.id, "before": est, "after": new_est, "copied": [c.task_id for c in dup]})
        copies, cursor, est = trial, new_cursor, new_est
    return est, copies, steps


# ---------------------------------------------------------------------------
# Guided random search


def _topo_ok(dag: DagApp, order) -> bool:
    pos = {t: i for i, t in enumerate(order)}
    return all(pos[e.parent] < pos[e.child] for e in dag.edges)


def sa(dag: DagApp, platform: Platform, T0=10.0, cooling_rate=0.9, iters_per_temp=20, temps=30, seed=0) -> DagSchedule:
    """Simulated annealing over (processor assignment, task order).

    Starts from the HLF schedule.  A neighbour moves one task to another
    processor or swaps two tasks in the order (kept topological).  A worse
    neighbour is accepted with probability exp(-delta / T); T is multiplied
    by ``cooling_rate`` after every ``iters_per_temp`` moves.  The best
    schedule seen is returned.
    """
    if T0 <= 0 or not 0 < cooling_rate < 1:
        raise ValueError("need T0 > 0 and 0 < cooling_rate < 1")
    rng = np.random.default_rng(seed)
    init = hlf(dag, platform)
    assign = {t: s.processor for t, s in init.slots.items()}
    order = list(init.meta["order"])
    cur = best = init
    cur_ms = best_ms = init.makespan
    pids = [p.id for p in platform.processors]
    n = len(order)
    T = float(T0)
    history = [float(cur_ms)]
    for _ in range(int(temps)):
        for _ in range(int(iters_per_temp)):
            new_assign, new_order = assign, order
            if len(pids) > 1 and (n < 2 or rng.random() < 0.5):
                t = order[int(rng.integers(n))]
                others = [p for p in pids if p != assign[t]]
                new_assign = dict(assign)
                new_assign[t] = others[int(rng.integers(len(others)))]
            elif n >= 2:
                i, j = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
                new_order = list(order)
                new_order[i], new_order[j] = new_order[j], new_order[i]
                if not _topo_ok(dag, new_order):
                    continue
            else:
                continue
            cand = decode(dag, platform, new_assign, new_order)
            delta = float(cand.makespan - cur_ms)
            if delta <= 0 or (T > 0 and rng.random() < math.exp(-delta / T)):
                assign, order, cur, cur_ms = new_assign, new_order, cand, cand.makespan
                if cur_ms < best_ms:
                    best, best_ms = cur, cur_ms
        history.append(float(best_ms))
        T *= cooling_rate
    best.meta.update(initial_makespan=init.makespan, history=history)
    return best


@dataclass(frozen=True)
class Chromosome:
    assign: tuple  # processor index per task (dag.topological_order positions)
    keys: tuple  # priority per task; higher runs first among ready tasks


def _chrom_order(dag: DagApp, chrom: Chromosome):
    ids = dag.topological_order
    key = {t: chrom.keys[i] for i, t in enumerate(ids)}
    indeg = {t: len(dag.parents(t)) for t in ids}
    heap = [(-key[t], t) for t in ids if indeg[t] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, t = heapq.heappop(heap)
        order.append(t)
        for c in dag.children(t):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, (-key[c], c))
    return order


def decode_chromosome(dag: DagApp, platform: Platform, chrom: Chromosome) -> DagSchedule:
    ids = dag.topological_order
    pids = [p.id for p in platform.processors]
    assign = {t: pids[chrom.assign[i]] for i, t in enumerate(ids)}
    return decode(dag, platform, assign, _chrom_order(dag, chrom))


def ga(
    dag: DagApp,
    platform: Platform,
    pop_size=20,
    generations=30,
    crossover_rate=0.9,
    mutation_rate=0.1,
    seed=0,
    initial_population=None,
) -> DagSchedule:
    """Genetic algorithm with fitness 1 / makespan.

    The random initial population is seeded with the HLF solution.
    Selection is binary tournament, crossover single point (applied to the
    assignment and priority vectors at the same cut), mutation reassigns a
    processor or redraws a priority.  The best individual always survives.
    """
    if pop_size < 2:
        raise ValueError("pop_size must be >= 2")
    validate_dag(dag)
    rng = np.random.default_rng(seed)
    ids = dag.topological_order
    n, q = len(ids), len(platform.processors)
    pids = [p.id for p in platform.processors]

    if initial_population is None:
        init = hlf(dag, platform)
        pos = {t: i for i, t in enumerate(init.meta["order"])}
        seed_chrom = Chromosome(
            tuple(pids.index(init.slots[t].processor) for t in ids),
            tuple(float(n - pos[t]) / n for t in ids),
        )
        population = [seed_chrom] + [
            Chromosome(tuple(int(x) for x in rng.integers(q, size=n)), tuple(float(x) for x in rng.random(n)))
            for _ in range(int(pop_size) - 1)
        ]
    else:
        population = list(initial_population)

    cache = {}

    def fitness(c):
        if c not in cache:
            cache[c] = decode_chromosome(dag, platform, c)
        return 1 / cache[c].makespan

    def tournament():
        i, j = (int(x) for x in rng.integers(len(population), size=2))
        a, b = population[i], population[j]
        return a if fitness(a) >= fitness(b) else b

    def mutate(c):
        assign, keys = list(c.assign), list(c.keys)
        for i in range(n):
            if rng.random() < mutation_rate:
                assign[i] = int(rng.integers(q))
            if rng.random() < mutation_rate:
                keys[i] = float(rng.random())
        return Chromosome(tuple(assign), tuple(keys))

    best = max(population, key=lambda c: (fitness(c), -population.index(c)))
    history = [float(fitness(best))]
    for _ in range(int(generations)):
        nxt = [best]
        while len(nxt) < len(population):
            p1, p2 = tournament(), tournament()
            if n > 1 and rng.random() < crossover_rate:
                cut = int(rng.integers(1, n))
                c1 = Chromosome(p1.assign[:cut] + p2.assign[cut:], p1.keys[:cut] + p2.keys[cut:])
                c2 = Chromosome(p2.assign[:cut] + p1.assign[cut:], p2.keys[:cut] + p1.keys[cut:])
            else:
                c1, c2 = p1, p2
            nxt.append(mutate(c1) if mutation_rate > 0 else c1)
            if len(nxt) < len(population):
                nxt.append(mutate(c2) if mutation_rate > 0 else c2)
        population = nxt
        for c in population:
            if fitness(c) > fitness(best):
                best = c
        history.append(float(fitness(best)))
    sched = cache[best]
    sched.meta.update(history=history, best=best, population=population)
    return sched


# ---------------------------------------------------------------------------
# EDF with approximate computations


@dataclass(frozen=True)
class Placement:
    processor: str
    start: Fraction
    finish: Fraction
    executed: Fraction
    gap: Optional[tuple] = None  # (start, end) of the gap used; None when appended

    @property
    def leftover(self):
        return None if self.gap is None else (self.gap[1] - self.gap[0]) - (self.finish - self.start)


VARIANTS = ("FF_AC", "BF_AC", "WF_AC")


def _gap_choice(task, tl: Timeline, ready, variant, need):
    speed = tl.processor.speed_factor
    options = []
    for g in tl.gaps(0):
        if not g.bounded:
            continue
        lo = max(g.start, ready)
        hi = min(g.end, task.deadline)
        if hi <= lo or (hi - lo) * speed < need:
            continue
        usable = (hi - lo) * speed
        amount = need if variant == "WF_AC" else min(task.cost, usable)
        dur = ceil_time(amount / speed)
        leftover = (g.end - g.start) - dur
        options.append((lo, amount, dur, leftover, g))
    if not options:
        return None
    if variant == "FF_AC":
        lo, amount, dur, _, g = min(options, key=lambda o: o[0])
    elif variant == "BF_AC":
        lo, amount, dur, _, g = min(options, key=lambda o: (-o[1], o[3], o[0]))
    else:
        lo, amount, dur, _, g = min(options, key=lambda o: (-o[3], o[0]))
    return Placement(tl.processor.id, lo, lo + dur, amount, (g.start, g.end))


def edf_ac_insert(task: Task, timelines: dict, variant: str, data_arrival: Optional[dict] = None, error_limit=1) -> Placement:
    """Place ``task`` using approximate computations and bin-packing gap choice.

    Only bounded idle gaps between scheduled slots are candidates.  The part
    inserted must cover at least the amount whose output error stays within
    ``error_limit`` (never less than the mandatory part) and finish by the
    deadline.  FF_AC takes the earliest eligible gap and fills it up to the
    full cost; BF_AC takes the gap admitting the largest amount, then the
    least unused time; WF_AC inserts only the required minimum into the gap
    leaving the most unused time.  Per processor, when no gap qualifies the
    full task is appended.  The processor with the earliest start wins.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if task.deadline is None:
        raise NoDeadline(f"task {task.id} has no deadline")
    need = min_amount_for_error(task, error_limit)
    best = None
    for pid, tl in timelines.items():
        ready = task.earliest_start if data_arrival is None else data_arrival[pid]
        p = _gap_choice(task, tl, ready, variant, need)
        if p is None:
            start = max(tl.ready_time, ready)
            p = Placement(pid, start, start + tl.processor.duration(task.cost), task.cost)
        if best is None or p.start < best.start:
            best = p
    return best


def edf_ac(dag: DagApp, platform: Platform, variant: str) -> DagSchedule:
    """EDF list scheduling with approximate-computation gap insertion."""
    validate_dag(dag)
    for t in dag.nodes:
        if t.deadline is None:
            raise NoDeadline(f"task {t.id} has no deadline")
    key = lambda tid: (dag.task(tid).deadline, tid)
    b = _Builder(dag, platform)
    heap, indeg = b.ready_heap(key)
    placements = {}
    while heap:
        _, tid = heapq.heappop(heap)
        task = dag.task(tid)
        limit = min((dag.task(c).input_error_limit for c in dag.children(tid)), default=Fraction(1))
        arrivals = {p.id: b.data_arrival(tid, p) for p in b.procs}
        p = edf_ac_insert(task, b.timelines, variant, arrivals, limit)
        b.place(tid, b.platform.processor(p.processor), p.start, p.finish - p.start, p.executed)
        placements[tid] = p
        b.release_children(tid, heap, indeg, key)
    return b.result(placements=placements, variant=variant)


# ---------------------------------------------------------------------------
# Validation and engine glue


def validate_schedule(dag: DagApp, platform: Platform, sched: DagSchedule) -> None:
    """Independent post-hoc check of precedence, capacity and amount bounds."""
    procs = {p.id: p for p in platform.processors}
    inst = {}
    for s in sched.all_slots():
        if s.processor not in procs:
            raise ScheduleInvalid(f"{s.task_id} on unknown processor {s.processor}")
        inst.setdefault(s.task_id, []).append(s)
    for t in dag.nodes:
        if t.id not in sched.slots:
            raise ScheduleInvalid(f"task {t.id} unscheduled")
    for s in sched.all_slots():
        task = dag.task(s.task_id)
        if not task.min_cost <= s.executed <= task.cost:
            raise ScheduleInvalid(f"{s.task_id}: executed {s.executed} outside [{task.min_cost}, {task.cost}]")
        if s.executed / procs[s.processor].speed_factor > s.finish - s.start:
            raise ScheduleInvalid(f"{s.task_id}: slot too short for executed amount")
        if s.start < task.earliest_start:
            raise ScheduleInvalid(f"{s.task_id} starts before it is available")
        for u in dag.parents(s.task_id):
            comm = dag.comm(u, s.task_id)
            arrive = min(c.finish + (0 if c.processor == s.processor else comm) for c in inst[u])
            if s.start < arrive:
                raise ScheduleInvalid(f"{s.task_id} on {s.processor} starts at {s.start} before data of {u} ({arrive})")
    for pid, slots in sched.by_processor().items():
        for a, c in zip(slots, slots[1:]):
            if c.start < a.finish:
                raise ScheduleInvalid(f"overlap on {pid}: {a.task_id} and {c.task_id}")


def compose(dags) -> tuple:
    """Merge several DAGs into one graph; ids become ``dag/task`` when needed."""
    if len(dags) == 1:
        d = dags[0]
        return d, {t.id: d.id for t in d.nodes}, {t.id: d.deadline for t in d.nodes}
    nodes, edges, app, deadline = [], [], {}, {}
    for d in dags:
        for t in d.nodes:
            nid = f"{d.id}/{t.id}"
            nodes.append(Task(nid, t.cost, t.min_cost, t.arrival, t.data_ready, t.deadline, t.input_error_limit, t.actual_cost_factor))
            app[nid], deadline[nid] = d.id, d.deadline
        for e in d.edges:
            edges.append(Edge(f"{d.id}/{e.parent}", f"{d.id}/{e.child}", e.comm))
    return DagApp("+".join(d.id for d in dags), nodes, edges), app, deadline


def schedule_dag(dag: DagApp, platform: Platform, policy, seed=0, deadlines=None) -> DagSchedule:
    name, p = policy.name, policy.params
    if name == "hlf":
        return hlf(dag, platform)
    if name == "ish":
        return ish(dag, platform)
    if name == "heft":
        return heft(dag, platform)
    if name == "edf":
        return edf(dag, platform)
    if name == "lstf":
        if deadlines is not None and any(v is None for v in deadlines.values()):
            raise NoDeadline("lstf needs a deadline on every DAG")
        return lstf(dag, platform, deadlines)
    if name == "dsc":
        return schedule_clustering(dag, platform, dsc(dag, platform))
    if name == "dsh":
        return dsh(dag, platform)
    if name == "sa":
        return sa(dag, platform, p["T0"], p["cool"], p["iters"], p["temps"], seed)
    if name == "ga":
        return ga(dag, platform, p["pop"], p["gens"], p["cx"], p["mut"], seed)
    if name == "edf-ac":
        return edf_ac(dag, platform, p["variant"])
    raise ValueError(f"not a DAG policy: {name}")


def run_dags(dags, platform: Platform, policy, seed=0) -> Outcome:
    dag, app, deadlines = compose(list(dags))
    sched = schedule_dag(dag, platform, policy, seed, deadlines)
    records = []
    for t in dag.nodes:
        s = sched.slots[t.id]
        records.append(TaskRecord(t.id, app[t.id], t.arrival, s.start, s.finish, t.deadline, s.executed, t.cost, t.min_cost))
    slots = sched.all_slots()
    events = static_events(records, slots, [(t, app[t.id]) for t in dag.nodes])
    return Outcome(records, slots, events, extra={"schedule": sched})
