"""Workload model: tasks, gangs, DAG workflows, bags of tasks, periodic tasks.

Also hosts the DAG analytics used by every workflow policy (levels, critical
path), the real-time priority quantities and the approximate-computation
error model, plus seeded synthetic generators and the JSON/CSV formats.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .timebase import RESOLUTION, as_time, to_float


class WorkloadError(ValueError):
    pass


class InvalidTask(WorkloadError):
    pass


class InvalidDag(WorkloadError):
    pass


class CycleDetected(InvalidDag):
    pass


class DanglingEdge(InvalidDag):
    pass


class NoEntryOrExit(InvalidDag):
    pass


class DuplicateEdge(InvalidDag):
    pass


class UnknownTask(WorkloadError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


class NoDeadline(WorkloadError):
    pass


class BelowMandatory(WorkloadError):
    pass


class InvalidDistributionParams(WorkloadError):
    pass


@dataclass(frozen=True)
class Task:
    """A unit of work.

    ``min_cost`` is the mandatory part (defaults to the full cost, i.e. a task
    that cannot be approximated).  ``actual_cost_factor`` scales the real
    execution time relative to the worst case and is only consulted by the
    simulation (slack reclamation), never by static schedulers.
    """

    id: str
    cost: Fraction
    min_cost: Optional[Fraction] = None
    arrival: Fraction = Fraction(0)
    data_ready: Fraction = Fraction(0)
    deadline: Optional[Fraction] = None
    input_error_limit: Fraction = Fraction(1)
    actual_cost_factor: Fraction = Fraction(1)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "id", str(self.id))
        set_(self, "cost", as_time(self.cost))
        set_(self, "min_cost", self.cost if self.min_cost is None else as_time(self.min_cost))
        set_(self, "arrival", as_time(self.arrival))
        set_(self, "data_ready", as_time(self.data_ready))
        if self.deadline is not None:
            set_(self, "deadline", as_time(self.deadline))
        set_(self, "input_error_limit", Fraction(self.input_error_limit).limit_denominator(10**6))
        set_(self, "actual_cost_factor", Fraction(self.actual_cost_factor).limit_denominator(10**6))

        if not 0 < self.min_cost <= self.cost:
            raise InvalidTask(f"task {self.id}: need 0 < minCost <= cost, got {self.min_cost}, {self.cost}")
        if self.arrival < 0 or self.data_ready < 0:
            raise InvalidTask(f"task {self.id}: arrival and dataReady must be >= 0")
        if self.deadline is not None and self.deadline <= self.arrival:
            raise InvalidTask(f"task {self.id}: deadline must be later than arrival")
        if not 0 <= self.input_error_limit <= 1:
            raise InvalidTask(f"task {self.id}: inputErrorLimit must lie in [0, 1]")
        if not 0 < self.actual_cost_factor <= 1:
            raise InvalidTask(f"task {self.id}: actualCostFactor must lie in (0, 1]")

    @property
    def optional_cost(self) -> Fraction:
        return self.cost - self.min_cost

    @property
    def earliest_start(self) -> Fraction:
        return max(self.arrival, self.data_ready)


@dataclass(frozen=True)
class Gang:
    """Frequently communicating tasks that start together on distinct processors.

    ``placement`` optionally pins member ``i`` to a processor queue; without it
    the gang dispatcher chooses queues at arrival.
    """

    id: str
    tasks: tuple
    arrival: Fraction = Fraction(0)
    deadline: Optional[Fraction] = None
    placement: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "arrival", as_time(self.arrival))
        if not self.tasks:
            raise InvalidTask(f"gang {self.id}: size must be >= 1")
        for t in self.tasks:
            if t.arrival != self.arrival:
                raise InvalidTask(f"gang {self.id}: member {t.id} arrival differs from gang arrival")
        if self.deadline is None:
            member_deadlines = [t.deadline for t in self.tasks if t.deadline is not None]
            if member_deadlines:
                object.__setattr__(self, "deadline", min(member_deadlines))
        else:
            object.__setattr__(self, "deadline", as_time(self.deadline))
        if self.placement is not None:
            placement = tuple(str(p) for p in self.placement)
            if len(placement) != len(self.tasks) or len(set(placement)) != len(placement):
                raise InvalidTask(f"gang {self.id}: placement must name one distinct processor per member")
            object.__setattr__(self, "placement", placement)

    @property
    def size(self) -> int:
        return len(self.tasks)


@dataclass(frozen=True)
class Edge:
    parent: str
    child: str
    comm: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "parent", str(self.parent))
        object.__setattr__(self, "child", str(self.child))
        object.__setattr__(self, "comm", as_time(self.comm))
        if self.comm < 0:
            raise InvalidDag(f"edge {self.parent}->{self.child}: negative communication cost")


@dataclass(frozen=True)
class DagApp:
    """Workflow application: nodes weighted by cost, edges by communication cost."""

    id: str
    nodes: tuple
    edges: tuple = ()
    deadline: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(
            self, "edges", tuple(e if isinstance(e, Edge) else Edge(*e) for e in self.edges)
        )
        if self.deadline is not None:
            object.__setattr__(self, "deadline", as_time(self.deadline))

    @cached_property
    def tasks_by_id(self) -> dict:
        out = {}
        for t in self.nodes:
            if t.id in out:
                raise InvalidDag(f"dag {self.id}: duplicate task id {t.id}")
            out[t.id] = t
        return out

    def task(self, task_id) -> Task:
        try:
            return self.tasks_by_id[task_id]
        except KeyError:
            raise UnknownTask(f"dag {self.id} has no task {task_id!r}") from None

    @cached_property
    def _adjacency(self):
        parents = {t.id: [] for t in self.nodes}
        children = {t.id: [] for t in self.nodes}
        comm = {}
        for e in self.edges:
            if e.parent in children and e.child in parents:
                children[e.parent].append(e.child)
                parents[e.child].append(e.parent)
                comm[(e.parent, e.child)] = e.comm
        for lst in list(parents.values()) + list(children.values()):
            lst.sort()
        return parents, children, comm

    def parents(self, task_id) -> list:
        return self._adjacency[0][task_id]

    def children(self, task_id) -> list:
        return self._adjacency[1][task_id]

    def comm(self, parent, child) -> Fraction:
        return self._adjacency[2][(parent, child)]

    @cached_property
    def topological_order(self) -> tuple:
        """Kahn's algorithm, smallest id first among ready nodes."""
        import heapq

        parents, children, _ = self._adjacency
        indeg = {k: len(v) for k, v in parents.items()}
        heap = [k for k, d in indeg.items() if d == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            n = heapq.heappop(heap)
            order.append(n)
            for c in children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, c)
        if len(order) != len(self.nodes):
            raise CycleDetected(f"dag {self.id} contains a cycle")
        return tuple(order)

    @property
    def entries(self) -> list:
        return sorted(t.id for t in self.nodes if not self.parents(t.id))

    @property
    def exits(self) -> list:
        return sorted(t.id for t in self.nodes if not self.children(t.id))


@dataclass(frozen=True)
class BotApp:
    """Bag of independent tasks with an ETC matrix (rows tasks, columns processors)."""

    id: str
    tasks: tuple
    etc: tuple

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        etc = tuple(tuple(as_time(v) for v in row) for row in self.etc)
        object.__setattr__(self, "etc", etc)
        if len(etc) != len(self.tasks):
            raise InvalidTask(f"bot {self.id}: ETC has {len(etc)} rows for {len(self.tasks)} tasks")
        widths = {len(row) for row in etc}
        if len(widths) > 1 or (etc and 0 in widths):
            raise InvalidTask(f"bot {self.id}: ETC rows must have one equal, nonzero width")
        if any(v <= 0 for row in etc for v in row):
            raise InvalidTask(f"bot {self.id}: ETC entries must be > 0")

    @property
    def n_processors(self) -> int:
        return len(self.etc[0]) if self.etc else 0


@dataclass(frozen=True)
class PeriodicTask:
    """Periodic real-time task; each release is due at the next release."""

    id: str
    period: Fraction
    mandatory_cost: Fraction
    optional_cost: Fraction = Fraction(0)
    actual_cost_factor: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "period", as_time(self.period))
        object.__setattr__(self, "mandatory_cost", as_time(self.mandatory_cost))
        object.__setattr__(self, "optional_cost", as_time(self.optional_cost))
        object.__setattr__(
            self, "actual_cost_factor", Fraction(self.actual_cost_factor).limit_denominator(10**6)
        )
        if self.period <= 0 or self.mandatory_cost <= 0 or self.optional_cost < 0:
            raise InvalidTask(f"periodic task {self.id}: bad period/cost values")
        if self.mandatory_cost > self.period:
            raise InvalidTask(f"periodic task {self.id}: mandatoryCost exceeds period")
        if not 0 < self.actual_cost_factor <= 1:
            raise InvalidTask(f"periodic task {self.id}: actualCostFactor must lie in (0, 1]")


@dataclass(frozen=True)
class Workload:
    gangs: tuple = ()
    dags: tuple = ()
    bots: tuple = ()
    periodic: tuple = ()

    def __post_init__(self):
        for name in ("gangs", "dags", "bots", "periodic"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def classes(self) -> set:
        return {name for name in ("gangs", "dags", "bots", "periodic") if getattr(self, name)}

    def is_empty(self) -> bool:
        return not self.classes


# ---------------------------------------------------------------------------
# DAG analytics


def validate_dag(dag: DagApp) -> DagApp:
    """Return ``dag`` unchanged if it is a well-formed DAG, raise otherwise."""
    if not dag.nodes:
        raise NoEntryOrExit(f"dag {dag.id} has no tasks")
    ids = dag.tasks_by_id  # raises on duplicate ids
    seen = set()
    for e in dag.edges:
        if e.parent not in ids or e.child not in ids:
            missing = e.parent if e.parent not in ids else e.child
            raise DanglingEdge(f"dag {dag.id}: edge {e.parent}->{e.child} references missing task {missing}")
        if (e.parent, e.child) in seen:
            raise DuplicateEdge(f"dag {dag.id}: duplicate edge {e.parent}->{e.child}")
        if e.parent == e.child:
            raise CycleDetected(f"dag {dag.id}: self loop on {e.parent}")
        seen.add((e.parent, e.child))
    dag.topological_order  # raises CycleDetected
    if not dag.entries or not dag.exits:
        raise NoEntryOrExit(f"dag {dag.id} lacks an entry or exit task")
    return dag


def task_levels(
    dag: DagApp,
    cost: Optional[Callable[[Task], Fraction]] = None,
    comm: Optional[Callable[[str, str], Fraction]] = None,
) -> dict:
    """Level of every task: longest cost+communication path down to an exit.

    ``cost`` and ``comm`` override the node and edge weights (HEFT uses mean
    execution times over processors).
    """
    cost = cost or (lambda t: t.cost)
    comm = comm or dag.comm
    levels = {}
    for n in reversed(dag.topological_order):
        below = [comm(n, c) + levels[c] for c in dag.children(n)]
        levels[n] = cost(dag.task(n)) + (max(below) if below else 0)
    return levels


def task_level(dag: DagApp, task_id) -> Fraction:
    dag.task(task_id)
    return task_levels(dag)[str(task_id)]


def critical_path(dag: DagApp) -> tuple:
    """Longest entry-to-exit path as ``(ids, length)``.

    Among equally long paths the lexicographically smallest id sequence wins;
    walking greedily from the smallest qualifying entry produces it.
    """
    validate_dag(dag)
    levels = task_levels(dag)
    length = max(levels[e] for e in dag.entries)
    node = min(e for e in dag.entries if levels[e] == length)
    path = [node]
    while dag.children(node):
        remaining = levels[node] - dag.task(node).cost
        node = min(c for c in dag.children(node) if dag.comm(node, c) + levels[c] == remaining)
        path.append(node)
    return path, length


def laxity(task: Task, estimated_finish) -> Fraction:
    """Deadline minus estimated finish time (may be negative)."""
    if task.deadline is None:
        raise NoDeadline(f"task {task.id} has no deadline")
    return task.deadline - as_time(estimated_finish)


def space_time(dag: DagApp, task_id, levels: Optional[dict] = None) -> Fraction:
    if dag.deadline is None:
        raise NoDeadline(f"dag {dag.id} has no deadline")
    dag.task(task_id)
    levels = levels if levels is not None else task_levels(dag)
    return dag.deadline - levels[str(task_id)]


def output_error(task: Task, executed) -> Fraction:
    """Output error of a monotone task that executed ``executed`` units.

    Linear in the unexecuted fraction of the optional part: 0 after a full
    run, 1 after the mandatory part only.
    """
    executed = as_time(executed)
    if executed < task.min_cost:
        raise BelowMandatory(f"task {task.id}: executed {executed} < minCost {task.min_cost}")
    if executed > task.cost:
        raise ValueError(f"task {task.id}: executed {executed} exceeds cost {task.cost}")
    if task.cost == task.min_cost:
        return Fraction(0)
    return (task.cost - executed) / (task.cost - task.min_cost)


def min_amount_for_error(task: Task, error_limit) -> Fraction:
    """Smallest executed amount whose output error stays within ``error_limit``."""
    error_limit = Fraction(error_limit)
    if task.cost == task.min_cost:
        return task.cost
    need = task.cost - error_limit * (task.cost - task.min_cost)
    return max(task.min_cost, need)


# ---------------------------------------------------------------------------
# Synthetic generators


def _draw_spec(spec):
    """Normalise a distribution spec into ``(kind, params)``.

    Accepted: a bare number (constant), ``("uniform", lo, hi)``,
    ``("randint", lo, hi)`` inclusive, ``("exponential", mean)``,
    ``("choice", [values])``, ``("const", v)`` or the same as a
    ``"kind:a:b"`` string.
    """
    if isinstance(spec, (int, float, Fraction)):
        return "const", (spec,)
    if isinstance(spec, str):
        kind, *rest = spec.split(":")
        if kind == "choice":
            return kind, ([float(x) for x in rest],)
        try:
            return kind, tuple(float(x) for x in rest)
        except ValueError:
            raise InvalidDistributionParams(f"bad distribution spec {spec!r}") from None
    if isinstance(spec, dict):
        spec = dict(spec)
        kind = spec.pop("kind")
        return kind, tuple(spec.values())
    kind, *params = spec
    return kind, tuple(params)


class Distribution:
    def __init__(self, spec, positive=True, integer=False):
        self.kind, self.params = _draw_spec(spec)
        p = self.params
        bad = False
        if self.kind == "const":
            bad = len(p) != 1 or (positive and p[0] <= 0)
        elif self.kind in ("uniform", "randint"):
            bad = len(p) != 2 or p[0] > p[1] or (positive and p[0] <= 0)
        elif self.kind == "exponential":
            bad = len(p) != 1 or p[0] <= 0
        elif self.kind == "choice":
            bad = len(p) != 1 or not p[0] or (positive and min(p[0]) <= 0)
        else:
            bad = True
        if integer and self.kind in ("uniform", "exponential"):
            bad = True
        if bad:
            raise InvalidDistributionParams(f"invalid distribution {self.kind}{self.params}")

    def draw(self, rng: np.random.Generator):
        p = self.params
        if self.kind == "const":
            return p[0]
        if self.kind == "uniform":
            return float(rng.uniform(p[0], p[1]))
        if self.kind == "randint":
            return int(rng.integers(int(p[0]), int(p[1]) + 1))
        if self.kind == "exponential":
            return float(rng.exponential(p[0]))
        return p[0][int(rng.integers(len(p[0])))]

    def draw_time(self, rng) -> Fraction:
        return max(RESOLUTION, as_time(self.draw(rng)))


def _check(cond, msg):
    if not cond:
        raise InvalidDistributionParams(msg)


def gen_gangs(
    count: int,
    size_distribution,
    cost_distribution,
    arrival_process=("poisson", 1.0),
    seed: int = 0,
    *,
    max_size: Optional[int] = None,
    mandatory_fraction=1,
    deadline_factor=None,
) -> list:
    """Random gangs.

    ``arrival_process`` is ``("poisson", rate)``, ``("fixed", interval)`` or
    ``("batch",)``.  With ``deadline_factor`` every gang gets a deadline of
    arrival + factor * largest member cost.
    """
    _check(count >= 0, "count must be >= 0")
    sizes = Distribution(size_distribution, integer=True)
    costs = Distribution(cost_distribution)
    kind, *ap = arrival_process if not isinstance(arrival_process, str) else arrival_process.split(":")
    _check(kind in ("poisson", "fixed", "batch"), f"unknown arrival process {kind!r}")
    if kind != "batch":
        _check(len(ap) == 1 and float(ap[0]) > 0, "arrival process needs one positive parameter")
    _check(0 < float(mandatory_fraction) <= 1, "mandatory_fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    gangs, now = [], Fraction(0)
    for i in range(count):
        if kind == "poisson":
            now += as_time(rng.exponential(1.0 / float(ap[0])))
        elif kind == "fixed" and i > 0:
            now += as_time(float(ap[0]))
        size = int(sizes.draw(rng))
        if max_size is not None:
            size = min(size, max_size)
        _check(size >= 1, "gang size must be >= 1")
        gid = f"g{i:03d}"
        member_costs = [costs.draw_time(rng) for _ in range(size)]
        deadline = None
        if deadline_factor is not None:
            deadline = now + max(RESOLUTION, as_time(Fraction(deadline_factor) * max(member_costs)))
        tasks = []
        for j, c in enumerate(member_costs):
            mc = max(RESOLUTION, as_time(c * Fraction(mandatory_fraction)))
            tasks.append(Task(f"{gid}.{j}", c, min(mc, c), arrival=now, deadline=deadline))
        gangs.append(Gang(gid, tasks, arrival=now, deadline=deadline))
    return gangs


def gen_dags(
    count: int,
    layers: int,
    fanout: int,
    cost_distribution=("uniform", 1, 10),
    ccr=1.0,
    deadline_slack=None,
    seed: int = 0,
    *,
    mandatory_fraction=1,
    arrival_process=("batch",),
) -> list:
    """Random layered DAGs.

    The first layer is a single entry task; every later layer holds
    1..fanout tasks, each drawing 1..fanout parents from the layer above.  Edge costs are uniform on
    [0, 2 * ccr * mean node cost], so their mean is ``ccr`` times the mean
    computational cost.  ``deadline_slack`` sets the DAG deadline to
    (1 + slack) * critical path length.
    """
    _check(count >= 0 and layers >= 1 and fanout >= 1, "count >= 0, layers >= 1, fanout >= 1 required")
    _check(ccr >= 0, "ccr must be >= 0")
    _check(deadline_slack is None or deadline_slack >= 0, "deadline_slack must be >= 0")
    _check(0 < float(mandatory_fraction) <= 1, "mandatory_fraction must lie in (0, 1]")
    costs = Distribution(cost_distribution)
    kind, *ap = arrival_process
    rng = np.random.default_rng(seed)
    dags, now = [], Fraction(0)
    for i in range(count):
        if kind == "poisson":
            now += as_time(rng.exponential(1.0 / float(ap[0])))
        elif kind == "fixed" and i > 0:
            now += as_time(float(ap[0]))
        widths = [1] + [int(rng.integers(1, fanout + 1)) for _ in range(layers - 1)]
        total = sum(widths)
        digits = len(str(total - 1))
        names, k = [], 0
        for w in widths:
            names.append([f"t{k + j:0{digits}d}" for j in range(w)])
            k += w
        node_costs = {n: costs.draw_time(rng) for layer in names for n in layer}
        mean_cost = sum(node_costs.values()) / len(node_costs)
        edges = []
        for prev, layer in zip(names, names[1:]):
            for n in layer:
                n_par = int(rng.integers(1, min(fanout, len(prev)) + 1))
                for idx in sorted(rng.choice(len(prev), size=n_par, replace=False)):
                    comm = as_time(rng.uniform(0, 2 * ccr * float(mean_cost))) if ccr > 0 else Fraction(0)
                    edges.append(Edge(prev[int(idx)], n, comm))
        nodes = []
        for n, c in node_costs.items():
            mc = max(RESOLUTION, as_time(c * Fraction(mandatory_fraction)))
            nodes.append(Task(n, c, min(mc, c), arrival=now))
        dag = DagApp(f"d{i:03d}", nodes, edges)
        if deadline_slack is not None:
            _, cp = critical_path(dag)
            dag = DagApp(dag.id, nodes, edges, deadline=now + as_time(cp * (1 + Fraction(deadline_slack))))
        dags.append(validate_dag(dag))
    return dags


def gen_bots(
    count: int,
    tasks_per_bot: int,
    etc_heterogeneity: float,
    seed: int = 0,
    *,
    processors=2,
    cost_distribution=("uniform", 1, 10),
    deadline_factor=None,
    actual_cost_factor=1,
) -> list:
    """Random BoT applications.

    ETC[i][j] = cost_i / speed_j * U(1 - h, 1 + h).  ``processors`` is a
    processor count (unit speeds) or a list of speed factors.
    """
    _check(count >= 0 and tasks_per_bot >= 1, "count >= 0 and tasks_per_bot >= 1 required")
    _check(0 <= etc_heterogeneity < 1, "etc_heterogeneity must lie in [0, 1)")
    speeds = [1.0] * processors if isinstance(processors, int) else [float(s) for s in processors]
    _check(speeds and all(s > 0 for s in speeds), "need at least one processor with speed > 0")
    costs = Distribution(cost_distribution)
    rng = np.random.default_rng(seed)
    bots = []
    for i in range(count):
        tasks, etc = [], []
        digits = len(str(tasks_per_bot - 1))
        for j in range(tasks_per_bot):
            c = costs.draw_time(rng)
            deadline = None
            if deadline_factor is not None:
                deadline = max(RESOLUTION, as_time(c * Fraction(deadline_factor)))
            tasks.append(Task(f"t{j:0{digits}d}", c, deadline=deadline, actual_cost_factor=actual_cost_factor))
            noise = rng.uniform(1 - etc_heterogeneity, 1 + etc_heterogeneity, size=len(speeds))
            etc.append([max(RESOLUTION, as_time(float(c) / s * float(u))) for s, u in zip(speeds, noise)])
        bots.append(BotApp(f"b{i:03d}", tasks, etc))
    return bots


# ---------------------------------------------------------------------------
# Serialization


def _num(v):
    return to_float(v)


def task_to_dict(t: Task) -> dict:
    d = {"id": t.id, "cost": _num(t.cost), "minCost": _num(t.min_cost)}
    if t.arrival:
        d["arrival"] = _num(t.arrival)
    if t.data_ready:
        d["dataReady"] = _num(t.data_ready)
    if t.deadline is not None:
        d["deadline"] = _num(t.deadline)
    if t.input_error_limit != 1:
        d["inputErrorLimit"] = float(t.input_error_limit)
    if t.actual_cost_factor != 1:
        d["actualCostFactor"] = float(t.actual_cost_factor)
    return d


def task_from_dict(d: dict, arrival=None) -> Task:
    return Task(
        d["id"],
        d["cost"],
        d.get("minCost"),
        arrival=d.get("arrival", 0) if arrival is None else arrival,
        data_ready=d.get("dataReady", 0),
        deadline=d.get("deadline"),
        input_error_limit=Fraction(str(d.get("inputErrorLimit", 1))),
        actual_cost_factor=Fraction(str(d.get("actualCostFactor", 1))),
    )


def workload_to_dict(w: Workload) -> dict:
    out = {"gangs": [], "dags": [], "bots": [], "periodic": []}
    for g in w.gangs:
        gd = {"id": g.id, "arrival": _num(g.arrival), "tasks": [task_to_dict(t) for t in g.tasks]}
        if g.deadline is not None:
            gd["deadline"] = _num(g.deadline)
        if g.placement is not None:
            gd["placement"] = list(g.placement)
        out["gangs"].append(gd)
    for dag in w.dags:
        dd = {
            "id": dag.id,
            "nodes": [task_to_dict(t) for t in dag.nodes],
            "edges": [{"from": e.parent, "to": e.child, "comm": _num(e.comm)} for e in dag.edges],
        }
        if dag.deadline is not None:
            dd["deadline"] = _num(dag.deadline)
        out["dags"].append(dd)
    for b in w.bots:
        out["bots"].append(
            {"id": b.id, "tasks": [task_to_dict(t) for t in b.tasks], "etc": [[_num(v) for v in row] for row in b.etc]}
        )
    for p in w.periodic:
        pd = {
            "id": p.id,
            "period": _num(p.period),
            "mandatoryCost": _num(p.mandatory_cost),
            "optionalCost": _num(p.optional_cost),
        }
        if p.actual_cost_factor != 1:
            pd["actualCostFactor"] = float(p.actual_cost_factor)
        out["periodic"].append(pd)
    return out


def workload_from_dict(d: dict, base_dir=None) -> Workload:
    unknown = set(d) - {"gangs", "dags", "bots", "periodic"}
    if unknown:
        raise WorkloadError(f"unknown workload sections: {sorted(unknown)}")
    gangs = []
    for g in d.get("gangs", []):
        arrival = g.get("arrival", 0)
        gangs.append(
            Gang(
                g["id"],
                [task_from_dict(t, arrival=arrival) for t in g["tasks"]],
                arrival=arrival,
                deadline=g.get("deadline"),
                placement=g.get("placement"),
            )
        )
    dags = []
    for dd in d.get("dags", []):
        edges = [Edge(e["from"], e["to"], e.get("comm", 0)) for e in dd.get("edges", [])]
        dag = DagApp(dd["id"], [task_from_dict(t) for t in dd["nodes"]], edges, dd.get("deadline"))
        dags.append(validate_dag(dag))
    bots = []
    for b in d.get("bots", []):
        etc = b.get("etc")
        if etc is None and "etcCsv" in b:
            path = b["etcCsv"]
            if base_dir is not None:
                path = os.path.join(base_dir, path)
            etc = load_etc_csv(path)
        bots.append(BotApp(b["id"], [task_from_dict(t) for t in b["tasks"]], etc))
    periodic = [
        PeriodicTask(
            p["id"],
            p["period"],
            p["mandatoryCost"],
            p.get("optionalCost", 0),
            Fraction(str(p.get("actualCostFactor", 1))),
        )
        for p in d.get("periodic", [])
    ]
    return Workload(gangs, dags, bots, periodic)


def load_workload(path) -> Workload:
    with open(path) as fh:
        return workload_from_dict(json.load(fh), base_dir=os.path.dirname(os.path.abspath(path)))


def save_workload(workload: Workload, path) -> None:
    with open(path, "w") as fh:
        json.dump(workload_to_dict(workload), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_etc_csv(path) -> list:
    """ETC matrix from CSV: one row per task, one column per processor."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    try:
        return [[as_time(float(v)) for v in row] for row in rows]
    except ValueError:
        raise WorkloadError(f"{path}: ETC entries must be numeric") from None


def four_tasks() -> list:
    """The four-task approximate-computation example (deadline, t_data, c, c_min)."""
    rows = [("n1", 2, 0, 1, 1), ("n2", 4, 2, 1, 1), ("n3", 9, 5, 2, 1), ("n4", 10, 1, 3, 1)]
    return [Task(i, c, cm, deadline=d, data_ready=td) for i, d, td, c, cm in rows]
