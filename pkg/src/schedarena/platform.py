"""Processors, per-processor timelines with gap search, cloud hosts/VMs, power."""
from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .timebase import INF, RESOLUTION, as_time, ceil_time, to_float


class PlatformError(ValueError):
    pass


class OverlappingSlots(PlatformError):
    pass


class Overlap(PlatformError):
    pass


class DataNotReady(PlatformError):
    pass


def _levels(levels):
    if levels is None:
        return None
    out = tuple(Fraction(str(x)) if isinstance(x, float) else Fraction(x) for x in levels)
    if not out or any(b <= a for a, b in zip(out, out[1:])) or out[0] <= 0 or out[-1] != 1:
        raise PlatformError(f"frequency levels must be strictly increasing in (0, 1] and end at 1.0: {levels}")
    return out


def pick_level(levels, needed) -> Fraction:
    """Smallest available frequency ratio >= ``needed`` (1.0 if none is).

    ``levels=None`` means continuous scaling; the ratio is rounded up to the
    time grid so it stays exactly representable.
    """
    needed = Fraction(needed)
    if needed >= 1:
        return Fraction(1)
    if levels is None:
        return max(RESOLUTION, ceil_time(needed))
    for lvl in levels:
        if lvl >= needed:
            return lvl
    return Fraction(1)


@dataclass(frozen=True)
class Processor:
    """A processing element.

    Execution time of ``w`` work units = w / (speed_factor * frequency).
    ``frequency_levels=None`` allows any ratio in (0, 1].
    """

    id: str
    speed_factor: Fraction = Fraction(1)
    frequency_levels: Optional[tuple] = (Fraction(1),)

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        sf = self.speed_factor
        object.__setattr__(self, "speed_factor", Fraction(str(sf)) if isinstance(sf, float) else Fraction(sf))
        if self.speed_factor <= 0:
            raise PlatformError(f"processor {self.id}: speedFactor must be > 0")
        object.__setattr__(self, "frequency_levels", _levels(self.frequency_levels))

    def duration(self, work, frequency=1) -> Fraction:
        """Grid-rounded wall time to execute ``work`` units at ``frequency``."""
        return ceil_time(Fraction(work) / (self.speed_factor * Fraction(frequency)))


@dataclass(frozen=True)
class ScheduledSlot:
    task_id: str
    start: Fraction
    finish: Fraction
    executed: Fraction
    frequency: Fraction = Fraction(1)
    processor: Optional[str] = None
    copy: bool = False

    def __post_init__(self):
        if not self.start < self.finish:
            raise PlatformError(f"slot for {self.task_id}: start {self.start} must precede finish {self.finish}")

    @property
    def duration(self) -> Fraction:
        return self.finish - self.start


@dataclass(frozen=True)
class Gap:
    processor: Optional[str]
    start: Fraction
    end: object  # Fraction or INF

    @property
    def length(self):
        return self.end - self.start

    @property
    def bounded(self) -> bool:
        return self.end != INF


def _sorted_checked(slots) -> list:
    slots = sorted(slots, key=lambda s: (s.start, s.finish))
    for a, b in zip(slots, slots[1:]):
        if b.start < a.finish:
            raise OverlappingSlots(f"slots {a.task_id}[{a.start},{a.finish}) and {b.task_id}[{b.start},{b.finish}) overlap")
    return slots


def find_gaps(slots: Iterable[ScheduledSlot], horizon_start=0, processor=None) -> list:
    """Idle intervals from ``horizon_start`` on; the last one is unbounded."""
    horizon_start = as_time(horizon_start)
    cursor = horizon_start
    gaps = []
    for s in _sorted_checked(slots):
        if s.finish <= cursor:
            continue
        if s.start > cursor:
            gaps.append(Gap(processor, cursor, s.start))
        cursor = max(cursor, s.finish)
    gaps.append(Gap(processor, cursor, INF))
    return gaps


def insert_slot(schedule, task, start, duration, frequency_ratio=1, speed_factor=1, processor=None, executed=None):
    """Return a new sorted slot tuple with ``task`` placed at [start, start+duration).

    Existing slots are never moved; the new slot must fit inside a gap.
    """
    start, duration = as_time(start), as_time(duration)
    if start < task.earliest_start:
        raise DataNotReady(f"task {task.id} cannot start at {start}, data ready at {task.earliest_start}")
    frequency_ratio = Fraction(frequency_ratio)
    if executed is None:
        executed = min(task.cost, duration * Fraction(speed_factor) * frequency_ratio)
    new = ScheduledSlot(task.id, start, start + duration, executed, frequency_ratio, processor)
    slots = list(schedule)
    for s in slots:
        if s.start < new.finish and new.start < s.finish:
            raise Overlap(f"[{new.start},{new.finish}) overlaps {s.task_id}[{s.start},{s.finish})")
    return tuple(sorted(slots + [new], key=lambda s: (s.start, s.finish)))


class Timeline:
    """Mutable, sorted, non-overlapping slot list of one processor."""

    def __init__(self, processor: Processor, slots=()):
        self.processor = processor
        self.slots = _sorted_checked(slots)
        self._starts = [s.start for s in self.slots]

    def copy(self) -> "Timeline":
        t = Timeline.__new__(Timeline)
        t.processor = self.processor
        t.slots = list(self.slots)
        t._starts = list(self._starts)
        return t

    @property
    def ready_time(self) -> Fraction:
        return max((s.finish for s in self.slots), default=Fraction(0))

    def gaps(self, horizon_start=0) -> list:
        return find_gaps(self.slots, horizon_start, self.processor.id)

    def earliest_start(self, ready, duration, insertion=True) -> Fraction:
        """Earliest t >= ready where [t, t + duration) is idle.

        Without insertion the task may only be appended after the last slot.
        """
        if not insertion:
            return max(ready, self.ready_time)
        for g in self.gaps(0):
            t = max(g.start, ready)
            if t + duration <= g.end:
                return t
        raise AssertionError("unbounded trailing gap always fits")

    def add(self, slot: ScheduledSlot) -> None:
        i = bisect.bisect_left(self._starts, slot.start)
        if i > 0 and self.slots[i - 1].finish > slot.start:
            raise Overlap(f"{slot.task_id} overlaps {self.slots[i - 1].task_id} on {self.processor.id}")
        if i < len(self.slots) and self.slots[i].start < slot.finish:
            raise Overlap(f"{slot.task_id} overlaps {self.slots[i].task_id} on {self.processor.id}")
        self.slots.insert(i, slot)
        self._starts.insert(i, slot.start)


@dataclass(frozen=True)
class VmInstance:
    id: str
    host_id: str
    frequency: Fraction = Fraction(1)
    busy: bool = False
    ready_time: Fraction = Fraction(0)
    speed_factor: Fraction = Fraction(1)
    frequency_levels: Optional[tuple] = (Fraction(1),)

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "host_id", str(self.host_id))
        object.__setattr__(self, "frequency_levels", _levels(self.frequency_levels))
        object.__setattr__(self, "speed_factor", Fraction(str(self.speed_factor)) if isinstance(self.speed_factor, float) else Fraction(self.speed_factor))
        f = self.frequency
        object.__setattr__(self, "frequency", Fraction(str(f)) if isinstance(f, float) else Fraction(f))


@dataclass(frozen=True)
class Host:
    id: str
    vms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "vms", tuple(self.vms))
        for vm in self.vms:
            if vm.host_id != self.id:
                raise PlatformError(f"vm {vm.id} claims host {vm.host_id}, listed under {self.id}")

    @property
    def idle(self) -> bool:
        return not any(vm.busy for vm in self.vms)


@dataclass(frozen=True)
class PowerModel:
    """P(f) = static + dynamic * f**exponent; an idle processor draws ``static``.

    With an integer exponent the arithmetic stays exact (coefficients are read
    as decimals), so energy totals do not depend on summation order.
    """

    static: float = 0.0
    dynamic: float = 1.0
    exponent: float = 3

    def __post_init__(self):
        if self.static < 0 or self.dynamic < 0:
            raise PlatformError("power coefficients must be >= 0")

    @property
    def _exact(self) -> bool:
        return float(self.exponent).is_integer()

    def _coef(self, x):
        return Fraction(str(x)) if self._exact else float(x)

    def power(self, f):
        if self._exact:
            return self._coef(self.static) + self._coef(self.dynamic) * Fraction(f) ** int(self.exponent)
        return self.static + self.dynamic * float(f) ** self.exponent

    def idle_power(self):
        return self._coef(self.static)


def energy_consumed(power_model: PowerModel, slots: Iterable[ScheduledSlot], idle_intervals=()) -> float:
    """Joules: busy slots at their frequency plus idle time at static power.

    ``idle_intervals`` holds ``(start, end)`` pairs or plain durations.
    """
    total = 0
    for s in slots:
        total += power_model.power(s.frequency) * (s.finish - s.start)
    idle = 0
    for iv in idle_intervals:
        idle += (iv[1] - iv[0]) if isinstance(iv, tuple) else iv
    if not power_model._exact:
        idle = float(idle)
    total += power_model.idle_power() * idle
    return float(total)


@dataclass(frozen=True)
class Platform:
    processors: tuple
    hosts: tuple = ()
    power_model: PowerModel = field(default_factory=PowerModel)

    def __post_init__(self):
        object.__setattr__(self, "processors", tuple(self.processors))
        object.__setattr__(self, "hosts", tuple(self.hosts))
        ids = [p.id for p in self.processors]
        if len(set(ids)) != len(ids):
            raise PlatformError("duplicate processor ids")

    @classmethod
    def homogeneous(cls, n: int, frequency_levels=(1,), power_model=None) -> "Platform":
        procs = [Processor(f"p{i}", 1, frequency_levels) for i in range(n)]
        return cls(procs, power_model=power_model or PowerModel())

    def processor(self, pid) -> Processor:
        for p in self.processors:
            if p.id == pid:
                return p
        raise PlatformError(f"unknown processor {pid!r}")

    def timelines(self) -> dict:
        return {p.id: Timeline(p) for p in self.processors}


def platform_from_dict(d: dict) -> Platform:
    procs = [
        Processor(p["id"], Fraction(str(p.get("speedFactor", 1))), p.get("frequencyLevels", [1.0]))
        for p in d.get("processors", [])
    ]
    hosts = []
    for h in d.get("hosts", []):
        vms = []
        for v in h.get("vms", []):
            v = v if isinstance(v, dict) else {"id": v}
            vms.append(
                VmInstance(
                    v["id"],
                    h["id"],
                    speed_factor=Fraction(str(v.get("speedFactor", 1))),
                    frequency_levels=v.get("frequencyLevels", [1.0]),
                    frequency=Fraction(str(v.get("frequency", 1))),
                )
            )
        hosts.append(Host(h["id"], vms))
    pm = d.get("powerModel", {})
    power = PowerModel(pm.get("static", 0.0), pm.get("dynamic", 1.0), pm.get("exponent", 3))
    return Platform(procs, hosts, power)


def platform_to_dict(p: Platform) -> dict:
    def lv(levels):
        return None if levels is None else [float(x) for x in levels]

    return {
        "processors": [
            {"id": q.id, "speedFactor": float(q.speed_factor), "frequencyLevels": lv(q.frequency_levels)}
            for q in p.processors
        ],
        "hosts": [
            {
                "id": h.id,
                "vms": [
                    {"id": v.id, "speedFactor": float(v.speed_factor), "frequencyLevels": lv(v.frequency_levels)}
                    for v in h.vms
                ],
            }
            for h in p.hosts
        ],
        "powerModel": {"static": p.power_model.static, "dynamic": p.power_model.dynamic, "exponent": p.power_model.exponent},
    }


def load_platform(path) -> Platform:
    with open(path) as fh:
        return platform_from_dict(json.load(fh))
