"""Acceptance criteria 1-9, one test each.

Every test prints a PASS/FAIL line; the lines are repeated in the pytest
summary.  Run directly with ``python tests/test_acceptance.py``.
"""
import itertools
import json
import os
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from oracles import (
    check_schedule,
    optimal_bot_makespan,
    ref_max_min,
    ref_min_min,
    ref_sufferage,
    trace_metrics,
)
from randomized import GANG_POLICIES, random_case, random_platform, with_task_deadlines
from schedarena import dagsched
from schedarena.botsched import max_min, min_min, sufferage
from schedarena.dagsched import dsc, dsh, edf, edf_ac, edf_ac_insert, ga, heft, hlf, ish, lstf, sa, schedule_clustering
from schedarena.engine import FaultConfig, run
from schedarena.platform import Platform, PowerModel, Processor, Timeline, find_gaps
from schedarena.report import compare_trace
from schedarena.timebase import RESOLUTION, as_time
from schedarena.workload import BotApp, DagApp, Edge, Gang, PeriodicTask, Task, Workload, gen_dags, gen_gangs, four_tasks

VERDICTS = []
FIX = Path(__file__).parent / "fixtures"


@contextmanager
def criterion(n, title):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"criterion {n} FAIL  {title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        VERDICTS.append(line)
        print(line)
        raise
    line = f"criterion {n} PASS  {title} ({time.perf_counter() - t0:.2f} s)"
    VERDICTS.append(line)
    print(line)


def spans(sched):
    return {t: (s.start, s.finish) for t, s in sched.slots.items()}


# ---------------------------------------------------------------------------


def test_1_four_tasks_gap_insertion():
    with criterion(1, "four-task EDF baseline, gaps and FF/BF/WF insertion"):
        t0 = time.perf_counter()
        dag = DagApp("four_tasks", four_tasks(), [])
        one = Platform.homogeneous(1)
        base = edf(dag, one)
        assert spans(base) == {"n1": (0, 1), "n2": (2, 3), "n3": (5, 7), "n4": (7, 10)}
        bounded = [(g.start, g.end) for g in find_gaps(base.all_slots()) if g.bounded]
        assert bounded == [(1, 2), (3, 5)]
        expect = {"FF_AC": ((1, 2), 1), "BF_AC": ((3, 5), 2), "WF_AC": ((3, 4), 1)}
        for variant, (span, amount) in expect.items():
            s = edf_ac(dag, one, variant)
            n4 = s.slots["n4"]
            assert ((n4.start, n4.finish), n4.executed) == (span, amount), variant
            # the same through the simulator and its report
            r = run(Workload(dags=[dag]), one, "edf-ac:" + variant[:2].lower())
            rec = {x.task_id: x for x in r.report.records}["n4"]
            assert (rec.start, rec.finish, rec.executed) == (span[0], span[1], amount)
        assert time.perf_counter() - t0 < 1


def test_2_metrics_oracle():
    with criterion(2, "trace reducer equals MetricsReport on 100 random workloads"):
        for seed in range(100):
            w, p, pol, fc, energy = random_case(seed)
            r = run(w, p, pol, fc, energy_config=energy, seed=seed)
            text = r.trace_jsonl()
            assert compare_trace(text) == [], (seed, pol)
            mine = trace_metrics(text.splitlines())
            rep = r.report.to_dict()
            for key, value in mine.items():
                assert float(value) == rep[key], (seed, pol, key)
        # finishing exactly at the deadline counts as met
        for d, tgr in ((as_time(3), 1), (as_time(3) - RESOLUTION, 0)):
            r = run(Workload(dags=[DagApp("b", [Task("x", 3, deadline=d)], [])]), Platform.homogeneous(1), "edf")
            assert r.report.tgr == tgr
            assert trace_metrics(r.trace_jsonl().splitlines())["tgr"] == tgr


def three_gangs():
    def g(gid, n, cost, arrival, placement):
        return Gang(gid, [Task(f"{gid}.{i}", cost, arrival=arrival) for i in range(n)], arrival=arrival,
                    placement=placement)

    return [g("g1", 2, 4, 0, ["p0", "p1"]), g("g2", 3, 3, Fraction(1, 10), ["p0", "p1", "p2"]),
            g("g3", 2, 2, Fraction(2, 10), ["p1", "p2"])]


def check_gang_trace(run_result, gangs):
    """Every dispatch starts all unfinished members at once; windows are exclusive."""
    members = {g.id: {t.id for t in g.tasks} for g in gangs}
    done, groups = set(), {}
    for e in (ev.to_dict() for ev in run_result.trace):
        if e["kind"] == "SlotFinish" and e.get("complete"):
            done.add(e["task"])
        elif e["kind"] == "SlotStart":
            key = (e["app"], e["t"])
            if key not in groups:
                groups[key] = (members[e["app"]] - done, [])
            groups[key][1].append(e)
    for (gid, t), (expected, started) in groups.items():
        assert {e["task"] for e in started} == expected, f"gang {gid} at {t}"
        assert len({e["proc"] for e in started}) == len(started)
    slots = run_result.outcome.slots
    gang_of = {tid: gid for gid, ids in members.items() for tid in ids}
    dispatches = {}
    for s in slots:
        dispatches.setdefault((gang_of[s.task_id], s.start), []).append(s)
    for (gid, t), ss in dispatches.items():
        window_end = t + max(s.finish - s.start for s in ss)
        procs = {s.processor for s in ss}
        for s in slots:
            if s.processor in procs and gang_of[s.task_id] != gid:
                assert not t <= s.start < window_end, f"{s.task_id} enters the window of {gid}"


def test_3_gang_simultaneity():
    with criterion(3, "gang simultaneity and window on 1000 workloads, three-gang idling"):
        for seed in range(1000):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(2, 6))
            pol = GANG_POLICIES[seed % len(GANG_POLICIES)]
            restricted = pol.startswith("edf")
            gangs = gen_gangs(int(rng.integers(1, 8)), ("randint", 1, n), ("uniform", 1, 6), ("poisson", 0.8), seed,
                              mandatory_fraction=0.5 if restricted else 1, deadline_factor=2.5 if restricted else None)
            fc = FaultConfig(0.2, Fraction(2), Fraction(1, 10)) if seed % 3 == 0 else None
            r = run(Workload(gangs=gangs), random_platform(rng, n), pol, fc, seed=seed)
            check_gang_trace(r, gangs)
        r = run(Workload(gangs=three_gangs()), Platform.homogeneous(3), "afcfs+nobackfill")
        starts = {s.task_id.split(".")[0]: s.start for s in r.outcome.slots}
        assert starts == {"g1": 0, "g2": 4, "g3": 7}
        assert not [s for s in r.outcome.slots if s.processor == "p2" and s.start < 4]


def test_4_bag_of_tasks_equivalence():
    with criterion(4, "Min-Min/Max-Min/Sufferage equal references and bound the optimum on 500 ETCs"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(2024)
        for _ in range(500):
            n, m = int(rng.integers(1, 6)), int(rng.integers(2, 4))
            etc = [[int(x) for x in rng.integers(1, 20, size=m)] for _ in range(n)]
            bot = BotApp("b", [Task(f"t{i}", min(row)) for i, row in enumerate(etc)], etc)
            best = optimal_bot_makespan(etc)
            for heur, ref in ((min_min, ref_min_min), (max_min, ref_max_min), (sufferage, ref_sufferage)):
                got = heur(bot)
                where, span = ref(etc)
                assert [got.assignment[f"t{i}"] for i in range(n)] == where
                assert got.makespan == span >= best
        bot = BotApp("b", [Task("t1", 3), Task("t2", 2)], [[3, 5], [2, 4]])
        assert (min_min(bot).makespan, max_min(bot).makespan) == (5, 4)
        assert time.perf_counter() - t0 <= 10


class SlotSpy:
    """While active, checks every timeline insertion keeps earlier slots in place."""

    def __init__(self, monkeypatch):
        self.violations = []
        self.active = False
        orig = Timeline.add

        def add(tl, slot):
            before = list(tl.slots)
            if self.active and getattr(tl, "_spy_last", before) != before:
                self.violations.append(("changed between insertions", tl.processor.id))
            orig(tl, slot)
            key = lambda s: (s.start, s.task_id)
            if self.active and sorted(tl.slots, key=key) != sorted(before + [slot], key=key):
                self.violations.append(("shifted", slot.task_id))
            tl._spy_last = list(tl.slots)

        monkeypatch.setattr(Timeline, "add", add)

    @contextmanager
    def watching(self):
        self.active = True
        try:
            yield
        finally:
            self.active = False


def test_5_dag_validity(monkeypatch):
    with criterion(5, "1000 DAGs: valid schedules, no shifting on insertion, DSH steps improve"):
        spy = SlotSpy(monkeypatch)
        platforms = [Platform.homogeneous(1), Platform.homogeneous(2), Platform.homogeneous(3),
                     Platform([Processor("p0", 1), Processor("p1", 2), Processor("p2", Fraction(1, 2))])]
        for seed in range(1000):
            rng = np.random.default_rng(seed)
            d = gen_dags(1, int(rng.integers(1, 5)), 3, ("randint", 1, 6), float(rng.choice([0, 0.5, 1, 2])), 0.5,
                         seed, mandatory_fraction=0.5)[0]
            if len(d.nodes) > 10:
                continue
            p = platforms[seed % len(platforms)]
            dd = with_task_deadlines(d)
            scheds = [hlf(d, p), heft(d, p), schedule_clustering(d, p, dsc(d, p)), sa(d, p, 5, 0.8, 4, 3, seed),
                      ga(d, p, 6, 3, seed=seed), lstf(d, p)]
            with spy.watching():
                scheds.append(ish(d, p))
                scheds.append(edf_ac(dd, p, ("FF_AC", "BF_AC", "WF_AC")[seed % 3]))
            h = dsh(d, p)
            scheds.append(h)
            for s in scheds:
                check_schedule(d, p, s.all_slots())
            for step in h.meta["duplication_steps"]:
                assert step["after"] < step["before"]
            # a direct insertion leaves the existing timelines untouched
            tls = {k: v.copy() for k, v in dagsched._Builder(d, p).timelines.items()}
            for s in hlf(d, p).all_slots():
                tls[s.processor].add(s)
            snapshot = {k: list(v.slots) for k, v in tls.items()}
            t = Task("new", 2, 1, deadline=int(rng.integers(2, 30)))
            pl = edf_ac_insert(t, tls, ("FF_AC", "BF_AC", "WF_AC")[seed % 3])
            assert {k: list(v.slots) for k, v in tls.items()} == snapshot
            assert all(pl.finish <= s.start or pl.start >= s.finish for s in snapshot[pl.processor])
        assert spy.violations == []


def test_6_dsc_monotone():
    with criterion(6, "DSC dominant sequence nonincreasing on 200 DAGs, chain 12 -> 2"):
        for seed in range(200):
            rng = np.random.default_rng(seed)
            d = gen_dags(1, int(rng.integers(1, 6)), 3, ("uniform", 1, 8), float(rng.choice([0.5, 1, 3])), None,
                         seed)[0]
            h = dsc(d).ds_history
            assert all(b <= a for a, b in zip(h, h[1:])), seed
        chain = DagApp("c", [Task("a", 1), Task("b", 1)], [Edge("a", "b", 10)])
        assert dsc(chain).ds_history == [12, 2]


def cumulative_checkpoint(events, upto):
    """Per-task work kept at time ``upto``: everything executed minus everything lost."""
    kept = {}
    for e in events:
        if e["t"] > upto:
            break
        if e["kind"] == "SlotFinish" and not e.get("copy"):
            kept[e["task"]] = kept.get(e["task"], 0) + as_time(e["executed"])
        elif e["kind"] == "Failure":
            for tid, lost in e["lost"].items():
                kept[tid] = kept.get(tid, 0) - as_time(lost)
    return kept


def test_7_checkpointing():
    with criterion(7, "checkpoint loss bound, zero rate equals no faults, restricted termination"):
        failures = terminations = 0
        for seed in range(300):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(1, 5))
            pol = ["edf-gang-ac:restricted", "afcfs", "lgfs", "edf-gang-ac:holistic"][seed % 4]
            gangs = gen_gangs(int(rng.integers(1, 6)), ("randint", 1, n), ("uniform", 2, 10), ("poisson", 0.5), seed,
                              mandatory_fraction=0.4, deadline_factor=4 if pol.startswith("edf") else None)
            k = Fraction(int(rng.integers(1, 5)), 2)
            overhead = Fraction(int(rng.integers(0, 2)), 10)
            p = random_platform(rng, n)
            w = Workload(gangs=gangs)
            r = run(w, p, pol, FaultConfig(float(rng.choice([0.05, 0.2, 0.5])), k, overhead), seed=seed)
            events = [e.to_dict() for e in r.trace]
            mins = {t.id: t.min_cost for g in gangs for t in g.tasks}
            members = {g.id: [t.id for t in g.tasks] for g in gangs}
            for e in events:
                if e["kind"] != "Failure":
                    continue
                failures += 1
                assert as_time(e["t"]) - as_time(e["checkpoint"]) <= k + RESOLUTION
                for lost in e["lost"].values():
                    assert as_time(lost) <= k + RESOLUTION
                if pol == "edf-gang-ac:restricted":
                    kept = cumulative_checkpoint(events, e["t"])
                    enough = all(kept.get(tid, 0) >= mins[tid] for tid in members[e["app"]])
                    if e["outcome"] == "terminate":
                        terminations += 1
                        assert enough, (seed, e)
            same = run(w, p, pol, FaultConfig(0, k, overhead), seed=seed)
            plain = run(w, p, pol, None, seed=seed)
            assert same.trace_hash == plain.trace_hash
            assert same.report.to_dict() == plain.report.to_dict()
        assert failures > 0 and terminations > 0


def test_8_energy_sweep():
    with criterion(8, "DVFS energy <= full speed, zero mandatory misses, all 2-task sets with periods <= 8"):
        pf = Platform([Processor("p0", 1, (0.25, 0.5, 0.75, 1.0))], power_model=PowerModel(0.1, 1.0, 3))
        shapes = [(p, m, o) for p in range(1, 9) for m in range(1, p + 1) for o in range(0, p - m + 1)]
        checked = 0
        for a, b in itertools.combinations_with_replacement(shapes, 2):
            if Fraction(a[1], a[0]) + Fraction(b[1], b[0]) > 1:
                continue
            w = Workload(periodic=[PeriodicTask("A", *a, Fraction(1, 2)), PeriodicTask("B", *b, Fraction(1, 2))])
            base = run(w, pf, "mfed")
            for mode in ("slack-reclaim", "mfed-ccrt"):
                r = run(w, pf, "mfed", energy_config=mode)
                assert not r.outcome.extra["mandatoryMisses"], (mode, a, b)
                assert r.report.energy_joules <= base.report.energy_joules, (mode, a, b)
            checked += 1
        assert checked > 1000


def cli_hash(out, hashseed):
    env = dict(os.environ, PYTHONHASHSEED=str(hashseed))
    cmd = [sys.executable, "-m", "schedarena", "run", "--platform", str(FIX / "quad.json"),
           "--gen", "gangs:count=8,size=randint:1:4", "--policy", "afcfs+migrate:2", "--seeds", "3",
           "--fault-lambda", "0.2", "--checkpoint-interval", "1", "--out", str(out), "--trace"]
    subprocess.run(cmd, check=True, env=env, capture_output=True)
    return json.loads((out / "seed-3" / "metrics.json").read_text())["traceHash"]


def test_9_determinism(tmp_path):
    with criterion(9, "same config and seed give the same trace hash"):
        for seed in range(50):
            w, p, pol, fc, energy = random_case(seed)
            a = run(w, p, pol, fc, energy_config=energy, seed=seed)
            b = run(w, p, pol, fc, energy_config=energy, seed=seed)
            assert a.trace_hash == b.trace_hash and a.trace_jsonl() == b.trace_jsonl()
        assert cli_hash(tmp_path / "a", 1) == cli_hash(tmp_path / "b", 2)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
