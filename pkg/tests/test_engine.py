from fractions import Fraction

import pytest

from schedarena.engine import (
    ARRIVAL,
    CHECKPOINT_TICK,
    FAILURE,
    SLOT_FINISH,
    SLOT_START,
    CheckpointState,
    EmptySet,
    EventQueue,
    FaultConfig,
    MemberProgress,
    NoDeadline,
    PolicyWorkloadMismatch,
    SimulationError,
    TaskRecord,
    avg_response,
    avg_tardiness,
    checkpoint_and_rollback,
    effective_time,
    inject_failures,
    makespan,
    run,
    task_guarantee_ratio,
    wall_time_for,
)
from schedarena.platform import Platform
from schedarena.workload import DagApp, Workload, four_tasks


def rec(a=0, s=0, f=1, d=None, tid="t"):
    return TaskRecord(tid, "app", Fraction(a), Fraction(s), Fraction(f), None if d is None else Fraction(d),
                      Fraction(1), Fraction(1), Fraction(1))


def example():
    return Workload(dags=[DagApp("four_tasks", four_tasks(), [])])


# -- event queue


def test_equal_time_order():
    q = EventQueue()
    for kind in (SLOT_START, ARRIVAL, CHECKPOINT_TICK, SLOT_FINISH, FAILURE):
        q.push(5, kind)
    assert [q.pop().kind for _ in range(5)] == [FAILURE, SLOT_FINISH, CHECKPOINT_TICK, ARRIVAL, SLOT_START]


def test_no_events_in_the_past():
    q = EventQueue()
    q.push(3, ARRIVAL)
    q.pop()
    with pytest.raises(SimulationError):
        q.push(2, ARRIVAL)


# -- metrics


def test_avg_response():
    assert avg_response([rec(0, 0, 5)]) == 5
    assert avg_response([rec(0, 0, 2), rec(1, 1, 5)]) == 3
    with pytest.raises(EmptySet):
        avg_response([])


def test_makespan():
    assert makespan([rec(0, 0, 4)]) == 4
    assert makespan([rec(0, 2, 7)]) == 5


def test_tgr_and_tardiness():
    assert task_guarantee_ratio([rec(f=3, d=2)]) == 0
    assert task_guarantee_ratio([rec(f=3, d=2), rec(f=1, d=2)]) == Fraction(1, 2)
    assert task_guarantee_ratio([rec(f=10, d=10)]) == 1
    assert avg_tardiness([rec(f=12, d=10)]) == 2
    assert avg_tardiness([rec(f=10, d=10)]) == 0
    assert avg_tardiness([rec(f=12, d=10), rec(f=3, d=10)]) == 1
    with pytest.raises(NoDeadline):
        task_guarantee_ratio([rec()])


def test_four_tasks_baseline_run():
    r = run(example(), Platform.homogeneous(1), "edf")
    finishes = {x.task_id: x.finish for x in r.report.records}
    assert finishes == {"n1": 1, "n2": 3, "n3": 7, "n4": 10}
    assert r.report.avg_response == Fraction(21, 4)
    assert r.report.makespan == 10
    assert r.report.tgr == 1


def test_empty_workload():
    r = run(Workload(), Platform.homogeneous(2), "hlf")
    assert r.report.tasks == 0 and r.report.makespan == 0


def test_mismatch():
    with pytest.raises(PolicyWorkloadMismatch):
        run(example(), Platform.homogeneous(1), "afcfs")


def test_same_seed_same_hash():
    a = run(example(), Platform.homogeneous(1), "sa:5,0.9,5,5", seed=4)
    b = run(example(), Platform.homogeneous(1), "sa:5,0.9,5,5", seed=4)
    assert a.trace_hash == b.trace_hash


# -- failures


def test_inject_failures():
    assert inject_failures(0, 1000, 1) == []
    ev = inject_failures(0.1, 1000, 1)
    assert 60 <= len(ev) <= 140
    assert [e.time for e in ev] == [e.time for e in inject_failures(0.1, 1000, 1)]
    assert all(a.time < b.time for a, b in zip(ev, ev[1:]))


def test_fault_config_checks():
    with pytest.raises(ValueError):
        FaultConfig(-1)
    with pytest.raises(ValueError):
        FaultConfig(0.1, 1, 1)


# -- checkpointing


def state(k, overhead=0, target=10):
    return CheckpointState(Fraction(0), [MemberProgress("t", Fraction(0), Fraction(target), Fraction(1))],
                           None if k is None else Fraction(k), Fraction(overhead))


def test_rollback_to_last_grid_point():
    rb = checkpoint_and_rollback(state(2), 5)
    assert rb.checkpoint_time == 4 and rb.lost_work == 1 and rb.restored["t"] == 4


def test_failure_before_first_checkpoint_loses_everything():
    rb = checkpoint_and_rollback(state(2), Fraction(3, 2))
    assert rb.checkpoint_time == 0 and rb.lost_work == Fraction(3, 2)


def test_failure_on_checkpoint_instant_loses_nothing():
    rb = checkpoint_and_rollback(state(2), 4)
    assert rb.lost_work == 0 and rb.restored["t"] == 4


def test_global_checkpoint_is_min_of_locals():
    st = CheckpointState(Fraction(0), [MemberProgress("a", Fraction(0), Fraction(3), Fraction(1)),
                                       MemberProgress("b", Fraction(0), Fraction(9), Fraction(1))],
                         Fraction(2))
    rb = checkpoint_and_rollback(st, 7)
    # "a" finished at 3 and keeps its result; "b" rolls back to 6
    assert rb.restored == {"a": 3, "b": 6}
    assert rb.lost == {"a": 0, "b": 1}
    assert all(ts >= st.global_time for ts, _ in st.local.values())


def test_overhead_time_accounting():
    assert effective_time(5, 2, Fraction(1, 2)) == 4
    for w in [Fraction(x, 4) for x in range(1, 40)]:
        assert effective_time(wall_time_for(w, 2, Fraction(1, 2)), 2, Fraction(1, 2)) == w
