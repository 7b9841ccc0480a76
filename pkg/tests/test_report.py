import json

import pytest

from randomized import random_case
from schedarena.engine import run
from schedarena.platform import Platform
from schedarena.report import TraceError, compare_trace, metrics_from_trace, read_trace
from schedarena.workload import DagApp, Workload, four_tasks


def four_tasks_run():
    return run(Workload(dags=[DagApp("four_tasks", four_tasks(), [])]), Platform.homogeneous(1), "edf")


@pytest.mark.parametrize("seed", range(25))
def test_reducer_matches_engine(seed):
    w, p, pol, fc, energy = random_case(seed)
    r = run(w, p, pol, fc, energy_config=energy, seed=seed)
    assert compare_trace(r.trace_jsonl()) == []


def test_reducer_values_for_four_tasks():
    m = metrics_from_trace(four_tasks_run().trace_jsonl())
    assert m["avgResponse"] == 5.25 and m["makespan"] == 10 and m["tgr"] == 1
    assert {row["task"]: row["f"] for row in m["perTask"]} == {"n1": 1, "n2": 3, "n3": 7, "n4": 10}


def test_deadline_hit_exactly_counts_as_met():
    # n4 finishes at 10 with deadline 10
    m = metrics_from_trace(four_tasks_run().trace_jsonl())
    assert m["avgTardiness"] == 0 and m["tgr"] == 1


def tamper(text, pred, edit):
    lines = text.splitlines()
    for i, ln in enumerate(lines):
        row = json.loads(ln)
        if pred(row):
            edit(row)
            lines[i] = json.dumps(row, sort_keys=True)
            break
    return "\n".join(lines) + "\n"


def test_tampered_event_detected():
    text = four_tasks_run().trace_jsonl()
    bad = tamper(text, lambda r: r.get("kind") == "SlotFinish" and r["task"] == "n4", lambda r: r.update(t=11.0))
    diffs = compare_trace(bad)
    assert any("traceHash" in d for d in diffs)
    assert any("makespan" in d for d in diffs)


def test_tampered_report_detected():
    text = four_tasks_run().trace_jsonl()
    bad = tamper(text, lambda r: r.get("kind") == "Report", lambda r: r.update(avgResponse=5.0))
    [diff] = compare_trace(bad)
    assert diff.startswith("avgResponse") and "5.25" in diff


def test_missing_header():
    with pytest.raises(TraceError):
        read_trace('{"kind": "Arrival"}\n')
    with pytest.raises(TraceError):
        read_trace("")
