import json
import os
import statistics
from pathlib import Path

import pytest

from schedarena.cli import main, parse_gen_spec, parse_seeds, ConfigError

FIX = Path(__file__).parent / "fixtures"


def cli(*args):
    return main([str(a) for a in args])


def run_four_tasks(out, *extra):
    return cli("run", "--platform", FIX / "uniproc.json", "--workload", FIX / "four_tasks.json", "--policy", "edf-ac:ff",
               "--out", out, *extra)


def test_run_writes_layout(tmp_path, capsys):
    assert run_four_tasks(tmp_path, "--trace") == 0
    d = tmp_path / "seed-0"
    assert sorted(os.listdir(d)) == ["config.echo.json", "metrics.csv", "metrics.json", "trace.jsonl"]
    m = json.loads((d / "metrics.json").read_text())
    n4 = [r for r in m["perTask"] if r["task"] == "n4"][0]
    assert n4["executed"] == 1 and n4["f"] == 2
    assert (tmp_path / "aggregate.json").exists() and (tmp_path / "aggregate.csv").exists()
    assert json.loads(capsys.readouterr().out)["aggregate"]["makespan"]["mean"] == 7


def test_csv_format(tmp_path, capsys):
    assert run_four_tasks(tmp_path, "--format", "csv") == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0].startswith("run,tasks,avgResponse") and rows[1].startswith("seed-0,4,")


def test_report_round_trip(tmp_path, capsys):
    run_four_tasks(tmp_path, "--trace")
    metrics = json.loads((tmp_path / "seed-0" / "metrics.json").read_text())
    capsys.readouterr()
    assert cli("report", tmp_path / "seed-0" / "trace.jsonl") == 0
    out = json.loads(capsys.readouterr().out)
    [row] = out["runs"].values()
    assert row["avgResponse"] == metrics["avgResponse"] and row["tgr"] == metrics["tgr"]


def test_report_two_seed_mean(tmp_path, capsys):
    assert cli("run", "--platform", FIX / "quad.json", "--gen", "dags:count=2,layers=3", "--policy", "heft",
               "--seeds", "1,2", "--out", tmp_path, "--trace") == 0
    capsys.readouterr()
    paths = [tmp_path / f"seed-{s}" / "trace.jsonl" for s in (1, 2)]
    assert cli("report", *paths) == 0
    out = json.loads(capsys.readouterr().out)
    spans = [r["makespan"] for r in out["runs"].values()]
    assert out["aggregate"]["makespan"]["mean"] == statistics.fmean(spans)


def test_tampered_trace_exit_4(tmp_path, capsys):
    run_four_tasks(tmp_path, "--trace")
    path = tmp_path / "seed-0" / "trace.jsonl"
    lines = path.read_text().splitlines()
    i = max(k for k, ln in enumerate(lines) if '"SlotFinish"' in ln)
    row = json.loads(lines[i])
    row["t"] += 1
    lines[i] = json.dumps(row, sort_keys=True)
    path.write_text("\n".join(lines) + "\n")
    assert cli("report", path) == 4
    assert "traceHash" in capsys.readouterr().err


def test_bad_policy_exit_2(tmp_path, capsys):
    assert cli("run", "--platform", FIX / "uniproc.json", "--workload", FIX / "four_tasks.json", "--policy", "bogus",
               "--out", tmp_path) == 2
    assert "hlf" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path):
    assert cli("run", "--platform", tmp_path / "nope.json", "--workload", FIX / "four_tasks.json", "--policy", "edf",
               "--out", tmp_path) == 2


def test_policy_workload_mismatch_exit_3(tmp_path):
    assert cli("run", "--platform", FIX / "uniproc.json", "--workload", FIX / "four_tasks.json", "--policy", "minmin",
               "--out", tmp_path) == 3


def test_empty_workload(tmp_path, capsys):
    assert cli("run", "--platform", FIX / "uniproc.json", "--workload", FIX / "empty.json", "--policy", "hlf",
               "--out", tmp_path) == 0
    assert json.loads(capsys.readouterr().out)["aggregate"]["tasks"]["mean"] == 0


def test_run_is_deterministic_apart_from_timestamp(tmp_path):
    for sub in ("a", "b"):
        assert cli("run", "--platform", FIX / "quad.json", "--gen", "gangs:count=6,size=randint:1:4",
                   "--policy", "afcfs", "--seeds", "0-1", "--fault-lambda", "0.2", "--checkpoint-interval", "1",
                   "--out", tmp_path / sub, "--trace") == 0
    for seed in (0, 1):
        for name in ("metrics.json", "metrics.csv", "trace.jsonl"):
            a = (tmp_path / "a" / f"seed-{seed}" / name).read_text()
            assert a == (tmp_path / "b" / f"seed-{seed}" / name).read_text()
        ea, eb = (json.loads((tmp_path / s / f"seed-{seed}" / "config.echo.json").read_text()) for s in "ab")
        ea.pop("metadata"), eb.pop("metadata")
        assert ea == eb


def test_gen_is_reproducible(tmp_path):
    for name in ("a.json", "b.json"):
        assert cli("gen", "dags:layers=3,fanout=2", "--seed", "7", "--out", tmp_path / name) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_gen_single_layer_dag(capsys):
    assert cli("gen", "dags:layers=1,fanout=3") == 0
    [dag] = json.loads(capsys.readouterr().out)["dags"]
    assert len(dag["nodes"]) == 1


def test_gen_bot_etc_shape(capsys):
    assert cli("gen", "bots:tasks=3,procs=2") == 0
    [bot] = json.loads(capsys.readouterr().out)["bots"]
    assert len(bot["etc"]) == 3 and all(len(row) == 2 for row in bot["etc"])


def test_gen_bad_spec_exit_2():
    assert cli("gen", "bots:wheels=4") == 2
    assert cli("gen", "trees:count=1") == 2


def test_seed_parsing(monkeypatch):
    assert parse_seeds("0-3") == [0, 1, 2, 3]
    assert parse_seeds("5,2") == [5, 2]
    monkeypatch.setenv("SCHEDARENA_SEED", "9")
    assert parse_seeds(None) == [9]
    with pytest.raises(ConfigError):
        parse_seeds("x")


def test_gen_spec_parsing():
    kind, p = parse_gen_spec("gangs:count=3")
    assert kind == "gangs" and p["count"] == "3" and p["size"] == "randint:1:4"
