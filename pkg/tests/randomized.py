"""Random workload/platform/policy triples shared by the property tests."""
from dataclasses import replace
from fractions import Fraction

import numpy as np

from schedarena.engine import FaultConfig
from schedarena.platform import Host, Platform, PowerModel, Processor, VmInstance
from schedarena.workload import DagApp, PeriodicTask, task_levels, Workload, gen_bots, gen_dags, gen_gangs

GANG_POLICIES = ["afcfs", "afcfs+bypass:2", "afcfs+migrate:2", "afcfs+nobackfill", "lgfs",
                 "edf-gang-ac:restricted", "edf-gang-ac:holistic"]
DAG_POLICIES = ["hlf", "ish", "heft", "dsc", "dsh", "lstf", "edf", "edf-ac:ff", "edf-ac:bf", "edf-ac:wf",
                "sa:5,0.8,5,5", "ga:6,4,0.9,0.1"]
BOT_POLICIES = ["minmin", "maxmin", "sufferage"]


def random_platform(rng, n, levels=(0.5, 0.75, 1.0), hetero=False, power=None):
    speeds = [1] * n if not hetero else [float(rng.choice([0.5, 1, 2])) for _ in range(n)]
    procs = [Processor(f"p{i}", s, levels) for i, s in enumerate(speeds)]
    return Platform(procs, power_model=power or PowerModel(0.1, 1.0, 3))


def with_task_deadlines(dag):
    """Copy of ``dag`` whose tasks inherit the DAG deadline minus their downstream work."""
    levels = task_levels(dag)
    nodes = [replace(t, deadline=dag.deadline - levels[t.id] + t.cost) for t in dag.nodes]
    return DagApp(dag.id, nodes, dag.edges, deadline=dag.deadline)


def random_case(seed):
    """(workload, platform, policy, fault config, energy config) for ``seed``."""
    rng = np.random.default_rng(seed)
    kind = ["gangs", "dags", "bots", "caees", "periodic"][seed % 5]
    if kind == "gangs":
        n = int(rng.integers(2, 5))
        pol = GANG_POLICIES[int(rng.integers(len(GANG_POLICIES)))]
        restricted = pol.startswith("edf")
        gangs = gen_gangs(int(rng.integers(1, 6)), ("randint", 1, n), ("uniform", 1, 6), ("poisson", 0.7),
                          seed, max_size=n, mandatory_fraction=0.5 if restricted else 1,
                          deadline_factor=2.5 if restricted else None)
        fc = FaultConfig(float(rng.choice([0, 0.1, 0.3])), Fraction(int(rng.integers(1, 4))),
                         Fraction(int(rng.integers(0, 2)), 10))
        return Workload(gangs=gangs), random_platform(rng, n), pol, fc, "none"
    if kind == "dags":
        n = int(rng.integers(1, 4))
        pol = DAG_POLICIES[int(rng.integers(len(DAG_POLICIES)))]
        needs_deadline = pol in ("lstf", "edf") or pol.startswith("edf-ac")
        dags = gen_dags(int(rng.integers(1, 3)), int(rng.integers(1, 4)), 3, ("uniform", 1, 5),
                        float(rng.choice([0, 0.5, 1])), 1.0 if needs_deadline else None, seed,
                        mandatory_fraction=0.5 if pol.startswith("edf-ac") else 1)
        if needs_deadline:
            dags = [with_task_deadlines(d) for d in dags]
        return Workload(dags=dags), random_platform(rng, n, hetero=True), pol, None, "none"
    if kind == "bots":
        n = int(rng.integers(2, 4))
        pol = BOT_POLICIES[int(rng.integers(3))]
        energy = str(rng.choice(["none", "slack-reclaim"]))
        bots = gen_bots(int(rng.integers(1, 3)), int(rng.integers(1, 6)), 0.5, seed, processors=n,
                        deadline_factor=3, actual_cost_factor=0.6)
        return Workload(bots=bots), random_platform(rng, n), pol, None, energy
    if kind == "caees":
        bots = gen_bots(1, int(rng.integers(1, 6)), 0.0, seed, processors=1, deadline_factor=4)
        hosts = [Host(f"h{h}", [VmInstance(f"h{h}v{v}", f"h{h}", frequency_levels=(0.5, 0.75, 1.0))
                                for v in range(2)]) for h in range(2)]
        return (Workload(bots=bots), Platform([], hosts, PowerModel(0.2, 1.0, 3)), "caees", None, "none")
    tasks = []
    for i in range(int(rng.integers(1, 4))):
        p = int(rng.integers(2, 7))
        m = int(rng.integers(1, p)) / 3
        tasks.append(PeriodicTask(f"T{i}", p, Fraction(m).limit_denominator(3), Fraction(int(rng.integers(0, 3)), 2),
                                  Fraction(1, 2)))
    total = sum(t.mandatory_cost / t.period for t in tasks)
    if total > 1:
        tasks = tasks[:1]
    energy = str(rng.choice(["none", "slack-reclaim", "mfed-ccrt"]))
    return Workload(periodic=tasks), random_platform(rng, 1, levels=(0.25, 0.5, 0.75, 1.0)), "mfed", None, energy
