"""
Task graph heuristics against communication cost
================================================

Random layered DAGs on four processors.  For each communication to
computation ratio we average the makespan of every heuristic.
"""
import numpy as np

from schedarena.dagsched import dsc, dsh, ga, heft, hlf, ish, sa, schedule_clustering
from schedarena.platform import Platform
from schedarena.workload import gen_dags

platform = Platform.homogeneous(4)
heuristics = {
    "HLF": hlf,
    "ISH": ish,
    "HEFT": heft,
    "DSC": lambda d, p: schedule_clustering(d, p, dsc(d, p)),
    "DSH": dsh,
    "SA": lambda d, p: sa(d, p, 5, 0.85, 10, 10, seed=0),
    "GA": lambda d, p: ga(d, p, 12, 15, seed=0),
}

print(f"{'ccr':>5s}" + "".join(f"{name:>8s}" for name in heuristics))
for ccr in (0.1, 1.0, 3.0):
    table = {name: [] for name in heuristics}
    for seed in range(15):
        [dag] = gen_dags(1, 5, 3, ("uniform", 1, 10), ccr, None, seed)
        for name, fn in heuristics.items():
            table[name].append(float(fn(dag, platform).makespan))
    print(f"{ccr:5.1f}" + "".join(f"{np.mean(v):8.2f}" for v in table.values()))

###############################################################################
# With cheap messages the list schedulers are hard to beat; as messages get
# expensive, clustering and duplication pull ahead.
