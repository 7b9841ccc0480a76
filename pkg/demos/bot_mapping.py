"""
Min-Min, Max-Min and Sufferage on random ETC matrices
=====================================================

Mean makespan of the three batch heuristics as the ETC gets more
heterogeneous.
"""
import numpy as np

from schedarena.botsched import max_min, min_min, sufferage
from schedarena.workload import gen_bots

heuristics = {"min-min": min_min, "max-min": max_min, "sufferage": sufferage}

print(f"{'h':>5s}" + "".join(f"{name:>12s}" for name in heuristics))
for h in (0.0, 0.3, 0.6, 0.9):
    spans = {name: [] for name in heuristics}
    for seed in range(40):
        [bag] = gen_bots(1, 12, h, seed, processors=[1, 1, 2, 0.5])
        for name, fn in heuristics.items():
            spans[name].append(float(fn(bag).makespan))
    print(f"{h:5.1f}" + "".join(f"{np.mean(v):12.2f}" for v in spans.values()))

# a small case where scheduling the long task first pays off
from schedarena.workload import BotApp, Task

bag = BotApp("b", [Task("t1", 3), Task("t2", 2)], [[3, 5], [2, 4]])
print("\n2x2 example: min-min", min_min(bag).makespan, " max-min", max_min(bag).makespan)
