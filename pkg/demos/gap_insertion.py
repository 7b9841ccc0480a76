"""
Filling schedule gaps with partial results
==========================================

Four tasks on one processor.  Plain EDF leaves two idle gaps; the
approximate-computation variants squeeze the last task into one of them,
running only part of it.
"""
from schedarena.dagsched import edf, edf_ac
from schedarena.platform import Platform, find_gaps
from schedarena.workload import DagApp, four_tasks

dag = DagApp("four_tasks", four_tasks(), [])
one = Platform.homogeneous(1)


def show(title, sched):
    print(title)
    for task, proc, start, finish in sched.gantt_rows():
        bar = " " * int(start * 2) + "#" * int((finish - start) * 2)
        print(f"  {task:3s} {start:4.1f}-{finish:4.1f} |{bar}")


base = edf(dag, one)
show("EDF", base)
print("gaps:", [(float(g.start), float(g.end)) for g in find_gaps(base.all_slots()) if g.bounded])

for variant in ("FF_AC", "BF_AC", "WF_AC"):
    s = edf_ac(dag, one, variant)
    n4 = s.slots["n4"]
    show(f"\n{variant}: n4 runs {float(n4.executed)} of 3 units", s)

###############################################################################
# First fit takes the earliest gap, best fit the one admitting the most work,
# worst fit puts the bare minimum into the largest gap so the rest stays free.
