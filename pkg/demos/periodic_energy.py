"""
DVFS savings on a periodic task set
===================================

Two periodic tasks with mandatory and optional parts.  Jobs finish their
mandatory part early by a factor; slack reclamation and the cycle-conserving
mode turn that slack into lower frequencies.
"""
from fractions import Fraction

from schedarena import Platform, PowerModel, Processor, Workload, run
from schedarena.workload import PeriodicTask

platform = Platform([Processor("p0", 1, (0.25, 0.5, 0.75, 1.0))], power_model=PowerModel(0.1, 1.0, 3))

print(f"{'actual/worst':>12s} {'full speed':>11s} {'reclaim':>9s} {'cc-rt':>9s}")
for factor in (Fraction(1), Fraction(3, 4), Fraction(1, 2), Fraction(1, 4)):
    w = Workload(periodic=[PeriodicTask("A", 4, 1, Fraction(1, 2), factor), PeriodicTask("B", 8, 2, 1, factor)])
    e = [run(w, platform, "mfed", energy_config=mode).report.energy_joules
         for mode in ("none", "slack-reclaim", "mfed-ccrt")]
    print(f"{float(factor):12.2f} " + " ".join(f"{float(x):10.3f}" for x in e))
