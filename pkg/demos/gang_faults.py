"""
Gangs under failures and checkpoints
====================================

The same gang workload under increasing failure rates, with and without
checkpoints.  Lost work and response time grow with the rate; checkpoints
keep the loss per failure bounded.
"""
from fractions import Fraction

from schedarena import FaultConfig, Platform, Workload, run
from schedarena.workload import gen_gangs

gangs = gen_gangs(20, ("randint", 1, 4), ("uniform", 2, 12), ("poisson", 0.4), seed=7)
platform = Platform.homogeneous(4)
workload = Workload(gangs=gangs)

print(f"{'rate':>6s} {'interval':>9s} {'failures':>9s} {'lost':>8s} {'avg resp':>9s}")
for rate in (0.0, 0.02, 0.05, 0.1):
    for k in (None, Fraction(2)):
        r = run(workload, platform, "afcfs+bypass:3", FaultConfig(rate, k), seed=1)
        rep = r.report
        print(f"{rate:6.2f} {str(k or '-'):>9s} {rep.failures_injected:9d} {float(rep.lost_work):8.2f} "
              f"{float(rep.avg_response):9.2f}")
