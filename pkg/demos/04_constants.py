"""How large the renormalization constants get.

Each constant is carried as a natural logarithm; printing ``log10`` makes it
clear why the argument cannot be simulated at face value.
"""
import math

from rcmlab.connection import ConnectionFunction
from rcmlab.estimators import constants, log_bridge_bound

LOG10 = math.log(10)
phi = ConnectionFunction.indicator(1.0)

for d, lam_, mu in [(2, 1.5, 2.0), (2, 1.5, 3.0), (3, 0.9, 1.5)]:
    c = constants(lam_, mu, d, m=9, n=18, phi=phi, eps2=0.5)
    print(f"d={d} lambda={lam_} mu={mu}: eps1={c.eps1:.4f}")
    for name in ("log_delta1", "log_delta2", "log_eps3", "log_t1", "log_t2"):
        print(f"    {name[4:]:>7} = 10^{getattr(c, name) / LOG10:.4g}")

# a coarser subcube grid gives a bound that a simulation can actually check
step = ConnectionFunction.step([(1.0, 1.0), (1.5, 0.5)])
b = log_bridge_bound(4.0, 2, step, half_width=0.5, side=0.5)
print(f"\ntoy bridge bound: {math.exp(b):.5f}")
