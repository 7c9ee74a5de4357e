"""Locating the critical intensity of the Gilbert disc graph.

Crossing probabilities of a 2:1 window are sampled on a coarse intensity grid,
then the bisection estimator narrows the bracket.  Everything here runs in a
minute or so on one core; raise ``REPS`` and ``WINDOW`` for sharper numbers.
"""
import numpy as np

from rcmlab.connection import ConnectionFunction
from rcmlab.estimators import crossing_indicators, estimate_lambda_c, wilson
from rcmlab.geometry import L2
from rcmlab.rng import Stream

phi = ConnectionFunction.indicator(1.0)
WINDOW, REPS = 20.0, 200
root = Stream.root(7)

# a coarse scan first: the crossing curve is steep around the threshold
grid = np.linspace(1.0, 2.0, 6)
for lam_ in grid:
    hits = crossing_indicators(lam_, phi, L2, 2, WINDOW, REPS, root.child(1))[:, 0]
    _, lo, hi = wilson(int(hits.sum()), REPS)
    print(f"lambda={lam_:.2f}  crossing={hits.mean():.3f}  [{lo:.3f}, {hi:.3f}]")

# the same replications are reused at every probe, so the curve is monotone
rec = estimate_lambda_c(phi, L2, d=2, window=WINDOW, reps=REPS, tolerance=0.02,
                        stream=root.child(2), lam_lo=1.0, lam_hi=2.0)
print(f"\nlambda_c ~ {rec.value:.3f} +/- {rec.std_error:.3f}")

# doubling the range divides the threshold by four in two dimensions
wide = ConnectionFunction.indicator(2.0)
rec2 = estimate_lambda_c(wide, L2, d=2, window=2 * WINDOW, reps=REPS, tolerance=0.005,
                         stream=root.child(2), lam_lo=0.25, lam_hi=0.5)
print(f"range 2: lambda_c ~ {rec2.value:.4f}, ratio {rec2.value / rec.value:.3f}")
