"""Driving the multi-scale exploration with feasible toy constants.

The constants that make the probability bounds work are far too large to
simulate, so a small ``m`` and ``n`` are used and only the structural
invariants (connectivity, confinement, seed placement) are enforced.
The open sites of the induced oriented lattice are then printed as a map.
"""
from rcmlab.connection import ConnectionFunction
from rcmlab.exploration import ToyConstants, oriented_site_percolation, run_renormalization
from rcmlab.geometry import L2
from rcmlab.rng import Stream

phi = ConnectionFunction.indicator(1.0)
tc = ToyConstants(d=2, m=4, n=8, lam=8.0, eps1=1.0)
L = 3

res = run_renormalization(tc, L, phi, L2, stream=Stream.root(3))
print(f"{len(res.records)} stages, {len(res.violations)} invariant violations")
for rec in res.records:
    print(f"  site ({rec.i},{rec.j}): {rec.status}")

opened = res.open_sites()
for j in range(L, -1, -1):
    print(" ".join("#" if opened.get((i, j)) else "." if i + j <= L else " "
                   for i in range(L + 1)))
print(f"explored cluster holds {len(res.xi)} points")

# compare with plain oriented site percolation at a high density
alive = sum(oriented_site_percolation(0.98, 50, Stream.root(5).child(r))[0] for r in range(100))
print(f"oriented percolation p=0.98, L=50: {alive}/100 survive")
