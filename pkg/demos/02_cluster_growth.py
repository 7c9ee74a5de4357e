"""Growing the origin's cluster three ways and checking they agree.

Sequential growth thins the field as it goes, cube-wise growth reveals unit
cubes lazily, and the batch route samples everything and reads off the
component.  The cluster size distributions should be indistinguishable.
"""
from collections import Counter

from rcmlab.connection import ConnectionFunction
from rcmlab.exploration import grow_cubewise, grow_sequential
from rcmlab.geometry import L2, cube_cover, lam
from rcmlab.graph import set_cluster
from rcmlab.point_process import PointSet, sample_homogeneous
from rcmlab.rng import Stream, tag

phi = ConnectionFunction.indicator(1.0)
box = lam(3, 2)
cubes = cube_cover(box)
RUNS = 500
root = Stream.root(11)
o = PointSet.origin(2)

sizes = {"sequential": Counter(), "cubewise": Counter(), "batch": Counter()}
for r in range(RUNS):
    s = root.child(r)
    sizes["sequential"][len(grow_sequential(o, 1.0, box, phi, L2, s.child(tag("seq")))[0])] += 1
    sizes["cubewise"][len(grow_cubewise(o, 1.0, cubes, phi, L2, s.child(tag("cube")))[0])] += 1
    pts = sample_homogeneous(1.0, box, s.child(tag("pts")))
    sizes["batch"][len(set_cluster(o, pts, phi, L2, s.child(tag("edges"))))] += 1

for k in range(1, 9):
    row = "  ".join(f"{sizes[m][k] / RUNS:.3f}" for m in sizes)
    print(f"|cluster| = {k}:  {row}")
for m, c in sizes.items():
    mean = sum(k * v for k, v in c.items()) / RUNS
    print(f"{m:>10}: mean size {mean:.2f}")
