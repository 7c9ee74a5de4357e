"""Growing the cluster of a finite set, point by point or cube by cube.

Both procedures reveal the Poisson process only where it can still attach to
the cluster, so the law of the result equals that of the set-cluster in the
batch graph while the far part of the domain stays unexplored.
"""
from __future__ import annotations

import heapq
import math
from itertools import product
from dataclasses import dataclass, field

import numpy as np

from ..connection import ConnectionFunction
from ..geometry import (L2, Box, CubeUnion, GeometryError, Norm, Region, _check_aligned,
                        corner_to_centre)
from ..graph import sample_edges
from ..point_process import LazyPoissonField, PointSet, SamplingError, _place
from ..rng import as_stream, tag


@dataclass(eq=False)
class ExplorationState:
    """Bookkeeping of a sequential exploration.

    ``survival(y)`` is the product of ``1 - phi(|y - x|)`` over the processed
    points ``x``; the residual intensity of unexplored points is
    ``intensity * survival`` on ``domain``.
    """

    domain: Region
    phi: ConnectionFunction
    norm: Norm
    intensity: float
    active: PointSet
    finished: PointSet
    factors: list = field(default_factory=list)
    revealed_cubes: set = field(default_factory=set)

    def survival(self, y) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        out = np.ones(len(y))
        for x in self.factors:
            out *= 1.0 - self.phi(self.norm(y - x))
        return out

    def residual_intensity(self, y) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return self.intensity * self.survival(y) * self.domain.contains(y)


def _bounded(domain: Region):
    try:
        return domain.bounds()
    except GeometryError:
        raise GeometryError("exploration needs a bounded domain") from None


def grow_sequential(xi0: PointSet, intensity: float, domain: Region, phi: ConnectionFunction,
                    norm: Norm = L2, stream=0):
    """Cluster of ``xi0`` in ``G(xi0 u H)``, ``H`` Poisson on ``domain``, grown sequentially.

    Active points are processed first-in first-out.  When ``x`` is processed
    the points of the unexplored process joined directly to ``x`` form a
    Poisson process of intensity ``g(y) phi(|y - x|)``; they are sampled by
    thinning a homogeneous sample on ``domain`` near ``x``, after which ``g`` is
    multiplied by ``1 - phi(|. - x|)``.

    Returns
    -------
    cluster : PointSet
        ``xi0`` together with every discovered point.
    state : ExplorationState
        Residual description with all points finished.
    """
    if intensity < 0 or not np.isfinite(intensity):
        raise SamplingError("intensity must be finite and nonnegative")
    lo, hi = _bounded(domain)
    stream = as_stream(stream)
    d = xi0.dim if len(xi0) else domain.dim
    R = phi.range
    next_id = int(xi0.ids.max()) + 1 if len(xi0) else 1
    queue = [np.asarray(x) for _, x in xi0]
    found_ids, found_xy = [], []
    done = np.empty((0, d))
    head = 0
    while head < len(queue):
        x = queue[head]
        head += 1
        if intensity > 0 and R > 0:
            rng = stream.child(head).generator()
            wlo, whi = np.maximum(lo, x - R), np.minimum(hi, x + R)
            if np.all(whi > wlo):
                if isinstance(domain, Box):
                    count = int(rng.poisson(intensity * float(np.prod(whi - wlo))))
                    cand = wlo + rng.random((count, d)) * (whi - wlo)
                else:
                    region = domain & Box(tuple(wlo), tuple(whi))
                    cand = _place(rng, int(rng.poisson(intensity * region.volume())), region)
                if len(cand):
                    keep_p = phi(norm(cand - x))
                    near = done[np.all(np.abs(done - x) <= 2 * R, axis=1)]
                    if len(near):
                        keep_p = keep_p * np.prod(
                            1.0 - phi(norm(cand[:, None, :] - near[None, :, :])), axis=1)
                    for y in cand[rng.random(len(cand)) < keep_p]:
                        queue.append(y)
                        found_ids.append(next_id)
                        found_xy.append(y)
                        next_id += 1
        done = np.vstack([done, x[None]])
    factors = list(done)
    new = PointSet(np.asarray(found_ids, np.int64), np.asarray(found_xy).reshape(-1, d))
    cluster = PointSet(np.concatenate([xi0.ids, new.ids]),
                       np.vstack([xi0.coords.reshape(-1, d), new.coords]))
    state = ExplorationState(domain, phi, norm, float(intensity), PointSet.empty(d), cluster,
                             factors)
    return cluster, state


class _DSU:
    def __init__(self):
        self.parent: dict = {}
        self.members: dict = {}

    def add(self, v):
        self.parent[v] = v
        self.members[v] = [v]

    def find(self, v):
        p = self.parent
        while p[v] != v:
            p[v] = p[p[v]]
            v = p[v]
        return v

    def union(self, a, b):
        """Merge and return ``(new_root, absorbed_members)``."""
        a, b = self.find(a), self.find(b)
        if a == b:
            return a, []
        if len(self.members[a]) < len(self.members[b]):
            a, b = b, a
        self.parent[b] = a
        moved = self.members.pop(b)
        self.members[a].extend(moved)
        return a, moved


_ROOT = -1


def _near_corners(x, R, lookup: set):
    """Domain cube corners within sup-distance ``R`` of the point ``x``."""
    ranges = [range(math.floor(v - R) - (1 if v - R == math.floor(v - R) else 0),
                    math.ceil(v + R) + 1) for v in x]
    out = []
    for k in product(*ranges):
        if k in lookup:
            gap = max(max(k[a] - x[a], x[a] - k[a] - 1, 0.0) for a in range(len(x)))
            if gap <= R:
                out.append(k)
    return out


def grow_cubewise(xi0: PointSet, intensity: float, domain: CubeUnion, phi: ConnectionFunction,
                  norm: Norm = L2, stream=0, field=None, reach: float | None = None):
    """Cluster of ``xi0`` grown by revealing whole unit cubes of ``domain``.

    At each step the lexicographically first unrevealed domain cube within
    sup-distance ``reach`` (default: the range of ``phi``) of the current
    cluster is revealed: its points and every edge coin between them and the
    points revealed so far.  The procedure stops when no such cube remains, so
    cubes farther than ``reach`` from the final cluster are never looked at.

    Parameters
    ----------
    field
        Source of cube contents with a ``cubes(corners)`` method; defaults to
        a :class:`LazyPoissonField` keyed by ``stream``.

    Returns
    -------
    cluster, revealed, other
        The cluster (a PointSet), the set of revealed cube centres and the
        revealed points outside the cluster.
    """
    if not isinstance(domain, CubeUnion):
        domain = CubeUnion(corners=_check_aligned(domain), dim=domain.dim)
    stream = as_stream(stream)
    d = domain.dim
    R = phi.range if reach is None else float(reach)
    if field is None:
        field = LazyPoissonField(intensity, d, stream.child(tag("cubes")))
    edge_key = stream.child(tag("edges")).key
    lookup = set(domain.corners)
    dsu = _DSU()
    dsu.add(_ROOT)
    xy: dict = {}
    for i, x in xi0:
        xy[i] = np.asarray(x)
        dsu.add(i)
        dsu.union(_ROOT, i)
    by_cube: dict = {}
    revealed: set = set()
    heap: list = []
    queued: set = set()

    def enqueue(point):
        for k in _near_corners(point.tolist(), R, lookup):
            if k not in queued:
                queued.add(k)
                heapq.heappush(heap, k)

    for i in xi0.ids.tolist():
        enqueue(xy[i])
    span = int(math.ceil(R))
    x0_ids = xi0.ids
    while heap:
        k = heapq.heappop(heap)
        revealed.add(k)
        pts = field.cubes(np.asarray([k]))
        by_cube[k] = pts.ids.tolist()
        if len(pts) == 0:
            continue
        for i, x in zip(pts.ids.tolist(), pts.coords):
            xy[i] = x
            dsu.add(i)
        old = list(x0_ids.tolist())
        for off in product(*([range(-span - 1, span + 2)] * d)):
            c = tuple(a + b for a, b in zip(k, off))
            if c != k and c in by_cube:
                old.extend(by_cube[c])
        new_ids = pts.ids.tolist()
        all_ids = np.asarray(new_ids + old, dtype=np.int64)
        coords = np.vstack([xy[i] for i in all_ids.tolist()])
        edges, _ = sample_edges(coords, all_ids, phi, norm, edge_key)
        n_new = len(new_ids)
        joined = []
        for a, b in edges.tolist():
            if a >= n_new and b >= n_new:
                continue  # both old: this coin was revealed earlier
            ra, rb = dsu.find(int(all_ids[a])), dsu.find(int(all_ids[b]))
            if ra == rb:
                continue
            root = dsu.find(_ROOT)
            r, moved = dsu.union(ra, rb)
            if root in (ra, rb):
                if r == root:
                    joined.extend(moved)
                else:
                    merged = dsu.members[r]
                    joined.extend(merged[:len(merged) - len(moved)])
        for v in joined:
            enqueue(xy[v])
    root = dsu.find(_ROOT)
    in_cluster = set(dsu.members[root]) - {_ROOT}
    seeds = set(x0_ids.tolist())
    ids = sorted(in_cluster, key=lambda v: (v not in seeds, v))
    cluster = PointSet(np.asarray(ids, np.int64), np.vstack([xy[i] for i in ids]).reshape(-1, d)
                       if ids else np.empty((0, d)))
    rest = [i for ks in by_cube.values() for i in ks if i not in in_cluster]
    other = PointSet(np.asarray(rest, np.int64), np.vstack([xy[i] for i in rest]).reshape(-1, d)
                     if rest else np.empty((0, d)))
    return cluster, {corner_to_centre(k) for k in revealed}, other
