"""Seed-to-seed renormalization at toy constants.

The machine grows a connected sub-cluster ``xi`` of the origin in the graph
on an intensity-``lam`` Poisson field plus independent sprinkle fields, stage
by stage over the sites of the quarter plane.  Site ``(i, j)`` is open when
the stage finds seeds (boxes ``Lambda_m(c)``, ``c`` integer, with every unit
subcube occupied and a connected induced graph, lying inside the cover of
``xi``) centred in the bond-boxes to the right of and above the site-box
``Lambda_N(4N(i, j))``, where ``N = n + m``.

Each step starts from a seed centre ``v`` and explores the part of
``Lambda_n(v)`` outside the cube cover of ``xi^+`` together with one or two
slabs of depth ``2m`` beyond a face of ``Lambda_n(v)``, steered towards the
target site-box, plus the two sprinkle fields of that step on
``Lambda_{n+1}(v)``.  Structural postconditions are checked at run time and
reported as violations.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..connection import ConnectionFunction
from ..geometry import (L2, Box, Norm, _point_cover, centre_to_corner, lam,
                        plus_and_double_boundary, sgn, steered_region)
from ..graph import Graph, components, sample_edges
from ..point_process import LazyPoissonField, PointSet, ORIGIN_ID
from ..rng import Stream, as_stream, tag


class RenormalizationError(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class ToyConstants:
    """User-chosen constants for a feasible run of the stage machine."""

    d: int
    m: int
    n: int
    lam: float
    eps1: float
    eps0: float = 1 / 9999

    def __post_init__(self):
        if self.d < 2:
            raise RenormalizationError("d must be >= 2")
        if self.m < 1:
            raise RenormalizationError("m must be >= 1")
        if self.n <= 0 or self.n % (2 * self.m):
            raise RenormalizationError("n must be a positive multiple of 2m")
        for name in ("eps0", "eps1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise RenormalizationError(f"{name} must lie in [0, 1]")
        if self.lam < 0:
            raise RenormalizationError("lam must be >= 0")

    @property
    def N(self) -> int:
        return self.n + self.m


@dataclass
class StageRecord:
    i: int
    j: int
    status: str
    steps: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    snapshot: int = 0

    def to_json(self) -> str:
        return json.dumps({"i": self.i, "j": self.j, "status": self.status,
                           "steps": self.steps, "seeds": self.seeds})


@dataclass
class RenormResult:
    records: list
    xi: PointSet
    snapshots: list
    violations: list
    checks: dict

    def open_sites(self) -> dict:
        return {(r.i, r.j): r.status in ("open", "inaccessible-open") for r in self.records}

    def reachable(self) -> set:
        return {(r.i, r.j) for r in self.records if r.status == "open"}

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for r in self.records:
                fh.write(r.to_json() + "\n")


def stage_order(L: int) -> list:
    """Sites with ``i + j <= L`` by l^1 distance, then decreasing lexicographic order."""
    return [(i, s - i) for s in range(L + 1) for i in range(s, -1, -1)]


@njit(cache=True)
def _merge(parent, ei, ej):
    merges = 0
    for t in range(ei.shape[0]):
        a = ei[t]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ej[t]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
            merges += 1
    return merges


def _lex_first(coords):
    order = np.lexsort(coords.T[::-1])
    return order[0]


class _Machine:
    def __init__(self, c: ToyConstants, phi: ConnectionFunction, norm: Norm, stream: Stream,
                 strict: bool):
        self.c = c
        self.phi = phi
        self.norm = norm
        self.stream = stream
        self.strict = strict
        self.H = LazyPoissonField(c.lam, c.d, stream.child(tag("H")))
        self._sprinkles: dict = {}
        self.edge_key = stream.child(tag("edges")).key
        d = c.d
        self.ids = np.array([ORIGIN_ID], dtype=np.int64)
        self.xy = np.zeros((1, d))
        self.parent = np.zeros(1, dtype=np.int64)
        self.ncomp = 1
        self.snapshots = [1]
        m = c.m
        self._offsets = np.stack(np.meshgrid(*([np.arange(-m, m)] * d), indexing="ij"),
                                 axis=-1).reshape(-1, d)
        self.violations: list = []
        self.checks = {"steps": 0, "steering": 0, "confinement": 0, "nesting": 0,
                       "connectivity": 0, "bond_boxes": 0}

    # ------------------------------------------------------------ helpers
    def sprinkle(self, i, j, k, which) -> LazyPoissonField:
        key = (i % 2, j % 2, k, which)
        if key not in self._sprinkles:
            s = self.stream.child(tag("sprinkle"), key[0], key[1], k, tag(which))
            self._sprinkles[key] = LazyPoissonField(self.c.eps1, self.c.d, s)
        return self._sprinkles[key]

    def violate(self, msg):
        self.violations.append(msg)
        if self.strict:
            raise InvariantViolation(msg)

    def xi_points(self, box: Box) -> np.ndarray:
        return self.xy[box.contains(self.xy)]

    def grow(self, S: PointSet):
        """Replace ``xi`` by its set-cluster in ``G(xi u S)``."""
        if len(S) == 0:
            self.snapshots.append(len(self.ids))
            return
        _, first = np.unique(S.ids, return_index=True)
        S = S.subset(np.sort(first))
        S = S.subset(~np.isin(S.ids, self.ids))
        if len(S) == 0:
            self.snapshots.append(len(self.ids))
            return
        R = self.phi.range
        lo, hi = S.coords.min(axis=0) - R, S.coords.max(axis=0) + R
        near = np.nonzero(np.all((self.xy >= lo) & (self.xy <= hi), axis=1))[0]
        coords = np.vstack([self.xy[near], S.coords])
        ids = np.concatenate([self.ids[near], S.ids])
        edges, _ = sample_edges(coords, ids, self.phi, self.norm, self.edge_key)
        k = len(near)
        pts = PointSet(ids, coords)
        cd = components(Graph(pts, edges))
        hit = np.unique(cd.labels[:k])
        take = np.isin(cd.labels, hit)
        take[:k] = False
        new_local = np.nonzero(take)[0]
        if len(new_local) == 0:
            self.snapshots.append(len(self.ids))
            return
        before = len(self.ids)
        # global indices for the union-find check
        gidx = np.empty(len(ids), dtype=np.int64)
        gidx[:k] = near
        gidx[new_local] = before + np.arange(len(new_local))
        self.ids = np.concatenate([self.ids, ids[new_local]])
        self.xy = np.vstack([self.xy, coords[new_local]])
        self.parent = np.concatenate([self.parent, before + np.arange(len(new_local))])
        self.ncomp += len(new_local)
        keep = take.copy()
        keep[:k] = True
        e = edges[keep[edges[:, 0]] & keep[edges[:, 1]]] if len(edges) else edges
        if len(e):
            self.ncomp -= _merge(self.parent, gidx[e[:, 0]], gidx[e[:, 1]])
        self._check_growth(before)

    def _check_growth(self, before):
        c = self.c
        self.checks["nesting"] += 1
        if len(self.ids) < before or len(np.unique(self.ids)) != len(self.ids):
            self.violate("sub-cluster is not nested")
        self.checks["connectivity"] += 1
        if self.ncomp != 1:
            self.violate(f"sub-cluster splits into {self.ncomp} components")
        if c.d > 2:
            self.checks["confinement"] += 1
            if np.any(np.abs(self.xy[before:, 2:]) > 2 * c.N):
                self.violate("sub-cluster leaves the slab of thickness 4N")
        self.snapshots.append(len(self.ids))

    def find_seed(self, slab: Box):
        """Lexicographically first seed inside ``slab`` and the cover of ``xi``."""
        m, d = self.c.m, self.c.d
        lo = np.ceil(np.asarray(slab.lo) + m).astype(int)
        hi = np.floor(np.asarray(slab.hi) - m).astype(int)
        if np.any(hi < lo):
            return None
        cover = _point_cover(self.xi_points(slab))
        grids = np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)], indexing="ij")
        cands = np.stack(grids, axis=-1).reshape(-1, d)
        cands = cands[np.lexsort(cands.T[::-1])]
        for x in cands:
            cubes = x + self._offsets
            if not all(tuple(k) in cover for k in cubes.tolist()):
                continue
            if self.is_seed(x):
                return tuple(int(v) for v in x)
        return None

    def is_seed(self, x) -> bool:
        box = lam(self.c.m, self.c.d, x)
        pts = self.H.query(box)
        if len(pts) < self._offsets.shape[0]:
            return False
        need = np.asarray(x, dtype=int) + self._offsets
        cover = _point_cover(pts.coords)
        if not all(tuple(k) in cover for k in need.tolist()):
            return False
        edges, _ = sample_edges(pts.coords, pts.ids, self.phi, self.norm, self.edge_key)
        return len(components(Graph(pts, edges))) == 1

    # ------------------------------------------------------------ steps
    def first_stage(self):
        """Steps 1 and 2 of the origin stage.  Returns (steps, right seed, up seed)."""
        c = self.c
        d, m, n = c.d, c.m, c.n
        steps = []
        Hm = self.H.query(lam(m, d))
        near = self.H.query(lam(0.5, d))
        P1 = self.sprinkle(0, 0, 1, "P").query(lam(0.5, d))
        ok = self.is_seed(np.zeros(d, int)) and len(near) > 0
        if ok:
            first = near.subset(np.array([_lex_first(near.coords)]))
            loc = PointSet(np.concatenate([[ORIGIN_ID], first.ids, P1.ids]),
                           np.vstack([np.zeros((1, d)), first.coords, P1.coords]))
            e, _ = sample_edges(loc.coords, loc.ids, self.phi, self.norm, self.edge_key)
            cd = components(Graph(loc, e))
            ok = cd.labels[0] == cd.labels[1]
        steps.append({"name": "seed-origin", "success": bool(ok)})
        if not ok:
            return steps, None, None
        self.grow(PointSet(np.concatenate([P1.ids, Hm.ids]), np.vstack([P1.coords, Hm.coords])))
        # second step: into T(n, 2m) and T2(n, 2m)
        self.checks["steps"] += 1
        zero = np.zeros(d)
        slab_r, _ = steered_region(0, n, 2 * m, zero, [-1] * d)
        slab_u, _ = steered_region(1, n, 2 * m, zero, [-1] * d)
        ring = lam(n, d) - lam(m + 1, d)
        parts = [self.H.query(lam(n, d)).restrict(ring), self.H.query(slab_r),
                 self.H.query(slab_u)]
        box = lam(n + 1, d)
        parts += [self.sprinkle(0, 0, 2, "P").query(box), self.sprinkle(0, 0, 2, "Q").query(box)]
        self.grow(_union(parts, d))
        vr, vu = self.find_seed(slab_r), self.find_seed(slab_u)
        steps.append({"name": "branch", "success": vr is not None and vu is not None})
        return steps, vr, vu

    def step(self, v, kinds, site, k):
        """One exploration step from seed ``v`` into the slabs named by ``kinds``.

        ``kinds`` is ``("right",)``, ``("up",)`` or ``("right", "up")`` (the
        branching step).  Returns the new seed centres (``None`` on failure).
        """
        c = self.c
        d, m, n, N = c.d, c.m, c.n, c.N
        i, j = site
        centre = np.zeros(d)
        centre[0], centre[1] = 4 * N * i, 4 * N * j
        v = np.asarray(v, dtype=float)
        signs = [sgn(v[a] - centre[a]) for a in range(d)]
        B = lam(n, d, v)
        local = self.xi_points(lam(n + 1, d, v))
        plus, _, plusplus = plus_and_double_boundary(local, B)
        slabs = []
        for kind in kinds:
            if kind == "right":
                slabs.append(steered_region(0, n, 2 * m, v, signs))
            elif len(kinds) == 2:
                s6 = [-1, 0] + signs[2:]
                slabs.append(steered_region(1, n, 2 * m, v, s6))
            else:
                slabs.append(steered_region(1, n, 2 * m, v, signs))
        if len(kinds) == 2:
            self.checks["steering"] += 1
            face = {centre_to_corner(z) for z in slabs[1][1]}
            if face & plusplus.corners:
                self.violate(f"branch at {tuple(v)}: upper face meets the cover of xi++")
        self.checks["steps"] += 1
        hb = self.H.query(B)
        if len(hb):
            hb = hb.subset(~plus.contains(hb.coords))
        parts = [hb] + [self.H.query(box) for box, _ in slabs]
        box = lam(n + 1, d, v)
        parts += [self.sprinkle(i, j, k, "P").query(box), self.sprinkle(i, j, k, "Q").query(box)]
        self.grow(_union(parts, d))
        return [self.find_seed(box) for box, _ in slabs]


def _union(parts, d) -> PointSet:
    parts = [p for p in parts if len(p)]
    if not parts:
        return PointSet.empty(d)
    return PointSet(np.concatenate([p.ids for p in parts]), np.vstack([p.coords for p in parts]))


def _in_box(v, box: Box) -> bool:
    return bool(box.contains(np.asarray(v, dtype=float))[0])


def run_renormalization(constants: ToyConstants, L: int, phi: ConnectionFunction,
                        norm: Norm = L2, stream=0, strict: bool = False) -> RenormResult:
    """Run the stage machine over the sites ``i + j <= L``.

    Parameters
    ----------
    constants
        Toy constants; the machine checks structure, not probability bounds.
    L
        Last l^1 level of stages.
    strict
        Raise :class:`InvariantViolation` at the first failed runtime check
        instead of collecting it.
    """
    if L < 0:
        raise RenormalizationError("L must be >= 0")
    c = constants
    stream = as_stream(stream)
    mach = _Machine(c, phi, norm, stream, strict)
    N, d = c.N, c.d
    right_seed: dict = {}
    up_seed: dict = {}
    reach: set = set()
    records = []
    for (i, j) in stage_order(L):
        rec = StageRecord(i, j, "closed")
        if (i, j) == (0, 0):
            steps, vr, vu = mach.first_stage()
            rec.steps = steps
            ok = all(s["success"] for s in steps)
            if ok:
                right_seed[(0, 0)], up_seed[(0, 0)] = vr, vu
                rec.seeds = [list(vr), list(vu)]
        else:
            if (i - 1, j) in reach:
                v, entry = right_seed[(i - 1, j)], "left"
            elif (i, j - 1) in reach:
                v, entry = up_seed[(i, j - 1)], "below"
            else:
                u = stream.child(tag("inaccessible"), i, j).uniform()
                rec.status = "inaccessible-open" if u < 1 - 20 * c.eps0 else "inaccessible-closed"
                rec.snapshot = len(mach.snapshots) - 1
                records.append(rec)
                continue
            ok, vr, vu = _generic_stage(mach, i, j, v, entry, rec)
            if ok:
                right_seed[(i, j)], up_seed[(i, j)] = vr, vu
        if ok:
            rec.status = "open"
            reach.add((i, j))
            mach.checks["bond_boxes"] += 1
            centre = np.zeros(d)
            centre[0], centre[1] = 4 * N * i, 4 * N * j
            rb = lam(N, d, centre + 2 * N * np.eye(d)[0])
            ub = lam(N, d, centre + 2 * N * np.eye(d)[1])
            if not (_in_box(right_seed[(i, j)], rb) and _in_box(up_seed[(i, j)], ub)):
                mach.violate(f"open site {(i, j)} lacks seeds in its bond-boxes")
        rec.snapshot = len(mach.snapshots) - 1
        records.append(rec)
    xi = PointSet(mach.ids.copy(), mach.xy.copy())
    return RenormResult(records, xi, list(mach.snapshots), list(mach.violations),
                        dict(mach.checks))


def _generic_stage(mach: _Machine, i, j, v, entry, rec: StageRecord):
    N = mach.c.N
    k = 0

    def run(kinds, start):
        nonlocal k
        k += 1
        if k > 5:
            mach.violate(f"stage {(i, j)} needs more than five steps")
        out = mach.step(start, kinds, (i, j), k)
        rec.steps.append({"name": "branch" if len(kinds) == 2 else kinds[0],
                          "success": all(s is not None for s in out)})
        for s in out:
            if s is not None:
                rec.seeds.append(list(s))
        return out

    if entry == "left":
        while v[0] < 4 * N * i - N:
            (v,) = run(("right",), v)
            if v is None:
                return False, None, None
    else:
        while v[1] < 4 * N * j - N:
            (v,) = run(("up",), v)
            if v is None:
                return False, None, None
    vr, vu = run(("right", "up"), v)
    if vr is None or vu is None:
        return False, None, None
    while vr[0] < 4 * N * i + N:
        (vr,) = run(("right",), vr)
        if vr is None:
            return False, None, None
    while vu[1] < 4 * N * j + N:
        (vu,) = run(("up",), vu)
        if vu is None:
            return False, None, None
    return True, vr, vu
