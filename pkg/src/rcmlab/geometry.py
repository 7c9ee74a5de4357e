"""Norms, regions and the unit-cube discretization.

Lattice sites are the half-integer points of ``(1/2 + Z)^d``; each one is the
centre of the closed unit cube ``Lambda_{1/2}(z)``.  Internally a site is kept
as the integer lower corner ``k = z - 1/2`` so that all lattice arithmetic is
exact; the public functions accept and return float centres.

Two cover rules are used:

* a finite point set is covered by every closed cube containing one of its
  points (a point on a shared face lies in all touching cubes);
* a region is covered by the cubes it overlaps with positive volume, so a
  cube-aligned region is its own cover.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np


class GeometryError(ValueError):
    pass


# ---------------------------------------------------------------- norms

@dataclass(frozen=True)
class Norm:
    """The l^p norm on R^d, ``1 <= p <= inf``."""

    p: float = 2.0

    def __post_init__(self):
        if not (self.p >= 1):
            raise GeometryError(f"norm exponent must be >= 1, got {self.p}")

    def __call__(self, v) -> np.ndarray:
        v = np.abs(np.asarray(v, dtype=float))
        if math.isinf(self.p):
            return v.max(axis=-1)
        if self.p == 1:
            return v.sum(axis=-1)
        if self.p == 2:
            return np.sqrt((v * v).sum(axis=-1))
        return (v ** self.p).sum(axis=-1) ** (1.0 / self.p)


L2 = Norm(2.0)
LINF = Norm(math.inf)


def distance(a, b, norm: Norm = L2) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise GeometryError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise GeometryError("coordinates must be finite")
    return float(norm(a - b))


# ---------------------------------------------------------------- regions

def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    return x


def _box_intersect(a, b):
    lo = np.maximum(a[0], b[0])
    hi = np.minimum(a[1], b[1])
    if np.any(hi < lo):
        return None
    return lo, hi


def _box_subtract(a, b):
    """Disjoint boxes covering ``a \\ b`` (up to shared faces)."""
    inter = _box_intersect(a, b)
    if inter is None or np.any(inter[1] - inter[0] <= 0):
        return [a]
    pieces = []
    lo, hi = a[0].copy(), a[1].copy()
    for i in range(len(lo)):
        if lo[i] < inter[0][i]:
            plo, phi = lo.copy(), hi.copy()
            phi[i] = inter[0][i]
            pieces.append((plo, phi))
        if inter[1][i] < hi[i]:
            plo, phi = lo.copy(), hi.copy()
            plo[i] = inter[1][i]
            pieces.append((plo, phi))
        lo[i], hi[i] = inter[0][i], inter[1][i]
    return pieces


class Region:
    """Closed subset of R^d supporting membership, bounds and volume."""

    dim: int

    def contains(self, points) -> np.ndarray:
        raise NotImplementedError

    def bounds(self):
        raise NotImplementedError

    def boxes(self, within=None) -> list:
        """Boxes with disjoint interiors whose union is this region."""
        raise NotImplementedError

    @property
    def bounded(self) -> bool:
        try:
            self.bounds()
        except GeometryError:
            return False
        return True

    def volume(self) -> float:
        return math.fsum(float(np.prod(hi - lo)) for lo, hi in self.boxes())

    def __and__(self, other):
        return Intersection(self, other)

    def __sub__(self, other):
        return Difference(self, other)


@dataclass(frozen=True, eq=False)
class Box(Region):
    """Axis-aligned closed box ``[lo_1, hi_1] x ... x [lo_d, hi_d]``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise GeometryError("box corners differ in dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def centered(cls, center, s: float) -> "Box":
        """``Lambda_s(center) = center + [-s, s]^d``."""
        c = np.asarray(center, dtype=float)
        return cls(tuple(c - s), tuple(c + s))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2

    def contains(self, points) -> np.ndarray:
        x = _as_points(points)
        return np.all((x >= np.asarray(self.lo)) & (x <= np.asarray(self.hi)), axis=1)

    def bounds(self):
        return np.asarray(self.lo), np.asarray(self.hi)

    def boxes(self, within=None):
        b = (np.asarray(self.lo), np.asarray(self.hi))
        if within is not None:
            b = _box_intersect(b, within)
            return [] if b is None else [b]
        return [b]

    def __eq__(self, other):
        return isinstance(other, Box) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Box(lo={self.lo}, hi={self.hi})"


def lam(s: float, d: int, center=None) -> Box:
    """The cube ``Lambda_s(center)`` in dimension ``d``."""
    return Box.centered(np.zeros(d) if center is None else center, s)


@dataclass(frozen=True)
class Slab(Region):
    """``R^2 x [-M/2, M/2]^(d-2)``; unbounded, so only usable intersected."""

    thickness: float
    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise GeometryError("a slab needs d >= 2")
        if not self.thickness > 0:
            raise GeometryError("slab thickness must be positive")

    def contains(self, points) -> np.ndarray:
        x = _as_points(points)
        return np.all(np.abs(x[:, 2:]) <= self.thickness / 2, axis=1)

    def bounds(self):
        raise GeometryError("a slab is unbounded; intersect it with a box")

    def _as_box(self, within):
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        lo[2:] = -self.thickness / 2
        hi[2:] = self.thickness / 2
        return lo, hi

    def boxes(self, within=None):
        if within is None:
            raise GeometryError("a slab is unbounded; intersect it with a box")
        b = _box_intersect(self._as_box(within), within)
        return [] if b is None else [b]


class CubeUnion(Region):
    """Finite union of closed unit cubes ``Lambda_{1/2}(z)``, z half-integer."""

    def __init__(self, sites: Iterable = (), dim: int | None = None, *, corners=None):
        if corners is None:
            corners = {centre_to_corner(z) for z in sites}
        self.corners = frozenset(tuple(int(v) for v in k) for k in corners)
        if dim is None:
            if not self.corners:
                raise GeometryError("dimension required for an empty cube union")
            dim = len(next(iter(self.corners)))
        self.dim = dim
        self._lookup = None

    @property
    def centres(self) -> frozenset:
        return frozenset(corner_to_centre(k) for k in self.corners)

    def __len__(self):
        return len(self.corners)

    def __eq__(self, other):
        return isinstance(other, CubeUnion) and self.corners == other.corners

    def __hash__(self):
        return hash(self.corners)

    def __repr__(self):
        return f"CubeUnion({len(self.corners)} cubes, d={self.dim})"

    def contains(self, points) -> np.ndarray:
        x = _as_points(points)
        if not self.corners or len(x) == 0:
            return np.zeros(len(x), dtype=bool)
        if self._lookup is None:
            self._lookup = _CornerLookup(self.corners, self.dim)
        return self._lookup.contains_closed(x)

    def bounds(self):
        if not self.corners:
            z = np.zeros(self.dim)
            return z, z
        k = np.array(sorted(self.corners), dtype=float)
        return k.min(axis=0), k.max(axis=0) + 1

    def boxes(self, within=None):
        out = []
        for k in sorted(self.corners):
            b = (np.asarray(k, dtype=float), np.asarray(k, dtype=float) + 1)
            if within is not None:
                b = _box_intersect(b, within)
                if b is None:
                    continue
            out.append(b)
        return out

    def volume(self) -> float:
        return float(len(self.corners))


@dataclass(frozen=True)
class Intersection(Region):
    a: Region
    b: Region

    @property
    def dim(self):
        return self.a.dim

    def contains(self, points):
        return self.a.contains(points) & self.b.contains(points)

    def bounds(self):
        try:
            ba = self.a.bounds()
        except GeometryError:
            ba = None
        try:
            bb = self.b.bounds()
        except GeometryError:
            bb = None
        if ba is None and bb is None:
            raise GeometryError("intersection of unbounded regions")
        if ba is None:
            return bb
        if bb is None:
            return ba
        inter = _box_intersect(ba, bb)
        if inter is None:
            z = np.zeros(self.dim)
            return z, z
        return inter

    def boxes(self, within=None):
        w = self.bounds()
        if within is not None:
            w = _box_intersect(w, within)
            if w is None:
                return []
        out = []
        for x in self.a.boxes(within=w):
            for y in self.b.boxes(within=w):
                inter = _box_intersect(x, y)
                if inter is not None:
                    out.append(inter)
        return out


@dataclass(frozen=True)
class Difference(Region):
    """``a \\ b`` taken as the closure, as is usual for these constructions."""

    a: Region
    b: Region

    @property
    def dim(self):
        return self.a.dim

    def contains(self, points):
        return self.a.contains(points) & ~self.b.contains(points)

    def bounds(self):
        return self.a.bounds()

    def boxes(self, within=None):
        pieces = self.a.boxes(within=within)
        for y in self.b.boxes(within=self.bounds() if within is None else within):
            nxt = []
            for x in pieces:
                nxt.extend(_box_subtract(x, y))
            pieces = nxt
        return [p for p in pieces if np.all(p[1] - p[0] > 0)]


@dataclass(frozen=True)
class Union(Region):
    a: Region
    b: Region

    @property
    def dim(self):
        return self.a.dim

    def contains(self, points):
        return self.a.contains(points) | self.b.contains(points)

    def bounds(self):
        la, ha = self.a.bounds()
        lb, hb = self.b.bounds()
        return np.minimum(la, lb), np.maximum(ha, hb)

    def boxes(self, within=None):
        return self.a.boxes(within=within) + Difference(self.b, self.a).boxes(within=within)


# ---------------------------------------------------------------- lattice

def centre_to_corner(z) -> tuple:
    k = []
    for v in z:
        c = float(v) - 0.5
        if c != math.floor(c):
            raise GeometryError(f"{tuple(z)} is not a half-integer lattice site")
        k.append(int(c))
    return tuple(k)


def corner_to_centre(k) -> tuple:
    return tuple(v + 0.5 for v in k)


class _CornerLookup:
    """Vectorized closed-cube membership against a set of cube corners."""

    def __init__(self, corners, dim):
        self.dim = dim
        arr = np.array(sorted(corners), dtype=np.int64).reshape(-1, dim)
        self.offset = arr.min(axis=0) - 1
        self.span = arr.max(axis=0) - self.offset + 2
        self.keys = np.unique(self._encode(arr))

    def _encode(self, k):
        k = k - self.offset
        key = np.zeros(len(k), dtype=np.int64)
        for i in range(self.dim):
            key = key * self.span[i] + k[:, i]
        return key

    def _lookup(self, k):
        inside = np.all((k >= self.offset) & (k < self.offset + self.span), axis=1)
        out = np.zeros(len(k), dtype=bool)
        if inside.any():
            keys = self._encode(k[inside])
            pos = np.searchsorted(self.keys, keys)
            pos = np.minimum(pos, len(self.keys) - 1)
            out[inside] = self.keys[pos] == keys
        return out

    def contains_closed(self, x):
        k = np.floor(x).astype(np.int64)
        hit = self._lookup(k)
        on_face = np.any(x == np.floor(x), axis=1) & ~hit
        for idx in np.nonzero(on_face)[0]:
            cand = np.array(list(_touching_corners(x[idx].tolist())), dtype=np.int64)
            hit[idx] = bool(self._lookup(cand).any())
        return hit


def _touching_corners(p):
    opts = []
    for v in p:
        f = math.floor(v)
        opts.append((f, f - 1) if v == f else (f,))
    return product(*opts)


def _point_cover(points) -> set:
    x = _as_points(points)
    out = set()
    if len(x) == 0:
        return out
    k = np.floor(x).astype(np.int64)
    plain = ~np.any(x == np.floor(x), axis=1)
    out.update(map(tuple, k[plain].tolist()))
    for idx in np.nonzero(~plain)[0]:
        out.update(_touching_corners(x[idx].tolist()))
    return {tuple(int(v) for v in c) for c in out}


def _region_cover(region: Region) -> set:
    try:
        region.bounds()
    except GeometryError:
        raise GeometryError("cube_cover needs a bounded set") from None
    out = set()
    for lo, hi in region.boxes():
        if np.any(hi - lo <= 0):
            continue
        ranges = [range(int(math.floor(a)), int(math.ceil(b))) for a, b in zip(lo, hi)]
        out.update(product(*ranges))
    return out


def _cover_corners(eta) -> set:
    if isinstance(eta, CubeUnion):
        return set(eta.corners)
    if isinstance(eta, Region):
        return _region_cover(eta)
    pts = getattr(eta, "coords", eta)
    pts = np.asarray(pts, dtype=float)
    if pts.size and not np.all(np.isfinite(pts)):
        raise GeometryError("cube_cover needs a bounded set")
    return _point_cover(pts)


def _dim_of(eta, fallback=None):
    if isinstance(eta, Region):
        return eta.dim
    d = getattr(eta, "dim", None)
    if d is not None:
        return d
    pts = np.asarray(getattr(eta, "coords", eta), dtype=float)
    if pts.ndim == 2 and pts.shape[1]:
        return pts.shape[1]
    if fallback is None:
        raise GeometryError("cannot infer dimension of an empty point array")
    return fallback


def cube_cover(eta, dim: int | None = None) -> CubeUnion:
    """Union of unit cubes meeting ``eta`` (point set or bounded region)."""
    return CubeUnion(corners=_cover_corners(eta), dim=_dim_of(eta, dim))


def lattice_sites(region: Region) -> set:
    """Corners of the cubes of a cube-aligned region."""
    return _cover_corners(region)


def _restrict(eta, B: Region):
    if isinstance(eta, Region):
        return Intersection(eta, B)
    pts = np.asarray(getattr(eta, "coords", eta), dtype=float)
    if pts.size == 0:
        return pts.reshape(0, B.dim)
    pts = _as_points(pts)
    return pts[B.contains(pts)]


def _check_aligned(B: Region) -> set:
    sites = lattice_sites(B)
    if abs(B.volume() - len(sites)) > 1e-9:
        raise GeometryError("B is not a union of lattice unit cubes")
    return sites


_STENCILS: dict = {}


def _stencil(d):
    if d not in _STENCILS:
        _STENCILS[d] = [s for s in product((-1, 0, 1), repeat=d)]
    return _STENCILS[d]


def _delta_corners(eta, B: Region, sites) -> set:
    inner = _cover_corners(_restrict(eta, B))
    outer = _cover_corners(eta)
    if not inner:
        return set()
    out = set()
    for c in inner:
        for s in _stencil(B.dim):
            z = tuple(a + b for a, b in zip(c, s))
            if z in sites and z not in outer:
                out.add(z)
    return out


def delta_boundary(eta, B: Region) -> set:
    """External l^inf cube boundary of ``eta`` relative to a cube-aligned ``B``.

    Returns the set of half-integer centres ``z`` of cubes in ``B``, outside the
    cover of ``eta``, that touch the cover of ``eta`` within ``B``.
    """
    sites = _check_aligned(B)
    return {corner_to_centre(k) for k in _delta_corners(eta, B, sites)}


def plus_and_double_boundary(eta, B: Region):
    """Return ``(eta_plus, delta2, eta_plusplus)`` relative to ``B``.

    ``eta_plus`` and ``eta_plusplus`` are returned as their cube covers (the
    only form in which they are used downstream), clipped to ``B``.
    """
    sites = _check_aligned(B)
    d = B.dim
    inner = _cover_corners(_restrict(eta, B)) & sites
    delta1 = _delta_corners(eta, B, sites)
    plus = CubeUnion(corners=inner | delta1, dim=d)
    delta2 = _delta_corners(plus, B, sites)
    plusplus = CubeUnion(corners=plus.corners | delta2, dim=d)
    return plus, {corner_to_centre(k) for k in delta2}, plusplus


# ---------------------------------------------------------------- T-regions

T_VARIANTS = ("T", "T2", "T3", "T5", "T6")


def sgn(x: float) -> int:
    """Sign with ``sgn(0) = 1``."""
    return -1 if x < 0 else 1


def steered_region(axis: int, n: int, depth: float, anchor, signs):
    """Box and face of a slab beyond the ``axis`` face of ``Lambda_n(anchor)``.

    For every other coordinate ``j`` the slab spans ``[-n, 0]`` when
    ``signs[j] == 1`` and ``[0, n]`` when ``signs[j] == -1`` (relative to the
    anchor), i.e. the face set is ``0 > signs[j] * x_j > -n``.
    """
    anchor = np.asarray(anchor, dtype=float)
    d = len(anchor)
    if n <= 0 or depth <= 0:
        raise GeometryError("n and m must be positive")
    if np.any(anchor != np.round(anchor)):
        raise GeometryError("T-regions are anchored at integer points")
    lo = np.empty(d)
    hi = np.empty(d)
    face_ranges = []
    for j in range(d):
        if j == axis:
            lo[j], hi[j] = n, n + depth
            face_ranges.append((n - 1,))
        elif signs[j] == 1:
            lo[j], hi[j] = -n, 0
            face_ranges.append(range(-n, 0))
        else:
            lo[j], hi[j] = 0, n
            face_ranges.append(range(0, n))
    a = anchor.astype(np.int64)
    face = frozenset(tuple(int(k + o) + 0.5 for k, o in zip(corner, a))
                     for corner in product(*face_ranges))
    return Box(tuple(lo + anchor), tuple(hi + anchor)), face


def t_region(variant: str, n: int, m: float, anchor=None, signs=None, d: int | None = None):
    """The slab ``anchor + T_variant(n, m)`` together with its face set.

    ``T`` and ``T2`` extend across the first/second coordinate face of
    ``Lambda_n`` over the positive orthant, ``T3`` over the negative orthant,
    and ``T5``/``T6`` are steered by ``signs`` (default: signs of the anchor
    coordinates, with ``sgn(0) = 1``).  ``T6`` always extends to the right in
    the first coordinate.
    """
    if variant not in T_VARIANTS:
        raise GeometryError(f"unknown T-region variant {variant!r}")
    if not (isinstance(n, (int, np.integer)) and n > 0) or not m > 0:
        raise GeometryError("n and m must be positive (n an integer)")
    if anchor is None:
        if d is None:
            raise GeometryError("give an anchor or a dimension")
        anchor = np.zeros(d)
    anchor = np.asarray(anchor, dtype=float)
    d = len(anchor)
    if signs is None:
        signs = [sgn(v) for v in anchor]
    signs = list(signs)
    s = [0] * d
    if variant == "T":
        axis, s = 0, [-1] * d
    elif variant == "T2":
        axis, s = 1, [-1] * d
    elif variant == "T3":
        axis, s = 0, [1] * d
    elif variant == "T5":
        axis, s = 0, signs
    else:
        axis = 1
        s = [-1] + [0] + signs[2:] if d > 2 else [-1, 0]
    return steered_region(axis, int(n), m, anchor, s)


def site_and_bond_boxes(i: int, j: int, N: float, d: int = 2):
    """Site box ``B_(i,j)`` and its right and upper bond-boxes."""
    if N <= 0:
        raise GeometryError("N must be positive")
    c = np.zeros(d)
    c[0], c[1] = 4 * N * i, 4 * N * j
    right = c.copy()
    right[0] += 2 * N
    up = c.copy()
    up[1] += 2 * N
    return Box.centered(c, N), Box.centered(right, N), Box.centered(up, N)


def sites_within(region: Region) -> list:
    """Sorted half-integer centres of the cubes of a cube-aligned region."""
    return [corner_to_centre(k) for k in sorted(_check_aligned(region))]


def linf_dist_to_cube(points, centre) -> np.ndarray:
    x = _as_points(points)
    return np.max(np.maximum(np.abs(x - np.asarray(centre)) - 0.5, 0.0), axis=1)


def as_centres(corners: Iterable[Sequence[int]]) -> set:
    return {corner_to_centre(k) for k in corners}
