"""Homogeneous Poisson point processes on bounded regions.

Samples are produced count-then-place: a Poisson number of points placed
uniformly over the region's box decomposition.  Point ids are stable int64
values; id 0 is reserved for the added origin.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .geometry import GeometryError, Region, _as_points
from .rng import Stream, fold_array, tag, unit_array

ORIGIN_ID = 0


class SamplingError(ValueError):
    pass


@dataclass(eq=False)
class PointSet:
    """Finite set of points in R^d with unique integer ids."""

    ids: np.ndarray
    coords: np.ndarray
    region: Region | None = field(default=None, repr=False)

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        c = np.asarray(self.coords, dtype=float)
        if c.ndim == 1:
            c = c.reshape(len(self.ids), -1) if len(self.ids) else c.reshape(0, max(len(c), 1))
        self.coords = c
        if len(self.ids) != len(self.coords):
            raise SamplingError("ids and coords differ in length")

    @classmethod
    def empty(cls, d: int, region: Region | None = None) -> "PointSet":
        return cls(np.empty(0, dtype=np.int64), np.empty((0, d)), region)

    @classmethod
    def from_coords(cls, coords, first_id: int = 1, region=None) -> "PointSet":
        c = _as_points(coords) if len(np.asarray(coords)) else np.asarray(coords, float)
        return cls(np.arange(first_id, first_id + len(c)), c, region)

    @classmethod
    def origin(cls, d: int) -> "PointSet":
        return cls(np.array([ORIGIN_ID]), np.zeros((1, d)))

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return zip(self.ids.tolist(), map(tuple, self.coords.tolist()))

    def subset(self, mask) -> "PointSet":
        return PointSet(self.ids[mask], self.coords[mask], self.region)

    def restrict(self, region: Region) -> "PointSet":
        if len(self) == 0:
            return PointSet(self.ids, self.coords, region)
        return PointSet(self.ids[region.contains(self.coords)],
                        self.coords[region.contains(self.coords)], region)

    def with_origin(self) -> "PointSet":
        if np.any(self.ids == ORIGIN_ID):
            raise SamplingError("id 0 is reserved for the origin")
        return PointSet(np.concatenate([[ORIGIN_ID], self.ids]),
                        np.vstack([np.zeros((1, self.dim)), self.coords]), self.region)

    def id_set(self) -> set:
        return set(self.ids.tolist())

    def sorted(self) -> "PointSet":
        order = np.argsort(self.ids, kind="stable")
        return PointSet(self.ids[order], self.coords[order], self.region)

    # csv ----------------------------------------------------------------
    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id"] + [f"x{i + 1}" for i in range(self.dim)])
            for i, x in zip(self.ids.tolist(), self.coords.tolist()):
                w.writerow([i] + [format(v, ".17g") for v in x])

    @classmethod
    def from_csv(cls, path) -> "PointSet":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        d = len(header) - 1
        if header[0] != "id" or d < 1:
            raise SamplingError("expected header id,x1,...,xd")
        ids = np.array([int(r[0]) for r in body], dtype=np.int64)
        coords = np.array([[float(v) for v in r[1:]] for r in body], dtype=float).reshape(-1, d)
        return cls(ids, coords)


def _check_intensity(intensity):
    if not np.isfinite(intensity) or intensity < 0:
        raise SamplingError(f"intensity must be finite and nonnegative, got {intensity}")


def _place(rng: np.random.Generator, count: int, region: Region) -> np.ndarray:
    boxes = region.boxes()
    vols = np.array([float(np.prod(hi - lo)) for lo, hi in boxes])
    d = region.dim
    if count == 0 or vols.sum() == 0:
        return np.empty((0, d))
    if len(boxes) == 1:
        lo, hi = boxes[0]
        return lo + rng.random((count, d)) * (hi - lo)
    per_box = rng.multinomial(count, vols / vols.sum())
    out = [lo + rng.random((k, d)) * (hi - lo) for (lo, hi), k in zip(boxes, per_box) if k]
    return np.vstack(out)


def sample_homogeneous(intensity: float, region: Region, stream: Stream,
                       first_id: int = 1) -> PointSet:
    """Poisson process of the given intensity restricted to a bounded region."""
    _check_intensity(intensity)
    try:
        region.bounds()
    except GeometryError:
        raise SamplingError("sampling needs a bounded region") from None
    rng = stream.generator()
    vol = region.volume()
    count = int(rng.poisson(intensity * vol)) if intensity > 0 else 0
    coords = _place(rng, count, region)
    return PointSet(np.arange(first_id, first_id + count, dtype=np.int64), coords, region)


def superpose(a: PointSet, b: PointSet) -> PointSet:
    """Union of two point sets; ``b`` is re-keyed if the id spaces collide."""
    if len(a) and len(b) and a.dim != b.dim:
        raise SamplingError("dimension mismatch")
    if len(a) == 0:
        return b
    if len(b) == 0:
        return a
    ids_b = b.ids
    if np.intersect1d(a.ids, ids_b).size:
        ids_b = ids_b - ids_b.min() + a.ids.max() + 1
    return PointSet(np.concatenate([a.ids, ids_b]), np.vstack([a.coords, b.coords]))


def thin(x: PointSet, retain, stream: Stream) -> PointSet:
    """Keep each point independently with probability ``retain(location)``.

    The coin of a point depends only on ``(stream, id)``, so thinning with a
    smaller retention function always yields a subset.
    """
    if len(x) == 0:
        return x
    if callable(retain):
        p = np.asarray(retain(x.coords), dtype=float)
        p = np.broadcast_to(p, (len(x),))
    else:
        p = np.full(len(x), float(retain))
    if np.any(p < 0) or np.any(p > 1):
        raise SamplingError("retention probabilities must lie in [0, 1]")
    u = unit_array(fold_array(np.uint64(stream.key), x.ids))
    return x.subset(u < p)


@dataclass(frozen=True)
class SprinkleDecomposition:
    """Split of intensity ``mu`` into ``lam`` plus ``k`` sprinkles of ``eps1``."""

    lam: float
    eps1: float
    k: int

    @property
    def mu(self) -> float:
        return self.lam + self.k * self.eps1


def sprinkle_decomposition(mu: float, lam: float, k: int = 40) -> SprinkleDecomposition:
    if k < 1:
        raise SamplingError("k must be >= 1")
    if lam < 0 or mu < lam:
        raise SamplingError("need mu >= lam >= 0")
    return SprinkleDecomposition(lam, (mu - lam) / k, k)


class LazyPoissonField:
    """A homogeneous Poisson process on all of R^d, realized cube by cube.

    The points of the unit cube with corner ``k`` are a pure function of
    ``(key, k)``, so any region can be queried in any order and the answers
    are mutually consistent.  Ids are 63-bit hashes of ``(key, k, index)``.
    """

    def __init__(self, intensity: float, d: int, stream: Stream):
        _check_intensity(intensity)
        self.intensity = float(intensity)
        self.d = d
        self.key = np.uint64(stream.key)
        self._cache: dict = {}
        if self.intensity > 0:
            kmax = int(self.intensity + 12 * np.sqrt(self.intensity) + 30)
            self._cdf = stats.poisson.cdf(np.arange(kmax + 1), self.intensity)
        else:
            self._cdf = np.ones(1)

    def _cube_keys(self, corners: np.ndarray) -> np.ndarray:
        h = np.full(len(corners), self.key, dtype=np.uint64)
        for a in range(self.d):
            h = fold_array(h, corners[:, a])
        return h

    def _realize(self, corners: np.ndarray):
        ck = self._cube_keys(corners)
        counts = np.searchsorted(self._cdf, unit_array(fold_array(ck, np.full(len(ck), -1))),
                                 side="right")
        owner = np.repeat(np.arange(len(ck)), counts)
        idx = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        pk = fold_array(ck[owner], idx)
        coords = corners[owner].astype(float)
        for a in range(self.d):
            coords[:, a] += unit_array(fold_array(pk, np.full(len(pk), a)))
        ids = (pk >> np.uint64(1)).astype(np.int64)
        ids[ids == ORIGIN_ID] = 1
        return owner, counts, ids, coords

    def cubes(self, corners) -> PointSet:
        """Points in the given unit cubes (``corners`` of shape (c, d))."""
        corners = np.asarray(corners, dtype=np.int64).reshape(-1, self.d)
        if len(corners) == 0 or self.intensity == 0:
            return PointSet.empty(self.d)
        todo = [i for i, k in enumerate(map(tuple, corners.tolist())) if k not in self._cache]
        if todo:
            owner, counts, ids, coords = self._realize(corners[todo])
            starts = np.cumsum(counts) - counts
            for t, i in enumerate(todo):
                s, c = starts[t], counts[t]
                self._cache[tuple(corners[i].tolist())] = (ids[s:s + c], coords[s:s + c])
        parts = [self._cache[k] for k in map(tuple, corners.tolist())]
        return PointSet(np.concatenate([p[0] for p in parts]), np.vstack([p[1] for p in parts]))

    def query(self, region: Region) -> PointSet:
        """Points of the field inside a bounded region."""
        lo, hi = region.bounds()
        ranges = [np.arange(int(np.floor(a)), int(np.ceil(b)) + (1 if b == np.ceil(b) else 0))
                  for a, b in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, self.d)
        pts = self.cubes(grid)
        if len(pts) == 0:
            return pts
        return pts.restrict(region)


def coupled_sample(intensity: float, region: Region, stream: Stream, layer: float = 1.0,
                   first_id: int = 1) -> PointSet:
    """Poisson sample built from marked layers so that intensities are nested.

    Layer ``k`` is a Poisson process of intensity ``layer`` on ``region`` whose
    points carry marks uniform on ``[k layer, (k + 1) layer)``; the sample at
    ``intensity`` keeps the marks below it.  With a shared stream the sample at
    a smaller intensity is therefore a subset (same ids) of the one at a larger
    intensity.
    """
    _check_intensity(intensity)
    if not layer > 0:
        raise SamplingError("layer must be positive")
    try:
        region.bounds()
    except GeometryError:
        raise SamplingError("sampling needs a bounded region") from None
    d = region.dim
    vol = region.volume()
    ids, coords = [], []
    for k in range(int(math.ceil(intensity / layer))):
        rng = stream.child(tag("layer"), k).generator()
        count = int(rng.poisson(layer * vol))
        xy = _place(rng, count, region)
        marks = (k + rng.random(count)) * layer
        keep = marks < intensity
        ids.append(first_id + (k << 32) + np.nonzero(keep)[0])
        coords.append(xy[keep])
    if not ids:
        return PointSet.empty(d, region)
    return PointSet(np.concatenate(ids).astype(np.int64), np.vstack(coords).reshape(-1, d), region)
