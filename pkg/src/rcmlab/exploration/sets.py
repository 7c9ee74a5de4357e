"""Random lattice sets built from connectivity: V, U, K and bridge events."""
from __future__ import annotations

import math

import numpy as np

from ..connection import ConnectionFunction
from ..geometry import (L2, CubeUnion, Norm, Region, _check_aligned, _cover_corners,
                        _delta_corners, centre_to_corner, corner_to_centre, lam, t_region)
from ..graph import build_graph, components
from ..point_process import PointSet
from ..rng import as_stream, fold_array, unit_array


def _labels_in(cd, mask):
    return set(np.unique(cd.labels[mask]).tolist())


def v_set(m: int, k: int, sample: PointSet, phi: ConnectionFunction, norm: Norm = L2,
          stream=0) -> set:
    """Face sites of ``Lambda_k`` joined to ``Lambda_m`` inside ``Lambda_k``.

    ``V(m, k) = {x in T(k) : Lambda_m <-> Lambda_{1/2}(x) in G(sample n Lambda_k)}``.
    """
    if not 1 <= m < k:
        raise ValueError("need k > m >= 1")
    d = sample.dim
    pts = sample.restrict(lam(k, d))
    _, face = t_region("T", k, 1, d=d)
    if len(pts) == 0:
        return set()
    cd = components(build_graph(pts, phi, norm, stream))
    start = _labels_in(cd, lam(m, d).contains(pts.coords))
    if not start:
        return set()
    good = np.isin(cd.labels, list(start))
    sub = pts.coords[good]
    # only points with x_1 >= k - 1 can sit in a face cube
    sub = sub[sub[:, 0] >= k - 1]
    return {z for z in face if np.any(np.all(np.abs(sub - np.asarray(z)) <= 0.5, axis=1))}


def u_set(R: Region, B: Region, K_cubes, sample: PointSet, phi: ConnectionFunction,
          norm: Norm = L2, stream=0) -> set:
    """Boundary sites of ``R`` in ``B`` that reach the cover of ``K`` avoiding ``R``.

    ``U = {z in Delta(R; B) : cube(z) <-> cover(K) in G(sample n B minus cover(R))}``.
    ``K`` must share no cube with ``R^+_B``.
    """
    sites = _check_aligned(B)
    d = B.dim
    k_corners = {centre_to_corner(z) for z in K_cubes} if not isinstance(K_cubes, CubeUnion) \
        else set(K_cubes.corners)
    inner = _cover_corners(_restrict_region(R, B)) & sites
    delta = _delta_corners(R, B, sites)
    if k_corners & (inner | delta):
        raise ValueError("K must be disjoint from the cubes of R+ in B")
    if not k_corners or not delta:
        return set()
    r_cover = CubeUnion(corners=_cover_corners(R), dim=d)
    pts = sample.restrict(B)
    if len(pts):
        pts = pts.subset(~r_cover.contains(pts.coords))
    if len(pts) == 0:
        return set()
    cd = components(build_graph(pts, phi, norm, stream))
    k_union = CubeUnion(corners=k_corners, dim=d)
    targets = _labels_in(cd, k_union.contains(pts.coords))
    if not targets:
        return set()
    good = pts.coords[np.isin(cd.labels, list(targets))]
    out = set()
    for c in delta:
        z = np.asarray(corner_to_centre(c))
        if np.any(np.all(np.abs(good - z) <= 0.5, axis=1)):
            out.add(tuple(z.tolist()))
    return out


def _restrict_region(R, B):
    if isinstance(R, Region):
        return R & B
    return R


def block_index(z, m: int, origin=None) -> tuple:
    """Index of the side-``2m`` block holding ``z + e_1`` (blocks tile from ``origin``)."""
    z = np.asarray(z, dtype=float)
    o = np.zeros(len(z)) if origin is None else np.asarray(origin, dtype=float)
    shifted = z.copy()
    shifted[0] += 1.0
    return tuple(int(v) for v in np.floor((shifted - o) / (2 * m))[1:])


def k_set(face, eps3: float, seed_indicators, stream, m: int | None = None,
          block_of=None) -> set:
    """``{z in face : J_z = 1 and the block of z is a seed}`` with ``J_z ~ Bernoulli(eps3)``.

    ``seed_indicators`` maps block indices to booleans; the block of ``z`` is
    ``block_of(z)`` or, given ``m``, :func:`block_index`.
    """
    if not 0.0 <= eps3 <= 1.0:
        raise ValueError("eps3 must lie in [0, 1]")
    if block_of is None:
        if m is None:
            raise ValueError("give m or block_of")
        block_of = lambda z: block_index(z, m)  # noqa: E731
    face = sorted(face)
    if not face:
        return set()
    key = np.uint64(as_stream(stream).key)
    corners = np.array([centre_to_corner(z) for z in face], dtype=np.int64)
    h = np.full(len(face), key, dtype=np.uint64)
    for a in range(corners.shape[1]):
        h = fold_array(h, corners[:, a])
    J = unit_array(h) < eps3
    return {z for z, j in zip(face, J) if j and seed_indicators.get(block_of(z), False)}


def subcube_centres(centre, half_width: float, side: float):
    """Centres of the subcubes of side ``side`` tiling ``Lambda_half_width(centre)``."""
    per = int(round(2 * half_width / side))
    if not math.isclose(per * side, 2 * half_width):
        raise ValueError("the side must divide the box")
    c = np.asarray(centre, dtype=float)
    offs = (np.arange(per) + 0.5) * side - half_width
    g = np.stack(np.meshgrid(*([offs] * len(c)), indexing="ij"), axis=-1).reshape(-1, len(c))
    return c + g, per


def _subcube_of(x, centre, half_width, side, per):
    idx = np.floor((np.asarray(x) - np.asarray(centre) + half_width) / side).astype(int)
    return np.clip(idx, 0, per - 1)


_ATTACH_ID = 1 << 62


def bridge_event(center, xi_point, eta_point, sprinkle: PointSet, phi: ConnectionFunction,
                 norm: Norm = L2, stream=0, half_width: float = 2.5,
                 subcube_side: float | None = None) -> bool:
    """Whether the sprinkle points build a bridge inside ``Lambda_half_width(center)``.

    The event holds iff (i) each subcube of side ``subcube_side`` (default
    ``1/(2d)``) holds exactly one sprinkle point, (ii) the graph on those points
    is connected, and the two attachment points ``xi_point`` and
    ``eta_point`` are each joined to the sprinkle point of their own subcube.
    """
    if xi_point is None or eta_point is None:
        raise ValueError("both attachment points are required")
    c = np.asarray(center, dtype=float)
    d = len(c)
    side = 1.0 / (2 * d) if subcube_side is None else float(subcube_side)
    box = lam(half_width, d, c)
    pts = sprinkle.restrict(box) if len(sprinkle) else sprinkle
    _, per = subcube_centres(c, half_width, side)
    if len(pts) != per ** d:
        return False
    cells = _subcube_of(pts.coords, c, half_width, side, per)
    flat = np.ravel_multi_index(cells.T, (per,) * d)
    if len(np.unique(flat)) != per ** d:
        return False
    a = np.asarray(xi_point, dtype=float).reshape(1, d)
    b = np.asarray(eta_point, dtype=float).reshape(1, d)
    for p in (a, b):
        if not box.contains(p)[0]:
            return False
    extra = PointSet(np.array([_ATTACH_ID, _ATTACH_ID + 1]), np.vstack([a, b]))
    allp = PointSet(np.concatenate([pts.ids, extra.ids]), np.vstack([pts.coords, extra.coords]))
    g = build_graph(allp, phi, norm, stream)
    n = len(pts)
    # connectivity of the sprinkle graph alone
    inner = g.subgraph(np.arange(n + 2) < n)
    if len(components(inner)) != 1:
        return False
    edges = {tuple(e) for e in g.edges.tolist()}
    for k, p in enumerate((a, b)):
        home = int(np.ravel_multi_index(_subcube_of(p, c, half_width, side, per).T,
                                        (per,) * d)[0])
        j = int(np.nonzero(flat == home)[0][0])
        if (j, n + k) not in edges:
            return False
    return True
