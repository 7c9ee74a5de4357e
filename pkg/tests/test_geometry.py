import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcmlab.geometry import (L2, LINF, Box, CubeUnion, Difference, GeometryError, Norm, Slab,
                             cube_cover, delta_boundary, distance, lam, plus_and_double_boundary,
                             sgn, site_and_bond_boxes, sites_within, t_region)


def brute_cover(points, d):
    """Cube centres whose closed cube contains a point, by scanning a lattice window."""
    out = set()
    for x in points:
        base = np.floor(x).astype(int)
        for off in product(range(-2, 3), repeat=d):
            k = base + np.array(off)
            # integer corners keep the comparison exact
            if np.all((k <= x) & (x <= k + 1)):
                out.add(tuple(float(v) + 0.5 for v in k))
    return out


def linf(a, b):
    return max(abs(x - y) for x, y in zip(a, b))


def test_distance_examples():
    assert distance((1.0, 2.0), (1.0, 2.0)) == 0
    assert distance((0, 0), (3, 4), L2) == pytest.approx(5)
    assert distance((0, 0), (3, 4), LINF) == pytest.approx(4)
    assert distance((0, 0), (3, 4), Norm(1)) == pytest.approx(7)
    with pytest.raises(GeometryError):
        distance((0, 0), (0, 0, 0))
    with pytest.raises(GeometryError):
        Norm(0.5)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.sampled_from([1.0, 2.0, 3.0, math.inf]))
def test_distance_symmetric(a, b, p):
    n = Norm(p)
    assert distance(a, b, n) == pytest.approx(distance(b, a, n))
    assert distance(a, b, n) >= 0


def test_cube_cover_examples():
    assert len(cube_cover(np.zeros((0, 2)), 2)) == 0
    assert cube_cover(np.array([[0.2, 0.3]])).centres == {(0.5, 0.5)}
    assert cube_cover(np.array([[1.0, 0.5]])).centres == {(0.5, 0.5), (1.5, 0.5)}
    assert len(cube_cover(np.array([[1.0, 1.0]]))) == 4


@settings(max_examples=60)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=8),
       st.booleans())
def test_cube_cover_matches_brute_force(pts, snap):
    x = np.array(pts)
    if snap:
        x = np.round(x * 2) / 2
    assert cube_cover(x).centres == brute_cover(x, 2)


@settings(max_examples=40)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=2, max_size=8))
def test_cube_cover_monotone_and_idempotent(pts):
    x = np.array(pts)
    small, big = cube_cover(x[:1]), cube_cover(x)
    assert small.corners <= big.corners
    assert cube_cover(big) == big


def test_cube_cover_of_box():
    assert cube_cover(lam(1, 2)).centres == {(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)}
    assert sites_within(lam(2, 3)).__len__() == 64


def test_delta_boundary_examples():
    B = lam(2, 2)
    assert delta_boundary(np.zeros((0, 2)), B) == set()
    assert delta_boundary(np.array([[10.2, 10.3]]), B) == set()
    eta = Box.centered((0.5, 0.5), 0.5)
    got = delta_boundary(eta, B)
    want = {z for z in product(np.arange(-1.5, 2, 1.0), repeat=2)
            if linf(z, (0.5, 0.5)) == 1}
    assert got == want and len(got) == 8
    with pytest.raises(GeometryError):
        delta_boundary(eta, Box((0, 0), (1.5, 1)))


def test_delta_boundary_clipped_by_B():
    eta = Box.centered((1.5, 1.5), 0.5)
    got = delta_boundary(eta, lam(2, 2))
    assert got == {(0.5, 0.5), (0.5, 1.5), (1.5, 0.5)}


def test_double_boundary_examples():
    B = lam(4, 2)
    empty = plus_and_double_boundary(np.zeros((0, 2)), B)
    assert len(empty[0]) == 0 and empty[1] == set() and len(empty[2]) == 0
    eta = Box.centered((0.5, 0.5), 0.5)
    plus, d2, pp = plus_and_double_boundary(eta, B)
    sites = set(product(np.arange(-3.5, 4, 1.0), repeat=2))
    assert d2 == {z for z in sites if linf(z, (0.5, 0.5)) == 2}
    assert plus.centres == {z for z in sites if linf(z, (0.5, 0.5)) <= 1}
    assert pp.centres == {z for z in sites if linf(z, (0.5, 0.5)) <= 2}
    big = lam(6, 2)
    plus, d2, pp = plus_and_double_boundary(big, B)
    assert d2 == set() and plus == pp == cube_cover(B)


@settings(max_examples=40)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=6))
def test_boundary_invariants(pts):
    x = np.array(pts)
    B = lam(3, 2)
    cover_B = cube_cover(B).centres
    cov = cube_cover(x).centres
    db = delta_boundary(x, B)
    assert db <= cover_B and not (db & cov)
    plus, d2, pp = plus_and_double_boundary(x, B)
    assert plus.corners <= pp.corners
    assert pp.centres <= cover_B
    assert not (d2 & plus.centres)


def test_t_region_examples():
    box, face = t_region("T", 2, 1, d=2)
    assert face == {(1.5, 0.5), (1.5, 1.5)}
    assert box == Box((2, 0), (3, 2))
    v = (4.0, -2.0, 6.0)
    box, face = t_region("T3", 3, 2, anchor=v)
    assert len(face) == 9
    for z in face:
        r = np.subtract(z, v)
        assert r[0] == 3 - 0.5
        assert all(-3 < r[j] < 0 for j in (1, 2))
    assert box == Box((7, -5, 3), (9, -2, 6))
    with pytest.raises(GeometryError):
        t_region("T", 0, 1, d=2)
    with pytest.raises(GeometryError):
        t_region("T9", 2, 1, d=2)


@pytest.mark.parametrize("variant", ["T", "T2", "T3", "T5", "T6"])
@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("n", [1, 2, 4])
def test_face_counts_and_face_beside_region(variant, d, n):
    anchor = np.array([-2, 3, 0][:d], dtype=float) * 4
    box, face = t_region(variant, n, 2, anchor=anchor)
    assert len(face) == n ** (d - 1)
    inner = Box.centered(anchor, n)
    pts = np.array(sorted(face))
    assert inner.contains(pts).all()
    # each face cube shares a face with the slab
    lo, hi = box.bounds()
    assert np.all(np.maximum(lo - (pts + 0.5), (pts - 0.5) - hi).max(axis=1) <= 0)


def test_steering_signs():
    assert sgn(0) == 1 and sgn(-0.1) == -1
    # anchor to the upper left: T5 slab covers [0, n] in x2 relative to the anchor
    box, _ = t_region("T5", 2, 1, anchor=(-4.0, -8.0))
    assert box == Box((-2, -8), (-1, -6))
    # T6 grows upward and always to the right in x1
    box, _ = t_region("T6", 2, 1, anchor=(4.0, 8.0))
    assert box == Box((4, 10), (6, 11))


def test_site_and_bond_boxes():
    N = 3.0
    s, r, u = site_and_bond_boxes(0, 0, N)
    assert s == lam(N, 2)
    s, r, u = site_and_bond_boxes(1, 0, N)
    assert np.allclose(s.center, (12, 0))
    assert np.allclose(r.center, (18, 0)) and np.allclose(u.center, (12, 6))
    s2, _, _ = site_and_bond_boxes(2, 0, N)
    # bond box sits between its two site boxes and touches each at a face
    assert r.lo[0] == s.hi[0] and r.hi[0] == s2.lo[0]
    assert Difference(r, s).volume() == pytest.approx(r.volume())
    s3, _, _ = site_and_bond_boxes(0, 1, N, d=3)
    assert np.allclose(s3.center, (0, 12, 0))


def test_region_volumes():
    assert lam(1.5, 3).volume() == pytest.approx(27)
    assert (lam(2, 2) - lam(1, 2)).volume() == pytest.approx(12)
    assert (lam(2, 3) & Slab(1.0, 3)).volume() == pytest.approx(16)
    assert not Slab(1.0, 3).bounded
    assert CubeUnion([(0.5, 0.5), (1.5, 0.5)]).contains(np.array([[2.0, 0.0], [2.1, 0]])).tolist() == [True, False]
