import math

import numpy as np
import pytest

from oracles import bfs_sizes, csgraph_labels, pair_scan, random_connection_edges
from rcmlab import _kernels
from rcmlab.connection import ConnectionFunction, ConnectionFunctionError, parse_phi
from rcmlab.geometry import L2, LINF, Box, lam
from rcmlab.graph import (Graph, build_graph, components, connected_query, is_seed, reaches,
                          set_cluster)
from rcmlab.point_process import PointSet, sample_homogeneous
from rcmlab.rng import Stream

IND = ConnectionFunction.indicator(1.0)


def two_points(r):
    return PointSet.from_coords(np.array([[0.0, 0.0], [r, 0.0]]))


def test_connection_functions():
    assert IND(1.0) == 1 and IND(1.0 + 1e-12) == 0
    f = ConnectionFunction.step([(0.5, 1.0), (1.0, 0.25)])
    assert f.range == 1.0 and f(0.7) == 0.25
    g = ConnectionFunction.truncated_exponential(2.0, 1.5)
    assert g(1.0) == pytest.approx(math.exp(-2)) and g(1.6) == 0
    t = ConnectionFunction.table([0, 1, 2], [1, 0.5, 0])
    assert t(1.5) == pytest.approx(0.25) and t.range == 2
    assert f.scaled(2).range == 2.0 and f.scaled(2)(1.4) == 0.25
    assert IND.integral(2) == pytest.approx(math.pi, rel=1e-3)
    assert parse_phi("indicator:2")(2.0) == 1
    with pytest.raises(ConnectionFunctionError):
        ConnectionFunction.step([(1.0, 0.2), (2.0, 0.5)])
    with pytest.raises(ConnectionFunctionError):
        ConnectionFunction.table([0, 1], [1.2, 0])


def test_phi_table_file(tmp_path):
    p = tmp_path / "phi.csv"
    p.write_text("r,phi\n0,1\n1,0.5\n2,0\n")
    f = ConnectionFunction.from_file(p)
    assert f(0.5) == pytest.approx(0.75)


def test_deterministic_edges():
    for seed in range(20):
        assert len(build_graph(two_points(0.5), IND, stream=seed).edges) == 1
        assert len(build_graph(two_points(1.5), IND, stream=seed).edges) == 0


def test_edge_frequency():
    half = ConnectionFunction.step([(1.0, 0.5)])
    hits = sum(len(build_graph(two_points(0.7), half, stream=s).edges) for s in range(10_000))
    assert abs(hits / 10_000 - 0.5) < 4 * math.sqrt(0.25 / 10_000)


@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_cell_list_matches_pair_scan(p):
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = rng.integers(0, 25)
        d = rng.integers(1, 4)
        x = rng.uniform(0, 3, (n, d))
        R = rng.uniform(0.2, 1.5)
        i, j, _ = _kernels.candidate_pairs(x, R, p)
        got = {(min(a, b), max(a, b)) for a, b in zip(i.tolist(), j.tolist())}
        assert got == pair_scan(x, R, p)


def test_components_examples():
    one = Graph(PointSet.from_coords(np.zeros((1, 2))), np.empty((0, 2), np.int64))
    cd = components(one)
    assert cd.L(1) == 1 and cd.L(2) == 0
    three = Graph(PointSet.from_coords(np.zeros((3, 2))), np.array([[0, 1], [1, 2]]))
    assert components(three).L(1) == 3
    with pytest.raises(KeyError):
        components(three).component_of(99)


def test_components_match_bfs():
    rng = np.random.default_rng(2)
    for _ in range(100):
        n = 50
        edges = set()
        for _ in range(rng.integers(0, 60)):
            a, b = sorted(rng.choice(n, 2, replace=False).tolist())
            edges.add((a, b))
        e = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
        cd = components(Graph(PointSet.from_coords(np.zeros((n, 2))), e))
        assert cd.sizes.tolist() == bfs_sizes(n, edges)
        assert cd.sizes.sum() == n
        assert all(a >= b for a, b in zip(cd.sizes, cd.sizes[1:]))
        lab = csgraph_labels(n, edges)
        for a in range(0, n, 7):
            for b in range(0, n, 5):
                assert cd.same_component(a + 1, b + 1) == (lab[a] == lab[b])


def test_edge_order_independence_and_subgraph():
    x = sample_homogeneous(3, lam(3, 2), Stream.root(1))
    g = build_graph(x, IND, stream=5)
    perm = np.random.default_rng(0).permutation(len(x))
    h = build_graph(PointSet(x.ids[perm], x.coords[perm]), IND, stream=5)
    assert g.edge_set() == h.edge_set()
    mask = x.coords[:, 0] > 0
    sub = build_graph(x.subset(mask), IND, stream=5)
    assert sub.edge_set() == g.subgraph(mask).edge_set()


def test_phi_monotone_coupling():
    x = sample_homogeneous(2, lam(4, 2), Stream.root(3))
    lo = ConnectionFunction.step([(0.8, 0.4), (1.2, 0.2)])
    hi = ConnectionFunction.step([(0.8, 0.9), (1.2, 0.5)])
    for s in range(20):
        a, b = build_graph(x, lo, stream=s), build_graph(x, hi, stream=s)
        assert a.edge_set() <= b.edge_set()
        assert components(a).L(1) <= components(b).L(1)


def test_graph_csv(tmp_path):
    g = build_graph(sample_homogeneous(3, lam(2, 2), Stream.root(2)), IND)
    g.to_csv(tmp_path / "e.csv")
    assert Graph.read_edges(tmp_path / "e.csv") == g.edge_set()


def test_set_cluster():
    Y = PointSet(np.array([100]), np.array([[0.0, 0.0]]))
    assert len(set_cluster(PointSet.empty(2), Y, IND)) == 0
    assert set_cluster(Y, PointSet.empty(2), IND).id_set() == {100}
    chain = PointSet.from_coords(np.array([[0.9 * k, 0.0] for k in range(1, 8)] + [[20.0, 0]]))
    got = set_cluster(Y, chain, IND)
    assert got.id_set() == {100} | set(range(1, 8))


def test_is_seed():
    assert not is_seed((0, 0), 1, PointSet.empty(2), IND)
    three = PointSet.from_coords(np.array([[-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5]]))
    assert not is_seed((0, 0), 1, three, IND)
    four = PointSet.from_coords(np.array([[-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5], [0.5, 0.5]]))
    assert is_seed((0, 0), 1, four, IND)
    with pytest.raises(ValueError):
        is_seed((0, 0), 0, four, IND)


def oracle_seed_probability(lam_, reps, rng):
    hits = 0
    for _ in range(reps):
        n = rng.poisson(lam_ * 4)
        x = rng.uniform(-1, 1, (n, 2))
        quads = {(a >= 0, b >= 0) for a, b in x}
        if len(quads) < 4:
            continue
        edges = random_connection_edges(x, IND, rng)
        if len(bfs_sizes(n, edges)) == 1:
            hits += 1
    return hits / reps


def test_seed_probability_matches_rejection_oracle():
    reps = 3000
    mine = np.mean([is_seed((0, 0), 1, sample_homogeneous(3, lam(1, 2), Stream.root(4).child(r)),
                            IND, stream=Stream.root(5).child(r)) for r in range(reps)])
    other = oracle_seed_probability(3, reps, np.random.default_rng(6))
    se = math.sqrt((mine * (1 - mine) + other * (1 - other)) / reps)
    assert abs(mine - other) < 3 * se


def test_connected_query():
    x = PointSet.from_coords(np.array([[0.0, 0], [0.8, 0], [5.0, 0], [5.8, 0]]))
    g = build_graph(x, IND)
    A, B, C = Box((-0.1, -1), (0.1, 1)), Box((0.7, -1), (0.9, 1)), Box((5.7, -1), (6, 1))
    assert connected_query(A, B, g)
    assert not connected_query(A, C, g)
    assert connected_query(A, A, g)
    empty = build_graph(PointSet.empty(2), IND)
    assert not connected_query(A, B, empty)


@pytest.mark.parametrize("norm", [L2, LINF])
def test_reaches_matches_components(norm):
    phis = [IND, ConnectionFunction.step([(0.8, 0.9), (1.3, 0.3)]),
            ConnectionFunction.truncated_exponential(1.0, 1.4),
            ConnectionFunction.table([0, 0.5, 1.2], [1, 0.6, 0])]
    for r in range(40):
        phi = phis[r % len(phis)]
        x = sample_homogeneous(1.4, Box((0, 0), (8, 4)), Stream.root(r))
        if len(x) == 0:
            continue
        start = x.coords[:, 0] < 1
        target = x.coords[:, 0] > 7
        hit, _ = reaches(x, start, target, phi, norm, stream=r)
        cd = components(build_graph(x, phi, norm, stream=r))
        want = bool(np.intersect1d(cd.labels[start], cd.labels[target]).size)
        assert hit == want
