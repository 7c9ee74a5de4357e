"""Random connection graphs, their components and connectivity queries."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .connection import ConnectionFunction
from .geometry import L2, Box, Norm, Region, cube_cover, lam, lattice_sites
from .point_process import PointSet, superpose
from .rng import as_stream


@dataclass(eq=False)
class Graph:
    """Sampled graph on a point set.

    ``edges`` holds local vertex indices ``(a, b)`` with ``a < b``, sorted.
    """

    vertices: PointSet
    edges: np.ndarray
    phi: ConnectionFunction | None = None
    norm: Norm = L2
    key: int = 0
    dist: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edge_ids(self) -> np.ndarray:
        ids = self.vertices.ids
        pairs = np.sort(ids[self.edges], axis=1) if len(self.edges) else np.empty((0, 2), np.int64)
        return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))] if len(pairs) else pairs

    def edge_set(self) -> set:
        return set(map(tuple, self.edge_ids().tolist()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id_a", "id_b"])
            w.writerows(self.edge_ids().tolist())

    @staticmethod
    def read_edges(path) -> set:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        return {(int(a), int(b)) for a, b in rows}

    def subgraph(self, mask) -> "Graph":
        """Induced subgraph on the vertices selected by a boolean mask."""
        mask = np.asarray(mask, dtype=bool)
        new = -np.ones(self.n, dtype=np.int64)
        new[mask] = np.arange(mask.sum())
        keep = mask[self.edges[:, 0]] & mask[self.edges[:, 1]] if len(self.edges) else np.zeros(0, bool)
        e = new[self.edges[keep]] if len(self.edges) else self.edges
        d = self.dist[keep] if self.dist is not None and len(self.edges) else self.dist
        return Graph(self.vertices.subset(mask), e.reshape(-1, 2), self.phi, self.norm, self.key, d)


def sample_edges(coords, ids, phi: ConnectionFunction, norm: Norm, key: int):
    """Edge list ``(a, b, dist)`` of the random connection graph on the coordinates.

    Each candidate pair within range keeps its edge when the pair coin
    ``unit(fold(fold(key, min_id), max_id))`` falls below ``phi(dist)``.
    """
    i, j, dist = _kernels.candidate_pairs(coords, phi.range, norm.p)
    if len(i) == 0:
        return np.empty((0, 2), np.int64), dist
    u = _kernels.pair_uniforms(np.uint64(key), ids[i], ids[j])
    keep = u < phi(dist)
    return np.stack([i[keep], j[keep]], axis=1), dist[keep]


def build_graph(points: PointSet, phi: ConnectionFunction, norm: Norm = L2, stream=0) -> Graph:
    """Sample the random connection graph ``G(points, phi)``.

    The coin of a pair depends only on the stream key and the two ids, so the
    graph does not depend on the order in which vertices are listed, and the
    graph of a subset is the induced subgraph.
    """
    key = as_stream(stream).key
    edges, dist = sample_edges(points.coords, points.ids, phi, norm, key)
    return Graph(points, edges, phi, norm, key, dist)


class ClusterDecomposition:
    """Partition of the vertex set of a graph into connected components.

    Components are numbered ``0, 1, ...`` in decreasing order of size (ties by
    smallest member id).
    """

    def __init__(self, graph: Graph):
        self.graph = graph
        n = graph.n
        ids = graph.vertices.ids
        if n == 0:
            self.labels = np.empty(0, np.int64)
            self.sizes = np.empty(0, np.int64)
            self._index = {}
            return
        roots = _kernels.union_find(n, graph.edges[:, 0].copy(), graph.edges[:, 1].copy())
        uniq, inv = np.unique(roots, return_inverse=True)
        sizes = np.bincount(inv)
        first = np.full(len(uniq), np.iinfo(np.int64).max)
        np.minimum.at(first, inv, ids)
        order = np.lexsort((first, -sizes))
        rank = np.empty(len(order), np.int64)
        rank[order] = np.arange(len(order))
        self.labels = rank[inv]
        self.sizes = sizes[order]
        self._index = None

    def _pos(self, vid: int) -> int:
        if self._index is None:
            self._index = {v: k for k, v in enumerate(self.graph.vertices.ids.tolist())}
        try:
            return self._index[int(vid)]
        except KeyError:
            raise KeyError(f"unknown vertex id {vid}") from None

    def __len__(self):
        return len(self.sizes)

    def component_of(self, vid: int) -> int:
        return int(self.labels[self._pos(vid)])

    def same_component(self, a: int, b: int) -> bool:
        return self.component_of(a) == self.component_of(b)

    def members(self, label: int) -> np.ndarray:
        return self.graph.vertices.ids[self.labels == label]

    def cluster_of(self, vid: int) -> PointSet:
        return self.graph.vertices.subset(self.labels == self.component_of(vid))

    def L(self, j: int) -> int:
        """Order of the ``j``-th largest component (0 if there are fewer)."""
        if j < 1:
            raise ValueError("j must be >= 1")
        return int(self.sizes[j - 1]) if j <= len(self.sizes) else 0


def components(g: Graph) -> ClusterDecomposition:
    return ClusterDecomposition(g)


def _labels_touching(cd: ClusterDecomposition, mask) -> np.ndarray:
    return np.unique(cd.labels[np.asarray(mask, dtype=bool)])


def set_cluster(Y: PointSet, X: PointSet, phi: ConnectionFunction, norm: Norm = L2,
                stream=0) -> PointSet:
    """Union of the components of the points of ``Y`` in ``G(X u Y)``."""
    if len(Y) == 0:
        return Y
    if len(X):
        overlap = np.isin(X.ids, Y.ids)
        X = X.subset(~overlap)
    both = superpose(Y, X)
    if len(both) != len(Y) + len(X):
        raise ValueError("point ids of X and Y must be distinct")
    g = build_graph(both, phi, norm, stream)
    cd = components(g)
    is_y = np.zeros(len(both), bool)
    is_y[:len(Y)] = True
    hit = _labels_touching(cd, is_y)
    return both.subset(np.isin(cd.labels, hit))


def occupies_all_subcubes(points: PointSet, box: Box) -> bool:
    """True iff every unit subcube of an integer-aligned box holds a point."""
    need = lattice_sites(box)
    if len(points) == 0:
        return not need
    have = cube_cover(points.restrict(box), dim=box.dim).corners
    return need <= have


def is_seed(x, m: int, sample: PointSet, phi: ConnectionFunction, norm: Norm = L2,
            stream=0) -> bool:
    """Whether ``Lambda_m(x)`` is a seed for the sample.

    Every unit subcube must contain a sample point and the sampled graph on
    the points in the box must be connected.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    x = np.asarray(x, dtype=float)
    if np.any(x != np.round(x)):
        raise ValueError("seeds are centred on integer points")
    box = lam(m, len(x), x)
    inside = sample.restrict(box)
    if len(inside) == 0 or not occupies_all_subcubes(inside, box):
        return False
    return len(components(build_graph(inside, phi, norm, stream))) == 1


def connected_query(A: Region, B: Region, g: Graph) -> bool:
    """``A <-> B`` in ``g``: some vertex in A shares a component with one in B."""
    if g.n == 0:
        return False
    in_a = A.contains(g.vertices.coords)
    in_b = B.contains(g.vertices.coords)
    if not in_a.any() or not in_b.any():
        return False
    if np.any(in_a & in_b):
        return True
    cd = components(g)
    return bool(np.intersect1d(cd.labels[in_a], cd.labels[in_b]).size)


def reaches(points: PointSet, start, target, phi: ConnectionFunction, norm: Norm = L2,
            stream=0, cap: int | None = None):
    """Whether a ``start`` vertex is joined to a ``target`` vertex in ``G(points)``.

    The search stops at the first target vertex (or once more than ``cap``
    vertices are found), so supercritical connection queries touch only a
    small part of the sample.  Returns ``(hit, visited)``.
    """
    key = as_stream(stream).key
    return _kernels.reach_search(points.coords, points.ids, key, phi.arrays(), norm.p,
                                 phi.range, start, target, cap)
