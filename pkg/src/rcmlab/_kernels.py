"""Compiled inner loops: cell-list pair search, pair coins and union-find."""
from __future__ import annotations

import numpy as np
from numba import njit

from .rng import GOLDEN, _M1, _M2

_GOLD = np.uint64(GOLDEN)
_MUL1 = np.uint64(_M1)
_MUL2 = np.uint64(_M2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


@njit(cache=True, inline="always")
def _mix(x):
    z = x + _GOLD
    z = (z ^ (z >> _S30)) * _MUL1
    z = (z ^ (z >> _S27)) * _MUL2
    return z ^ (z >> _S31)


@njit(cache=True)
def pair_uniforms(key, ida, idb):
    """``unit(fold(fold(key, min_id), max_id))`` for each pair."""
    n = ida.shape[0]
    out = np.empty(n, dtype=np.float64)
    k = np.uint64(key)
    for t in range(n):
        a, b = ida[t], idb[t]
        if b < a:
            a, b = b, a
        h = _mix(k ^ _mix(np.uint64(a)))
        h = _mix(h ^ _mix(np.uint64(b)))
        out[t] = np.float64(h >> _S11) * (1.0 / 9007199254740992.0)
    return out


@njit(cache=True)
def _norm(x, i, j, p):
    d = x.shape[1]
    if p == np.inf:
        m = 0.0
        for a in range(d):
            v = abs(x[i, a] - x[j, a])
            if v > m:
                m = v
        return m
    s = 0.0
    if p == 2.0:
        for a in range(d):
            v = x[i, a] - x[j, a]
            s += v * v
        return np.sqrt(s)
    if p == 1.0:
        for a in range(d):
            s += abs(x[i, a] - x[j, a])
        return s
    for a in range(d):
        s += abs(x[i, a] - x[j, a]) ** p
    return s ** (1.0 / p)


@njit(cache=True)
def _bsearch(arr, v):
    lo, hi = 0, arr.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    if lo < arr.shape[0] and arr[lo] == v:
        return lo
    return -1


@njit(cache=True)
def _scan(x, cells, order, ukeys, ustart, ucount, ncell, strides, offsets, R, p,
          fill, oi, oj, od):
    n = x.shape[0]
    d = x.shape[1]
    rank = np.empty(n, dtype=np.int64)
    for t in range(n):
        rank[order[t]] = t
    cnt = 0
    for i in range(n):
        for o in range(offsets.shape[0]):
            key = 0
            ok = True
            for a in range(d):
                c = cells[i, a] + offsets[o, a]
                if c < 0 or c >= ncell[a]:
                    ok = False
                    break
                key += c * strides[a]
            if not ok:
                continue
            u = _bsearch(ukeys, key)
            if u < 0:
                continue
            for t in range(ustart[u], ustart[u] + ucount[u]):
                j = order[t]
                if t <= rank[i]:
                    continue
                dist = _norm(x, i, j, p)
                if dist <= R:
                    if fill:
                        if i < j:
                            oi[cnt], oj[cnt] = i, j
                        else:
                            oi[cnt], oj[cnt] = j, i
                        od[cnt] = dist
                    cnt += 1
    return cnt


_OFFSETS: dict = {}


def _offsets(d):
    if d not in _OFFSETS:
        g = np.stack(np.meshgrid(*([np.arange(-1, 2)] * d), indexing="ij"), axis=-1)
        _OFFSETS[d] = np.ascontiguousarray(g.reshape(-1, d).astype(np.int64))
    return _OFFSETS[d]


def candidate_pairs(x: np.ndarray, R: float, p: float = 2.0):
    """All index pairs ``i < j`` with ``|x_i - x_j|_p <= R``.

    Points are hashed into cubic cells of side ``R``; since every l^p norm
    dominates the sup norm, neighbours lie in the 3^d surrounding cells.
    Returns ``(i, j, dist)`` sorted lexicographically by ``(i, j)``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = len(x)
    empty = (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
    if n < 2 or not R > 0:
        return empty
    d = x.shape[1]
    lo = x.min(axis=0)
    cells = np.floor((x - lo) / R).astype(np.int64)
    ncell = cells.max(axis=0) + 1
    strides = np.ones(d, dtype=np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * ncell[a + 1]
    keys = cells @ strides
    order = np.argsort(keys, kind="stable")
    ukeys, ustart, ucount = np.unique(keys[order], return_index=True, return_counts=True)
    offs = _offsets(d)
    args = (x, cells, order, ukeys, ustart.astype(np.int64), ucount.astype(np.int64),
            ncell, strides, offs, float(R), float(p))
    z_i = np.empty(0, np.int64)
    m = _scan(*args, False, z_i, z_i, np.empty(0))
    oi = np.empty(m, np.int64)
    oj = np.empty(m, np.int64)
    od = np.empty(m)
    _scan(*args, True, oi, oj, od)
    s = np.lexsort((oj, oi))
    return oi[s], oj[s], od[s]


@njit(cache=True)
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def union_find(n, ei, ej):
    """Root label of every vertex after merging the given edges."""
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for t in range(ei.shape[0]):
        a = _find(parent, ei[t])
        b = _find(parent, ej[t])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    out = np.empty(n, dtype=np.int64)
    for v in range(n):
        out[v] = _find(parent, v)
    return out


@njit(cache=True)
def oriented_reach(open_sites):
    """Sites of ``[0, L]^2`` reachable from the origin by open +e1/+e2 paths."""
    L1 = open_sites.shape[0]
    reach = np.zeros(open_sites.shape, dtype=np.bool_)
    if not open_sites[0, 0]:
        return reach
    reach[0, 0] = True
    for s in range(1, 2 * L1 - 1):
        for i in range(max(0, s - L1 + 1), min(s, L1 - 1) + 1):
            j = s - i
            if not open_sites[i, j]:
                continue
            if (i > 0 and reach[i - 1, j]) or (j > 0 and reach[i, j - 1]):
                reach[i, j] = True
    return reach


@njit(cache=True)
def phi_eval(code, pa, pb, r):
    """Connection function from its array form (see ``ConnectionFunction.arrays``)."""
    if code == 0:  # step: radii pa, values pb
        for k in range(pa.shape[0]):
            if r <= pa[k]:
                return pb[k]
        return 0.0
    if code == 1:  # truncated exponential: pa = (rate, R)
        if r <= pa[1]:
            return np.exp(-pa[0] * r)
        return 0.0
    # linear table
    if r > pa[pa.shape[0] - 1]:
        return 0.0
    for k in range(1, pa.shape[0]):
        if r <= pa[k]:
            t = (r - pa[k - 1]) / (pa[k] - pa[k - 1])
            return pb[k - 1] + t * (pb[k] - pb[k - 1])
    return pb[pb.shape[0] - 1]


@njit(cache=True)
def _search(x, ids, key, code, pa, pb, p, R, cells, order, ukeys, ustart, ucount, ncell,
            strides, offsets, start, target, cap):
    n = x.shape[0]
    d = x.shape[1]
    k64 = np.uint64(key)
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    count = 0
    for i in range(n):
        if start[i]:
            seen[i] = True
            stack[top] = i
            top += 1
            count += 1
            if target[i]:
                return True, count
    while top > 0:
        top -= 1
        i = stack[top]
        for o in range(offsets.shape[0]):
            ck = 0
            ok = True
            for a in range(d):
                c = cells[i, a] + offsets[o, a]
                if c < 0 or c >= ncell[a]:
                    ok = False
                    break
                ck += c * strides[a]
            if not ok:
                continue
            u = _bsearch(ukeys, ck)
            if u < 0:
                continue
            for t in range(ustart[u], ustart[u] + ucount[u]):
                j = order[t]
                if seen[j]:
                    continue
                dist = _norm(x, i, j, p)
                if dist > R:
                    continue
                a_, b_ = ids[i], ids[j]
                if b_ < a_:
                    a_, b_ = b_, a_
                h = _mix(k64 ^ _mix(np.uint64(a_)))
                h = _mix(h ^ _mix(np.uint64(b_)))
                coin = np.float64(h >> _S11) * (1.0 / 9007199254740992.0)
                if coin < phi_eval(code, pa, pb, dist):
                    seen[j] = True
                    count += 1
                    if target[j]:
                        return True, count
                    if count > cap:
                        return False, count
                    stack[top] = j
                    top += 1
    return False, count


def reach_search(x, ids, key, phi_arrays, p, R, start, target, cap=None):
    """Explore the graph from ``start`` until ``target`` is hit or ``cap`` is exceeded.

    Edges are tested on the fly with the same pair coins as the batch sampler,
    so the answer agrees with a search in the full sampled graph.  Returns
    ``(hit, visited)``; when nothing was hit and ``visited <= cap`` the visited
    count is the size of the union of the clusters of the start points.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = len(x)
    cap = n if cap is None else int(cap)
    start = np.asarray(start, dtype=np.bool_)
    target = np.asarray(target, dtype=np.bool_)
    if n == 0 or not start.any():
        return False, 0
    d = x.shape[1]
    side = R if R > 0 else 1.0
    lo = x.min(axis=0)
    cells = np.floor((x - lo) / side).astype(np.int64)
    ncell = cells.max(axis=0) + 1
    strides = np.ones(d, dtype=np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * ncell[a + 1]
    keys = cells @ strides
    order = np.argsort(keys, kind="stable")
    ukeys, ustart, ucount = np.unique(keys[order], return_index=True, return_counts=True)
    code, pa, pb = phi_arrays
    hit, count = _search(x, np.asarray(ids, np.int64), np.uint64(key), int(code), pa, pb,
                         float(p), float(R), cells, order, ukeys, ustart.astype(np.int64),
                         ucount.astype(np.int64), ncell, strides, _offsets(d), start, target, cap)
    return bool(hit), int(count)
