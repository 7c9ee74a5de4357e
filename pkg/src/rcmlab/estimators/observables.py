"""Monte Carlo estimators of cluster observables.

Every estimator draws replication ``r`` from substream ``r`` of its stream,
with points from the layered intensity coupling and edge coins keyed by
point ids, so results are reproducible, independent of the worker count and
monotone in the intensity run by run where the event is increasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from ..connection import ConnectionFunction
from ..geometry import L2, Box, Norm, Region, lam
from ..graph import build_graph, components, reaches
from ..parallel import map_reps
from ..point_process import ORIGIN_ID, coupled_sample
from ..rng import as_stream, tag
from .records import EstimateRecord, binomial, mean_se


class EstimationError(ValueError):
    pass


def _sample(r, stream, intensity, region, with_origin=False):
    s = stream.child(r)
    pts = coupled_sample(intensity, region, s.child(tag("points")))
    if with_origin:
        pts = pts.with_origin()
    return pts, s.child(tag("edges"))


def _sup(coords):
    return np.abs(coords).max(axis=1) if len(coords) else np.zeros(0)


# ---------------------------------------------------------------- one-arm
def _arm_rep(r, lam_, phi, norm, d, r_inner, levels, stream):
    pts, es = _sample(r, stream, lam_, lam(levels[0], d), with_origin=True)
    sup = _sup(pts.coords)
    start = (sup <= r_inner) | (pts.ids == ORIGIN_ID)
    out = []
    for R in levels:
        inside = sup <= R
        sub = pts.subset(inside)
        target = sup[inside] >= R - phi.range
        hit, _ = reaches(sub, start[inside], target, phi, norm, es)
        out.append(hit)
    return out


def estimate_theta(lam_: float, phi: ConnectionFunction, norm: Norm = L2, d: int = 2,
                   r_inner: float = 1.0, R_outer: float = 30.0, reps: int = 1000, stream=0,
                   R_levels=(), workers=None, master_seed: int = 0) -> list:
    """One-arm proxy for the percolation probability.

    Estimates ``P[Lambda_r_inner <-> boundary of Lambda_R_outer]`` in the graph
    on the origin plus a Poisson sample in ``Lambda_R_outer``, where reaching
    the boundary means joining a point within the connection range of it.
    The origin always belongs to the start set, so a tiny ``r_inner`` gives
    the arm of the origin itself.  Extra radii in ``R_levels`` reuse the same
    samples (restricted), exposing the bias that shrinks as the radius grows.

    Returns one record per radius, ``R_outer`` first.
    """
    if not 0 < r_inner < R_outer:
        raise EstimationError("need 0 < r_inner < R_outer")
    if reps < 1:
        raise EstimationError("reps must be >= 1")
    extra = sorted(float(R) for R in R_levels)
    if any(not r_inner < R < R_outer for R in extra):
        raise EstimationError("extra radii must lie strictly between r_inner and R_outer")
    levels = [float(R_outer)] + extra
    stream = as_stream(stream)
    fn = partial(_arm_rep, lam_=float(lam_), phi=phi, norm=norm, d=d, r_inner=float(r_inner),
                 levels=levels, stream=stream)
    hits = np.array(map_reps(fn, reps, workers), dtype=bool).reshape(reps, len(levels))
    out = []
    for k, R in enumerate(levels):
        p, se = binomial(int(hits[:, k].sum()), reps)
        out.append(EstimateRecord("theta", p, se, reps, master_seed,
                                  {"lambda": lam_, "d": d, "r_inner": r_inner, "R_outer": R}))
    return out


# ---------------------------------------------------------------- pi_k
def _pik_rep(r, lam_, phi, norm, region, k_max, stream):
    pts, es = _sample(r, stream, lam_, region, with_origin=True)
    start = pts.ids == ORIGIN_ID
    _, size = reaches(pts, start, np.zeros(len(pts), bool), phi, norm, es, cap=k_max)
    return size


def estimate_pi_k(lam_: float, phi: ConnectionFunction, region: Region, k_max: int,
                  reps: int = 1000, stream=0, norm: Norm = L2, workers=None,
                  master_seed: int = 0) -> list:
    """Law of the order of the origin's cluster in ``G(H_lam^o n region)``.

    Returns records ``pi_1 .. pi_k_max`` and ``pi_tail`` (order > k_max).  The
    integer counts are kept in ``parameters["count"]`` and sum to ``reps``.
    """
    if k_max < 1:
        raise EstimationError("k_max must be >= 1")
    if reps < 1:
        raise EstimationError("reps must be >= 1")
    stream = as_stream(stream)
    fn = partial(_pik_rep, lam_=float(lam_), phi=phi, norm=norm, region=region,
                 k_max=int(k_max), stream=stream)
    sizes = np.array(map_reps(fn, reps, workers))
    counts = np.bincount(np.minimum(sizes, k_max + 1), minlength=k_max + 2)
    out = []
    for k in range(1, k_max + 2):
        p, se = binomial(int(counts[k]), reps)
        name = f"pi_{k}" if k <= k_max else "pi_tail"
        out.append(EstimateRecord(name, p, se, reps, master_seed,
                                  {"lambda": lam_, "k": k, "count": int(counts[k])}))
    return out


# ---------------------------------------------------------------- giant component
def _giant_rep(r, lam_, phi, norm, d, s, stream):
    pts, es = _sample(r, stream, lam_, lam(s, d))
    if len(pts) == 0:
        return 0, 0
    cd = components(build_graph(pts, phi, norm, es))
    return cd.L(1), cd.L(2)


def giant_stats(lam_: float, phi: ConnectionFunction, d: int = 2, s_list=(20, 40),
                reps: int = 50, stream=0, norm: Norm = L2, theta_reps: int = 0,
                workers=None, master_seed: int = 0) -> list:
    """Largest and second-largest component orders per unit volume in ``Lambda_s``.

    For each ``s`` emits ``L1_density`` and ``L2_density`` (orders divided by
    ``(2s)^d``).  With ``theta_reps > 0`` also emits ``lambda_theta``: ``lam``
    times the origin one-arm estimate with outer radius ``s``.
    """
    s_list = [float(s) for s in s_list]
    if any(b <= a for a, b in zip(s_list, s_list[1:])):
        raise EstimationError("s_list must be ascending")
    stream = as_stream(stream)
    out = []
    for s in s_list:
        sub = stream.child(tag("giant"), int(round(s * 1000)))
        fn = partial(_giant_rep, lam_=float(lam_), phi=phi, norm=norm, d=d, s=s, stream=sub)
        res = np.array(map_reps(fn, reps, workers), dtype=float).reshape(reps, 2)
        vol = (2 * s) ** d
        for k, name in enumerate(("L1_density", "L2_density")):
            m, se = mean_se((res[:, k] / vol).tolist())
            out.append(EstimateRecord(name, m, se, reps, master_seed,
                                      {"lambda": lam_, "d": d, "s": s}))
        if theta_reps > 0:
            th = estimate_theta(lam_, phi, norm, d, 1e-9, s, theta_reps,
                                stream.child(tag("theta"), int(round(s * 1000))),
                                workers=workers, master_seed=master_seed)[0]
            out.append(EstimateRecord("lambda_theta", lam_ * th.value, lam_ * th.std_error,
                                      theta_reps, master_seed, {"lambda": lam_, "d": d, "s": s}))
    return out


# ---------------------------------------------------------------- decay probe
def _decay_rep(r, lam_, phi, norm, d, r_list, R_outer, stream):
    pts, es = _sample(r, stream, lam_, lam(R_outer, d))
    sup = _sup(pts.coords)
    target = sup >= R_outer - phi.range
    out = []
    joined = False
    for rr in r_list:
        if not joined:
            joined, _ = reaches(pts, sup <= rr, target, phi, norm, es)
        out.append(not joined)
    return out


def decay_probe(lam_: float, phi: ConnectionFunction, d: int = 3, r_list=(2, 4, 6, 8),
                R_outer: float = 24.0, reps: int = 10000, stream=0, norm: Norm = L2,
                workers=None, master_seed: int = 0) -> list:
    """Probability that ``Lambda_r`` is not joined to the boundary of ``Lambda_R_outer``.

    Returns the records ``q`` (one per ``r``) followed by ``slope``, the
    weighted least-squares slope of ``log q`` against ``r^(d-2)`` over the
    radii with ``q > 0`` (variance of ``log q`` by the delta method).  The
    slope is NaN with infinite error when fewer than two radii have
    ``q > 0``; if every ``q`` is zero an :class:`EstimationError` is raised.
    """
    r_list = [float(r) for r in r_list]
    if any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise EstimationError("r_list must be ascending")
    if not r_list or r_list[-1] >= R_outer or r_list[0] <= 0:
        raise EstimationError("radii must lie in (0, R_outer)")
    stream = as_stream(stream)
    fn = partial(_decay_rep, lam_=float(lam_), phi=phi, norm=norm, d=d, r_list=r_list,
                 R_outer=float(R_outer), stream=stream)
    miss = np.array(map_reps(fn, reps, workers), dtype=bool).reshape(reps, len(r_list))
    counts = miss.sum(axis=0)
    if not counts.any():
        raise EstimationError(f"unmeasurable: every q is 0 over {reps} replications")
    out = []
    for rr, k in zip(r_list, counts):
        p, se = binomial(int(k), reps)
        out.append(EstimateRecord("q", p, se, reps, master_seed,
                                  {"lambda": lam_, "d": d, "r": rr, "R_outer": R_outer,
                                   "count": int(k)}))
    good = counts > 0
    params = {"lambda": lam_, "d": d, "R_outer": R_outer, "radii_used": int(good.sum())}
    if good.sum() < 2:
        params["sign"] = "unmeasurable"
        out.append(EstimateRecord("slope", math.nan, math.inf, reps, master_seed, params))
        return out
    x = np.array(r_list)[good] ** (d - 2)
    q = counts[good] / reps
    y = np.log(q)
    w = reps * q / np.maximum(1 - q, 1e-12)
    W = w.sum()
    xb, yb = (w * x).sum() / W, (w * y).sum() / W
    sxx = (w * (x - xb) ** 2).sum()
    slope = float((w * (x - xb) * (y - yb)).sum() / sxx)
    se = float(math.sqrt(1.0 / sxx))
    params["sign"] = "negative" if slope < 0 else "nonnegative"
    params["z"] = slope / se
    out.append(EstimateRecord("slope", slope, se, reps, master_seed, params))
    return out


# ---------------------------------------------------------------- FKG
@dataclass(frozen=True)
class Connection:
    """``A <-> B`` in the graph on the sample."""

    A: Box
    B: Box

    def __call__(self, pts, graph, edge_stream, phi, norm) -> bool:
        start, target = self.A.contains(pts.coords), self.B.contains(pts.coords)
        if not start.any() or not target.any():
            return False
        return reaches(pts, start, target, phi, norm, edge_stream)[0]


@dataclass(frozen=True)
class VertexCount:
    """At least ``k`` sample points in ``region``."""

    region: Box
    k: int

    def __call__(self, pts, graph, edge_stream, phi, norm) -> bool:
        return int(self.region.contains(pts.coords).sum()) >= self.k if len(pts) else self.k <= 0


@dataclass(frozen=True)
class L1Threshold:
    """Largest component of order at least ``k``."""

    k: int

    def __call__(self, pts, graph, edge_stream, phi, norm) -> bool:
        return components(graph()).L(1) >= self.k


@dataclass(frozen=True)
class Crossing:
    """Crossing of ``box`` along ``axis`` (0: left-right, 1: bottom-top)."""

    box: Box
    axis: int = 0

    def __call__(self, pts, graph, edge_stream, phi, norm) -> bool:
        a = self.axis
        half = phi.range / 2
        inside = self.box.contains(pts.coords)
        sub = pts.subset(inside)
        x = sub.coords[:, a]
        start, target = x <= self.box.lo[a] + half, x >= self.box.hi[a] - half
        if not start.any() or not target.any():
            return False
        return reaches(sub, start, target, phi, norm, edge_stream)[0]


CATALOG = (Connection, VertexCount, L1Threshold, Crossing)


def parse_event(text: str, d: int):
    """Catalog event from text.

    ``lr:x0,y0,x1,y1`` / ``tb:...`` (crossing of a box), ``count:x0,y0,x1,y1,k``,
    ``l1:k`` and ``connect:ax0,ay0,ax1,ay1;bx0,by0,bx1,by1``; coordinates list
    the lower corner then the upper corner, all ``d`` components each.
    """
    kind, _, arg = text.partition(":")
    kind = kind.strip()

    def box(part):
        v = [float(x) for x in part.split(",")]
        if len(v) != 2 * d:
            raise ValueError(f"box needs {2 * d} numbers: {part!r}")
        return Box(tuple(v[:d]), tuple(v[d:]))

    if kind in ("lr", "tb"):
        return Crossing(box(arg), 0 if kind == "lr" else 1)
    if kind == "count":
        *coords, k = arg.split(",")
        return VertexCount(box(",".join(coords)), int(k))
    if kind == "l1":
        return L1Threshold(int(arg))
    if kind == "connect":
        a, b = arg.split(";")
        return Connection(box(a), box(b))
    raise ValueError(f"not a catalog event: {text!r}")


def _fkg_rep(r, lam_, phi, norm, region, events, stream):
    pts, es = _sample(r, stream, lam_, region)
    cache = []

    def graph():
        if not cache:
            cache.append(build_graph(pts, phi, norm, es))
        return cache[0]

    return [bool(ev(pts, graph, es, phi, norm)) for ev in events]


def fkg_check(lam_: float, phi: ConnectionFunction, region: Box, eventA, eventB,
              reps: int = 10000, stream=0, norm: Norm = L2, workers=None,
              master_seed: int = 0) -> EstimateRecord:
    """Covariance of two increasing catalog events with a delta-method error.

    ``parameters`` carries ``pA``, ``pB``, ``pAB`` and the z-score; the
    inequality predicts ``cov >= 0``.
    """
    for ev in (eventA, eventB):
        if not isinstance(ev, CATALOG):
            raise EstimationError(f"not a catalog event: {ev!r}")
    if reps < 2:
        raise EstimationError("reps must be >= 2")
    stream = as_stream(stream)
    fn = partial(_fkg_rep, lam_=float(lam_), phi=phi, norm=norm, region=region,
                 events=(eventA, eventB), stream=stream)
    ab = np.array(map_reps(fn, reps, workers), dtype=float).reshape(reps, 2)
    X, Y = ab[:, 0], ab[:, 1]
    pA, pB, pAB = X.mean(), Y.mean(), (X * Y).mean()
    cov = pAB - pA * pB
    psi = X * Y - pB * X - pA * Y
    se = float(psi.std(ddof=1) / math.sqrt(reps))
    z = cov / se if se > 0 else (0.0 if cov == 0 else math.copysign(math.inf, cov))
    return EstimateRecord("fkg_cov", float(cov), se, reps, master_seed,
                          {"lambda": lam_, "pA": float(pA), "pB": float(pB),
                           "pAB": float(pAB), "z": float(z)})
