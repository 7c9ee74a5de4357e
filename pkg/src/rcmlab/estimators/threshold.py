"""Crossing probabilities and bisection estimates of the critical intensity.

Replication ``r`` samples its points from substream ``r`` with the layered
coupling of :func:`rcmlab.point_process.coupled_sample` on the largest window
and restricts them to the window of the requested geometry.  Crossing
indicators are therefore nondecreasing in the intensity, in the slab
thickness and in ``phi`` (pointwise) run by run, and every bisection probe
reuses the same replications.
"""
from __future__ import annotations

from functools import partial

import numpy as np

from ..connection import ConnectionFunction
from ..geometry import L2, Box, Norm
from ..graph import reaches
from ..parallel import map_reps
from ..point_process import coupled_sample
from ..rng import Stream, as_stream, tag
from .records import EstimateRecord, wilson


class BracketError(ValueError):
    pass


def observation_box(d: int, window: float) -> Box:
    """The 2:1 window ``[0, 2W] x [0, W] x [-W/2, W/2]^(d-2)``."""
    if not window > 0:
        raise ValueError("window must be positive")
    lo = [0.0, 0.0] + [-window / 2] * (d - 2)
    hi = [2.0 * window, float(window)] + [window / 2] * (d - 2)
    return Box(tuple(lo[:d]), tuple(hi[:d]))


def crossing_window(d: int, window: float, M: float | None = None) -> Box:
    """Observation box, intersected with the slab ``S_M`` when ``M`` is given."""
    box = observation_box(d, window)
    if M is None or d < 3:
        return box
    if not M > 0:
        raise ValueError("slab thickness must be positive")
    h = min(M, window) / 2
    return Box(box.lo[:2] + (-h,) * (d - 2), box.hi[:2] + (h,) * (d - 2))


def crosses(points, box: Box, phi: ConnectionFunction, norm: Norm, key) -> bool:
    """Left-right crossing of ``box`` along the first axis.

    The left (right) side is the set of points within ``range / 2`` of the
    face ``x_1 = lo`` (``x_1 = hi``), as for the Boolean model of that radius.
    """
    if len(points) == 0:
        return False
    half = phi.range / 2
    x1 = points.coords[:, 0]
    start = x1 <= box.lo[0] + half
    target = x1 >= box.hi[0] - half
    if not start.any() or not target.any():
        return False
    hit, _ = reaches(points, start, target, phi, norm, Stream(key))
    return hit


def _crossing_rep(r, lam, phi, norm, d, window, M_list, stream, scale):
    s = stream.child(r)
    big = observation_box(d, window)
    pts = coupled_sample(lam, big, s.child(tag("points")), layer=scale ** -d)
    key = s.child(tag("edges")).key
    out = []
    for M in M_list:
        box = crossing_window(d, window, M)
        sub = pts if M is None or d < 3 else pts.restrict(box)
        out.append(crosses(sub, box, phi, norm, key))
    return out


def crossing_indicators(lam: float, phi: ConnectionFunction, norm: Norm, d: int, window: float,
                        reps: int, stream=0, M_list=(None,), workers=None) -> np.ndarray:
    """Per-replication crossing indicators, shape ``(reps, len(M_list))``.

    The layer width of the coupling scales as ``range^-d`` so that rescaling
    ``phi``, the window and the intensity together reproduces the same
    configurations up to the spatial scale.
    """
    stream = as_stream(stream)
    fn = partial(_crossing_rep, lam=float(lam), phi=phi, norm=norm, d=d, window=window,
                 M_list=tuple(M_list), stream=stream, scale=phi.range)
    return np.array(map_reps(fn, reps, workers), dtype=bool).reshape(reps, len(M_list))


def _probe(lam, phi, norm, d, window, reps, stream, M, workers):
    ind = crossing_indicators(lam, phi, norm, d, window, reps, stream, (M,), workers)[:, 0]
    k = int(ind.sum())
    centre, lo, hi = wilson(k, reps)
    return k / reps, centre, lo, hi


def estimate_lambda_c(phi: ConnectionFunction, norm: Norm = L2, d: int = 2,
                      geometry: str = "box", window: float = 20.0, reps: int = 400,
                      tolerance: float = 0.02, stream=0, M: float | None = None,
                      lam_lo: float = 0.5, lam_hi: float = 3.0, workers=None,
                      master_seed: int | None = None) -> EstimateRecord:
    """Intensity at which the 2:1 window is crossed with probability one half.

    Bisection on ``[lam_lo, lam_hi]``: each probe runs the same ``reps``
    coupled replications and the bracket end moves according to which side of
    ``1/2`` the Wilson interval is centred on.  Probes whose interval still
    contains ``1/2`` are counted in ``parameters["unresolved_probes"]``.
    The value is the bracket midpoint and ``std_error`` its half-width.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if not 0 <= lam_lo < lam_hi:
        raise ValueError("need 0 <= lam_lo < lam_hi")
    if geometry not in ("box", "slab"):
        raise ValueError("geometry must be 'box' or 'slab'")
    if geometry == "slab":
        if M is None:
            raise ValueError("slab geometry needs a thickness M")
        if d < 3:
            raise ValueError("slabs need d >= 3")
    else:
        M = None
    seed = master_seed if master_seed is not None else 0
    stream = as_stream(stream)
    curve = []
    unresolved = 0

    def probe(lam):
        nonlocal unresolved
        p, centre, lo, hi = _probe(lam, phi, norm, d, window, reps, stream, M, workers)
        curve.append((float(lam), p, lo, hi))
        if lo <= 0.5 <= hi:
            unresolved += 1
        return centre >= 0.5

    lo, hi = float(lam_lo), float(lam_hi)
    if probe(lo) or not probe(hi):
        raise BracketError(f"crossing probability does not pass 1/2 in [{lo}, {hi}]")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            hi = mid
        else:
            lo = mid
    curve.sort()
    params = {"geometry": geometry, "d": d, "window": window, "tolerance": tolerance,
              "bracket_lo": lo, "bracket_hi": hi, "unresolved_probes": unresolved,
              "curve_lambda": [c[0] for c in curve], "curve_p": [c[1] for c in curve]}
    if M is not None:
        params["M"] = M
    return EstimateRecord("lambda_c", 0.5 * (lo + hi), 0.5 * (hi - lo), reps, seed, params)


def slab_curve(phi: ConnectionFunction, norm: Norm = L2, d: int = 3, M_list=(1, 2, 4, 8),
               window: float = 16.0, reps: int = 300, tolerance: float = 0.02, stream=0,
               lam_lo: float = 0.3, lam_hi: float = 3.0, workers=None,
               master_seed: int | None = None) -> list:
    """Critical intensity of slab windows for each ``M`` plus the full-window reference.

    All geometries share replications, so the slab estimates are
    nonincreasing in ``M`` and never below the full-window estimate, up to
    the bracket width.  The reference record is last, named
    ``"lambda_c_box"``.
    """
    if d < 3:
        raise ValueError("slab curves need d >= 3")
    M_list = list(M_list)
    if any(b <= a for a, b in zip(M_list, M_list[1:])):
        raise ValueError("M_list must be strictly ascending")
    out = []
    for M in M_list:
        rec = estimate_lambda_c(phi, norm, d, "slab", window, reps, tolerance, stream, M,
                                lam_lo, lam_hi, workers, master_seed)
        rec.name = "lambda_c_slab"
        out.append(rec)
    ref = estimate_lambda_c(phi, norm, d, "box", window, reps, tolerance, stream, None,
                            lam_lo, lam_hi, workers, master_seed)
    ref.name = "lambda_c_box"
    out.append(ref)
    return out
