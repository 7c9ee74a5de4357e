"""The constants of the renormalization argument, evaluated in log space.

The integer constants ``t1`` and ``t2`` are astronomically large for any
interesting input, so all products are carried as natural logarithms and the
ceilings are applied exactly only while the argument is below ``2^52``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..connection import ConnectionFunction
from ..geometry import L2, Norm, lam
from ..graph import build_graph, components
from ..point_process import coupled_sample
from ..rng import as_stream, tag

EPS0 = 1 / 9999
_EXACT = 2.0 ** 52


class ConstantsError(ValueError):
    pass


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def log_ceil(log_x: float) -> float:
    """``log(ceil(x))`` given ``log(x)``, exact for ``x < 2^52``."""
    if log_x == math.inf:
        return math.inf
    if log_x < math.log(_EXACT):
        return math.log(max(1, math.ceil(math.exp(log_x))))
    return log_x  # ceil changes x by less than one part in 2^52


def log_bridge(eps1: float, d: int, phi: ConnectionFunction, cubes: int, vol: float) -> float:
    """``log`` of ``e^{-vol eps1} (eps1/(2d)^d)^K phi((d+1)/(2d))^(K-1) phi(1/2)^2``."""
    K = cubes
    return (-vol * eps1 + K * (_log(eps1) - d * math.log(2 * d))
            + (K - 1) * _log(float(phi((d + 1) / (2 * d)))) + 2 * _log(float(phi(0.5))))


def log_bridge_bound(eps1: float, d: int, phi: ConnectionFunction, half_width: float = 2.5,
                     side: float | None = None) -> float:
    """Log lower bound on the bridge probability for a general subcube grid.

    Dividing ``Lambda_half_width`` into subcubes of side ``s`` (default
    ``1/(2d)``), the bound is ``e^{-vol eps1} (eps1 s^d)^K phi(s(d+1))^(K-1)
    phi(d s)^2`` with ``K`` subcubes of total volume ``vol``.  The defaults
    give ``log delta1``; ``half_width = 1/2`` gives ``log delta2``.
    """
    s = 1.0 / (2 * d) if side is None else float(side)
    per = round(2 * half_width / s)
    if not math.isclose(per * s, 2 * half_width):
        raise ConstantsError("the subcube side must divide the box")
    K = per ** d
    vol = (2 * half_width) ** d
    return (-vol * eps1 + K * (_log(eps1) + d * math.log(s))
            + (K - 1) * _log(float(phi(s * (d + 1)))) + 2 * _log(float(phi(d * s))))


@dataclass
class ConstantsBundle:
    """Constants of the argument; ``log_*`` fields are natural logarithms."""

    d: int
    lam: float
    mu: float
    m: int
    n: int
    N: int
    eps0: float
    eps1: float
    eps2: float
    eps2_se: float
    log_eps2: float
    log_delta1: float
    log_delta2: float
    log_eps3: float
    log_t1: float
    log_t2: float
    w: int
    t3: int
    inaccessible_open_ok: bool
    m_at_least_9: bool

    @property
    def delta1(self) -> float:
        return math.exp(self.log_delta1)

    @property
    def delta2(self) -> float:
        return math.exp(self.log_delta2)

    @property
    def eps3(self) -> float:
        return math.exp(self.log_eps3)

    def as_dict(self) -> dict:
        return asdict(self)


def seed_probability(lam_: float, m: int, d: int, phi: ConnectionFunction, norm: Norm = L2,
                     reps: int = 1000, stream=0):
    """Monte Carlo estimate of ``P[Lambda_m is a seed]`` with its standard error.

    The occupancy of the ``(2m)^d`` unit subcubes is tested first, so the
    graph is only built for configurations that can still be seeds.
    """
    stream = as_stream(stream)
    box = lam(m, d)
    need = (2 * m) ** d
    hits = 0
    for r in range(reps):
        s = stream.child(r)
        pts = coupled_sample(lam_, box, s.child(tag("points")))
        if len(pts) < need:
            continue
        cells = np.floor(pts.coords + m).astype(np.int64).clip(0, 2 * m - 1)
        flat = np.ravel_multi_index(cells.T, (2 * m,) * d)
        if len(np.unique(flat)) < need:
            continue
        if len(components(build_graph(pts, phi, norm, s.child(tag("edges"))))) == 1:
            hits += 1
    p = hits / reps
    return p, math.sqrt(p * (1 - p) / reps)


def constants(lam_: float, mu: float, d: int, m: int, n: int, phi: ConnectionFunction,
              seed=0, eps2: float | None = None, eps2_reps: int = 1000, norm: Norm = L2,
              eps0: float = EPS0) -> ConstantsBundle:
    """Evaluate every constant for the given intensities and box sizes.

    ``eps2`` (the seed probability) is estimated by simulation unless given.
    ``t1 = 9^d ceil(log(1/eps0)/delta1)`` and
    ``t2 = ceil((2m)^(d-1) (3^d lam t1 + log(2/eps0)) / (eps3 eps2))``.
    """
    if not mu > lam_ > 0:
        raise ConstantsError("need mu > lam > 0")
    if m < 1:
        raise ConstantsError("m must be >= 1")
    if n <= 0 or n % (2 * m):
        raise ConstantsError("n must be a positive multiple of 2m")
    if d < 1:
        raise ConstantsError("d must be >= 1")
    eps1 = (mu - lam_) / 40
    if eps2 is None:
        eps2, eps2_se = seed_probability(lam_, m, d, phi, norm, eps2_reps, seed)
    else:
        if not 0 <= eps2 <= 1:
            raise ConstantsError("eps2 must lie in [0, 1]")
        eps2_se = 0.0
    log_delta1 = log_bridge(eps1, d, phi, (10 * d) ** d, 5.0 ** d)
    log_delta2 = log_bridge(eps1, d, phi, (2 * d) ** d, 1.0)
    log_eps3 = log_bridge(eps1, d, phi, 2 * (2 * d) ** d, 2.0)
    log_eps2 = _log(eps2)
    # t1 = 9^d ceil(log(1/eps0) / delta1)
    log_t1 = d * math.log(9) + log_ceil(math.log(math.log(1 / eps0)) - log_delta1)
    # t2 = ceil((2m)^(d-1) / (eps3 eps2) * (3^d lam t1 + log(2/eps0)))
    a = d * math.log(3) + math.log(lam_) + log_t1
    b = math.log(math.log(2 / eps0))
    inner = max(a, b) + math.log1p(math.exp(-abs(a - b))) if math.isfinite(a) else a
    log_t2 = log_ceil((d - 1) * math.log(2 * m) - log_eps3 - log_eps2 + inner)
    return ConstantsBundle(
        d=d, lam=lam_, mu=mu, m=m, n=n, N=n + m, eps0=eps0, eps1=eps1, eps2=eps2,
        eps2_se=eps2_se, log_eps2=log_eps2, log_delta1=log_delta1, log_delta2=log_delta2,
        log_eps3=log_eps3, log_t1=log_t1, log_t2=log_t2, w=d * 2 ** d,
        t3=(n // (2 * m)) ** (d - 1), inaccessible_open_ok=1 - 20 * eps0 > 80 / 81,
        m_at_least_9=m >= 9)
