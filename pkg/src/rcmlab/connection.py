"""Radial connection functions with finite range."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


class ConnectionFunctionError(ValueError):
    pass


@dataclass(frozen=True)
class ConnectionFunction:
    """Nonincreasing map ``phi: [0, inf) -> [0, 1]`` vanishing beyond ``range``.

    Parameters
    ----------
    kind
        One of ``"indicator"``, ``"step"``, ``"texp"`` (truncated exponential)
        or ``"table"`` (linear interpolation between tabulated values).
    params
        Kind-specific parameters, see the constructors below.
    """

    kind: str
    params: tuple = field(default=())

    # constructors -------------------------------------------------------
    @classmethod
    def indicator(cls, R: float = 1.0) -> "ConnectionFunction":
        """``phi = 1_{[0, R]}``."""
        return cls("step", ((float(R), 1.0),))

    @classmethod
    def step(cls, levels) -> "ConnectionFunction":
        """Right-continuous step function: ``phi(r) = v_k`` for ``r_{k-1} < r <= r_k``.

        ``levels`` is a sequence of ``(r_k, v_k)`` with increasing ``r_k``.
        """
        levels = tuple((float(r), float(v)) for r, v in levels)
        return cls("step", levels)

    @classmethod
    def truncated_exponential(cls, rate: float, R: float) -> "ConnectionFunction":
        return cls("texp", (float(rate), float(R)))

    @classmethod
    def table(cls, r, values) -> "ConnectionFunction":
        return cls("table", (tuple(float(x) for x in r), tuple(float(v) for v in values)))

    @classmethod
    def from_file(cls, path) -> "ConnectionFunction":
        """Load a two-column ``r,phi(r)`` table; a header line is optional."""
        rs, vs = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    r, v = float(row[0]), float(row[1])
                except ValueError:
                    if rs:
                        raise ConnectionFunctionError(f"bad table row {row!r}") from None
                    continue
                rs.append(r)
                vs.append(v)
        return cls.table(rs, vs)

    def __post_init__(self):
        if self.kind == "step":
            rs = [r for r, _ in self.params]
            if not rs or any(b <= a for a, b in zip(rs, rs[1:])) or rs[0] <= 0:
                raise ConnectionFunctionError("step radii must be positive and increasing")
        elif self.kind == "texp":
            rate, R = self.params
            if rate < 0 or not R > 0:
                raise ConnectionFunctionError("truncated exponential needs rate >= 0, R > 0")
        elif self.kind == "table":
            rs, vs = self.params
            if len(rs) < 2 or len(rs) != len(vs) or rs[0] != 0:
                raise ConnectionFunctionError("table needs >= 2 rows starting at r = 0")
            if any(b <= a for a, b in zip(rs, rs[1:])):
                raise ConnectionFunctionError("table radii must increase")
        else:
            raise ConnectionFunctionError(f"unknown connection kind {self.kind!r}")
        grid = np.linspace(0.0, self.range * 1.01, 513)
        vals = self(grid)
        if np.any(vals < 0) or np.any(vals > 1):
            raise ConnectionFunctionError("connection function must take values in [0, 1]")
        if np.any(np.diff(vals) > 1e-12):
            raise ConnectionFunctionError("connection function must be nonincreasing")

    # evaluation ---------------------------------------------------------
    @property
    def range(self) -> float:
        """``sup{r : phi(r) > 0}``."""
        if self.kind == "step":
            positive = [r for r, v in self.params if v > 0]
            return positive[-1] if positive else 0.0
        if self.kind == "texp":
            return self.params[1]
        rs, vs = self.params
        last = max((i for i, v in enumerate(vs) if v > 0), default=None)
        if last is None:
            return 0.0
        return rs[min(last + 1, len(rs) - 1)]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "step":
            radii = np.array([x for x, _ in self.params])
            vals = np.array([v for _, v in self.params] + [0.0])
            return vals[np.searchsorted(radii, r, side="left")]
        if self.kind == "texp":
            rate, R = self.params
            return np.where(r <= R, np.exp(-rate * r), 0.0)
        rs, vs = self.params
        return np.interp(r, rs, vs, right=0.0)

    def arrays(self):
        """``(code, a, b)`` float arrays describing ``phi`` for compiled kernels."""
        if self.kind == "step":
            return (0, np.array([r for r, _ in self.params]), np.array([v for _, v in self.params]))
        if self.kind == "texp":
            return (1, np.array(self.params, dtype=float), np.zeros(1))
        rs, vs = self.params
        return (2, np.array(rs), np.array(vs))

    def scaled(self, c: float) -> "ConnectionFunction":
        """``r -> phi(r / c)``; multiplies the range by ``c``."""
        if self.kind == "step":
            return ConnectionFunction.step([(r * c, v) for r, v in self.params])
        if self.kind == "texp":
            rate, R = self.params
            return ConnectionFunction.truncated_exponential(rate / c, R * c)
        rs, vs = self.params
        return ConnectionFunction.table([r * c for r in rs], vs)

    def integral(self, d: int, norm_p: float = 2.0, n: int = 4000) -> float:
        """``int_{R^d} phi(|x|) dx`` for the Euclidean norm (used for scale checks)."""
        if norm_p != 2.0:
            raise NotImplementedError("only the Euclidean integral is provided")
        r = np.linspace(0, self.range, n + 1)
        surf = d * math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        f = self(r) * surf * r ** (d - 1)
        return float(np.trapezoid(f, r))


def parse_phi(text: str) -> ConnectionFunction:
    """Build a connection function from a short text form.

    ``indicator:R``, ``step:r1/v1;r2/v2``, ``texp:rate/R`` or ``table:PATH``.
    """
    kind, _, arg = text.partition(":")
    kind = kind.strip()
    if kind == "indicator":
        return ConnectionFunction.indicator(float(arg or 1.0))
    if kind == "step":
        levels = [tuple(float(x) for x in part.split("/")) for part in arg.split(";") if part]
        return ConnectionFunction.step(levels)
    if kind == "texp":
        rate, R = (float(x) for x in arg.split("/"))
        return ConnectionFunction.truncated_exponential(rate, R)
    if kind == "table":
        return ConnectionFunction.from_file(arg)
    raise ConnectionFunctionError(f"unknown connection function {text!r}")
