"""Oriented site percolation on the quarter plane."""
from __future__ import annotations

import numpy as np

from .._kernels import oriented_reach
from ..rng import as_stream


def oriented_site_percolation(p: float, L: int, stream=0):
    """Open the sites of ``{i + j <= L}`` with probability ``p`` and follow +e1/+e2 paths.

    Returns
    -------
    survives : bool
        Whether an open oriented path from ``(0, 0)`` reaches ``i + j = L``.
    frontier : set of (i, j)
        The reached sites on that diagonal.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if L < 0:
        raise ValueError("L must be >= 0")
    rng = as_stream(stream).generator()
    open_sites = rng.random((L + 1, L + 1)) < p
    reach = oriented_reach(open_sites)
    i = np.arange(L + 1)
    hit = reach[i, L - i]
    frontier = {(int(a), int(L - a)) for a in i[hit]}
    return bool(frontier), frontier
