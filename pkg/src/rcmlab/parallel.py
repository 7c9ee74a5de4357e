"""Replication sharding over a process pool.

Replication ``r`` always draws from substream ``r`` of the experiment stream
and results are returned in replication order, so the output does not depend
on the number of workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

ENV_WORKERS = "RCM_LAB_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(ENV_WORKERS, "").strip()
    if not raw:
        return 1
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_WORKERS} must be an integer, got {raw!r}") from None
    if k < 1:
        raise ValueError(f"{ENV_WORKERS} must be >= 1")
    return k


def _run_chunk(fn, lo, hi):
    return [fn(r) for r in range(lo, hi)]


def map_reps(fn, reps: int, workers: int | None = None) -> list:
    """``[fn(0), ..., fn(reps - 1)]`` computed on ``workers`` processes.

    ``fn`` must be picklable (a module-level function or a ``functools.partial``
    of one) when more than one worker is used.
    """
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1 or reps < 2:
        return [fn(r) for r in range(reps)]
    size = max(1, -(-reps // (4 * workers)))
    bounds = [(lo, min(reps, lo + size)) for lo in range(0, reps, size)]
    out = []
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for part in ex.map(_run_chunk, [fn] * len(bounds), *zip(*bounds)):
            out.extend(part)
    return out
