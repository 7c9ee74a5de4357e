"""Estimate records and the small statistics shared by the estimators."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats


@dataclass
class EstimateRecord:
    """One estimated quantity with its standard error and provenance seed."""

    name: str
    value: float
    std_error: float
    replications: int
    master_seed: int
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("std_error must be >= 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    def to_json(self) -> str:
        return json.dumps({"name": self.name, "value": self.value, "std_error": self.std_error,
                           "replications": self.replications, "master_seed": self.master_seed,
                           "parameters": self.parameters}, sort_keys=True, allow_nan=True)

    def csv_row(self) -> list:
        params = [f"{k}={_scalar(v)}" for k, v in sorted(self.parameters.items())]
        return [self.name, repr(float(self.value)), repr(float(self.std_error)),
                self.replications, self.master_seed, *params]


def _scalar(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(str(_scalar(x)) for x in v)
    return v


def records_to_csv(records, path=None) -> str:
    """CSV rows ``name,value,std_error,reps,seed,params...``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value", "std_error", "reps", "seed", "params"])
    for r in records:
        w.writerow(r.csv_row())
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def binomial(successes: int, n: int):
    p = successes / n
    return p, math.sqrt(max(p * (1 - p), 0.0) / n)


def wilson(successes: int, n: int, z: float = 1.959963984540054):
    """Wilson score interval ``(centre, lo, hi)``."""
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return centre, max(0.0, centre - half), min(1.0, centre + half)


def mean_se(values):
    """Compensated mean and standard error of a sequence."""
    n = len(values)
    m = math.fsum(values) / n
    if n < 2:
        return m, 0.0
    var = math.fsum((v - m) ** 2 for v in values) / (n - 1)
    return m, math.sqrt(var / n)


def chi2_two_sample(a, b, min_expected: float = 5.0) -> float:
    """p-value of the chi-square homogeneity test on two integer samples.

    Adjacent categories are merged left to right until each merged bin has an
    expected count of at least ``min_expected`` in both rows.
    """
    a, b = np.asarray(a, int), np.asarray(b, int)
    top = int(max(a.max(), b.max())) + 1
    ca, cb = np.bincount(a, minlength=top), np.bincount(b, minlength=top)
    share = min(len(a), len(b)) / (len(a) + len(b))
    rows, acc = [], np.zeros(2, int)
    for k in range(top):
        acc += (ca[k], cb[k])
        if acc.sum() * share >= min_expected:
            rows.append(acc.copy())
            acc[:] = 0
    if acc.sum():
        if rows:
            rows[-1] += acc
        else:
            rows.append(acc)
    if len(rows) < 2:
        return 1.0
    return float(stats.chi2_contingency(np.array(rows).T, correction=False)[1])
