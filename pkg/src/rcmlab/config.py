"""Flat ``key = value`` experiment configurations.

Lines hold one ``key = value`` pair; ``#`` starts a comment; list values are
comma separated.  Each experiment declares its keys, their types and
defaults, and every value is validated before any sampling happens.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

EXPERIMENTS = ("sample", "graph", "theta", "pi-k", "lambda-c", "slab-curve", "decay", "giant",
               "fkg", "explore", "renorm", "oriented", "constants")

_REQ = object()

# type codes: int, float, str, bool, ints, floats
_COMMON = {"seed": ("int", 0), "out": ("str", "results"), "workers": ("int", None),
           "plot": ("bool", True)}
_GRAPH = {"phi": ("str", "indicator:1"), "norm": ("str", "l2"), "d": ("int", 2)}

SCHEMA = {
    "sample": {"intensity": ("float", _REQ), "d": ("int", 2), "s": ("float", _REQ)},
    "graph": {**_GRAPH, "intensity": ("float", _REQ), "s": ("float", _REQ)},
    "theta": {**_GRAPH, "lambda": ("float", _REQ), "r_inner": ("float", 1.0),
              "R_outer": ("float", _REQ), "R_levels": ("floats", []), "reps": ("int", _REQ)},
    "pi-k": {**_GRAPH, "lambda": ("float", _REQ), "s": ("float", _REQ),
             "k_max": ("int", _REQ), "reps": ("int", _REQ)},
    "lambda-c": {**_GRAPH, "geometry": ("str", "box"), "M": ("float", None),
                 "window": ("float", 40.0), "reps": ("int", _REQ), "tolerance": ("float", 0.02),
                 "lambda_lo": ("float", 0.5), "lambda_hi": ("float", 3.0)},
    "slab-curve": {**_GRAPH, "d": ("int", 3), "M_list": ("floats", [1.0, 2.0, 4.0, 8.0]),
                   "window": ("float", 16.0), "reps": ("int", _REQ),
                   "tolerance": ("float", 0.02), "lambda_lo": ("float", 0.3),
                   "lambda_hi": ("float", 3.0)},
    "decay": {**_GRAPH, "d": ("int", 3), "lambda": ("float", _REQ),
              "r_list": ("floats", [2.0, 4.0, 6.0, 8.0]), "R_outer": ("float", 24.0),
              "reps": ("int", _REQ)},
    "giant": {**_GRAPH, "lambda": ("float", _REQ), "s_list": ("floats", _REQ),
              "reps": ("int", _REQ), "theta_reps": ("int", 0)},
    "fkg": {**_GRAPH, "lambda": ("float", _REQ), "region": ("floats", _REQ),
            "event_a": ("str", _REQ), "event_b": ("str", _REQ), "reps": ("int", _REQ)},
    "explore": {**_GRAPH, "intensity": ("float", _REQ), "s": ("float", _REQ),
                "method": ("str", "cubewise"), "reps": ("int", 1)},
    "renorm": {"phi": ("str", "indicator:1"), "norm": ("str", "l2"), "d": ("int", 2),
               "m": ("int", _REQ), "n": ("int", _REQ), "lambda": ("float", _REQ),
               "eps1": ("float", _REQ), "eps0": ("float", 1 / 9999), "L": ("int", 1),
               "reps": ("int", 1), "strict": ("bool", False)},
    "oriented": {"p": ("float", _REQ), "L": ("int", _REQ), "reps": ("int", 1)},
    "constants": {"phi": ("str", "indicator:1"), "norm": ("str", "l2"), "d": ("int", _REQ),
                  "lambda": ("float", _REQ), "mu": ("float", _REQ), "m": ("int", _REQ),
                  "n": ("int", _REQ), "eps2": ("float", None), "eps2_reps": ("int", 1000)},
}

_CHOICES = {"geometry": ("box", "slab"), "method": ("sequential", "cubewise", "batch")}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict
    master_seed: int = 0
    out: str = "results"
    workers: int | None = None
    plot: bool = True
    explicit: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.parameters[key]

    def get(self, key, default=None):
        return self.parameters.get(key, default)


# ------------------------------------------------------------ formatting
def _fmt_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt(value) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, (bool, int, float)):
        return _fmt_number(value)
    return str(value)


def _norm_token(tok: str) -> str:
    low = tok.lower()
    if low in ("true", "yes", "on"):
        return "true"
    if low in ("false", "no", "off"):
        return "false"
    try:
        return str(int(tok))
    except ValueError:
        pass
    try:
        return _fmt_number(float(tok))
    except ValueError:
        return tok


def _split_lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key or not value:
            raise ConfigError("expected 'key = value'", no)
        yield no, key, value


def _ordered(keys):
    return sorted(keys, key=lambda k: (k != "experiment", k))


def normalize(text: str) -> str:
    """Canonical text: comments dropped, keys ordered, values in canonical form.

    Lists are split on commas and numbers and booleans are rewritten in the
    form :func:`serialize` uses; string values are kept verbatim.
    """
    pairs = {}
    for _, key, value in _split_lines(text):
        pairs[key] = value
    schema = {**_COMMON, **SCHEMA.get(pairs.get("experiment"), {})}
    out = {}
    for key, value in pairs.items():
        kind = schema.get(key, ("str", None))[0]
        if kind in ("ints", "floats"):
            out[key] = ", ".join(_norm_token(t.strip()) for t in value.split(",") if t.strip())
        elif kind == "str" or key == "experiment":
            out[key] = value
        elif kind == "bool":
            low = value.lower()
            out[key] = "true" if low in ("true", "yes", "on", "1") else \
                "false" if low in ("false", "no", "off", "0") else value
        else:
            out[key] = _norm_token(value)
    return "".join(f"{k} = {out[k]}\n" for k in _ordered(out))


def serialize(cfg: ExperimentConfig) -> str:
    """Text of the explicitly given keys; ``parse(serialize(c))`` equals ``c``."""
    values = {"experiment": cfg.experiment}
    for k in cfg.explicit:
        if k == "seed":
            values[k] = cfg.master_seed
        elif k in ("out", "workers", "plot"):
            values[k] = getattr(cfg, k)
        else:
            values[k] = cfg.parameters[k]
    return "".join(f"{k} = {_fmt(values[k])}\n" for k in _ordered(values))


# ------------------------------------------------------------ parsing
def _convert(kind, value, key, line):
    def one(tok, base):
        try:
            if base == "int":
                v = float(tok)
                if v != int(v):
                    raise ValueError
                return int(v)
            if base == "float":
                return float(tok)
        except ValueError:
            word = "an integer" if base == "int" else "a number"
            raise ConfigError(f"key '{key}' expects {word}, got {tok!r}", line) from None
        return tok

    if kind == "bool":
        low = value.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"key '{key}' expects true or false, got {value!r}", line)
    if kind in ("ints", "floats"):
        return [one(t.strip(), kind[:-1]) for t in value.split(",") if t.strip()]
    if "," in value and kind in ("int", "float"):
        raise ConfigError(f"key '{key}' expects a single value", line)
    return one(value, kind)


def _validate(exp: str, p: dict, lines: dict):
    def bad(msg, key):
        raise ConfigError(msg, lines.get(key))

    if "reps" in p and p["reps"] < 1:
        bad("reps must be ≥ 1", "reps")
    for key in ("d",):
        if key in p and p[key] < 1:
            bad("d must be ≥ 1", key)
    for key in ("lambda", "intensity", "eps1", "eps0", "mu"):
        if key in p and p[key] is not None and (not math.isfinite(p[key]) or p[key] < 0):
            bad(f"{key} must be finite and ≥ 0", key)
    for key in ("p", "eps1", "eps0", "eps2"):
        if key in p and p[key] is not None and not 0 <= p[key] <= 1:
            bad(f"{key} must lie in [0, 1]", key)
    for key in ("s", "window", "R_outer", "tolerance", "r_inner"):
        if key in p and not p[key] > 0:
            bad(f"{key} must be > 0", key)
    for key, options in _CHOICES.items():
        if key in p and p[key] not in options:
            bad(f"{key} must be one of {', '.join(options)}", key)
    if "L" in p and p["L"] < 0:
        bad("L must be ≥ 0", "L")
    if exp == "lambda-c" and p["geometry"] == "slab" and p.get("M") is None:
        bad("slab geometry needs M", "geometry")
    if exp in ("slab-curve",) and p["d"] < 3:
        bad("slab-curve needs d ≥ 3", "d")
    if exp == "renorm":
        if p["m"] < 1:
            bad("m must be ≥ 1", "m")
        if p["n"] <= 0 or p["n"] % (2 * p["m"]):
            bad("n must be a positive multiple of 2m", "n")
    if exp == "constants":
        if not p["mu"] > p["lambda"] > 0:
            bad("need mu > lambda > 0", "mu")
        if p["n"] <= 0 or p["n"] % (2 * p["m"]):
            bad("n must be a positive multiple of 2m", "n")
    if exp == "fkg" and len(p["region"]) != 2 * p["d"]:
        bad(f"region needs {2 * p['d']} numbers (lower corner, upper corner)", "region")
    if exp == "fkg":
        from .estimators.observables import parse_event
        for key in ("event_a", "event_b"):
            try:
                parse_event(p[key], p["d"])
            except ValueError as exc:
                bad(str(exc), key)
    if exp == "pi-k" and p["k_max"] < 1:
        bad("k_max must be ≥ 1", "k_max")
    for key in ("phi",):
        if key in p:
            from .connection import ConnectionFunctionError, parse_phi
            try:
                parse_phi(p[key])
            except (ConnectionFunctionError, ValueError, OSError) as exc:
                bad(f"invalid phi: {exc}", key)
    if "norm" in p:
        try:
            parse_norm(p["norm"])
        except ValueError as exc:
            bad(str(exc), "norm")


def parse_norm(text: str):
    from .geometry import Norm

    t = str(text).strip().lower()
    if t in ("linf", "inf", "sup"):
        return Norm(math.inf)
    if t.startswith("l"):
        t = t[1:]
    try:
        p = float(t)
    except ValueError:
        raise ValueError(f"unknown norm {text!r}") from None
    if p < 1:
        raise ValueError("norm exponent must be ≥ 1")
    return Norm(p)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration text."""
    raw, lines = {}, {}
    for no, key, value in _split_lines(text):
        if key in raw:
            raise ConfigError(f"duplicate key '{key}'", no)
        raw[key], lines[key] = value, no
    if "experiment" not in raw:
        raise ConfigError("missing key: experiment")
    exp = raw.pop("experiment")
    if exp not in SCHEMA:
        raise ConfigError(f"unknown experiment '{exp}'", lines["experiment"])
    schema = {**_COMMON, **SCHEMA[exp]}
    values = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' for experiment {exp}", lines[key])
        values[key] = _convert(schema[key][0], value, key, lines[key])
    params = {}
    for key, (kind, default) in SCHEMA[exp].items():
        if key in values:
            params[key] = values[key]
        elif default is _REQ:
            raise ConfigError(f"missing key: {key}")
        else:
            params[key] = list(default) if isinstance(default, list) else default
    _validate(exp, params, lines)
    workers = values.get("workers")
    if workers is not None and workers < 1:
        raise ConfigError("workers must be ≥ 1", lines["workers"])
    return ExperimentConfig(exp, params, values.get("seed", 0), values.get("out", "results"),
                            workers, values.get("plot", True), list(raw))
