"""``rcm-lab``: run one configured experiment and write its artifacts.

Usage: ``rcm-lab <experiment> --config FILE [--seed N] [--out DIR] [--workers K]``.

Exit codes: 0 on success, 1 for invalid input, 2 when the run itself fails.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, parse_config, parse_norm, serialize
from .connection import parse_phi
from .geometry import Box, lam
from .rng import Stream, tag

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _rows_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _num(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else x


class _Outputs:
    def __init__(self, out: Path):
        self.dir = out
        self.files: list = []
        self.plot: tuple | None = None

    def path(self, name) -> Path:
        self.files.append(name)
        return self.dir / name

    def records(self, records, stem="results"):
        from .estimators.records import records_to_csv

        records_to_csv(records, self.path(f"{stem}.csv"))
        with open(self.path(f"{stem}.jsonl"), "w") as fh:
            for r in records:
                fh.write(r.to_json() + "\n")


# ------------------------------------------------------------------ experiments
def _phi_norm(p):
    return parse_phi(p["phi"]), parse_norm(p["norm"])


def _exp_sample(cfg, stream, out):
    from .point_process import sample_homogeneous

    p = cfg.parameters
    pts = sample_homogeneous(p["intensity"], lam(p["s"], p["d"]), stream.child(tag("points")))
    pts.to_csv(out.path("points.csv"))


def _exp_graph(cfg, stream, out):
    from .graph import build_graph, components
    from .point_process import sample_homogeneous

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    pts = sample_homogeneous(p["intensity"], lam(p["s"], p["d"]), stream.child(tag("points")))
    g = build_graph(pts, phi, norm, stream.child(tag("edges")))
    pts.to_csv(out.path("points.csv"))
    g.to_csv(out.path("edges.csv"))
    cd = components(g)
    _rows_csv(out.path("components.csv"), ["label", "size"], list(enumerate(cd.sizes.tolist())))
    out.plot = ("components.csv", "label", "size")


def _exp_theta(cfg, stream, out):
    from .estimators.observables import estimate_theta

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    recs = estimate_theta(p["lambda"], phi, norm, p["d"], p["r_inner"], p["R_outer"], p["reps"],
                          stream, p["R_levels"], cfg.workers, cfg.master_seed)
    out.records(recs)


def _exp_pik(cfg, stream, out):
    from .estimators.observables import estimate_pi_k

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    recs = estimate_pi_k(p["lambda"], phi, lam(p["s"], p["d"]), p["k_max"], p["reps"], stream,
                         norm, cfg.workers, cfg.master_seed)
    out.records(recs)
    _rows_csv(out.path("pi_k.csv"), ["k", "pi_hat", "std_error"],
              [(r.parameters["k"], _num(r.value), _num(r.std_error)) for r in recs])
    out.plot = ("pi_k.csv", "k", "pi_hat")


def _exp_lambda_c(cfg, stream, out):
    from .estimators.threshold import estimate_lambda_c

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    rec = estimate_lambda_c(phi, norm, p["d"], p["geometry"], p["window"], p["reps"],
                            p["tolerance"], stream, p["M"], p["lambda_lo"], p["lambda_hi"],
                            cfg.workers, cfg.master_seed)
    out.records([rec])
    _rows_csv(out.path("curve.csv"), ["lambda", "crossing_p"],
              [(_num(a), _num(b)) for a, b in zip(rec.parameters["curve_lambda"],
                                                  rec.parameters["curve_p"])])
    out.plot = ("curve.csv", "lambda", "crossing_p")


def _exp_slab(cfg, stream, out):
    from .estimators.threshold import slab_curve

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    recs = slab_curve(phi, norm, p["d"], p["M_list"], p["window"], p["reps"], p["tolerance"],
                      stream, p["lambda_lo"], p["lambda_hi"], cfg.workers, cfg.master_seed)
    out.records(recs)
    rows = []
    for r in recs:
        M = r.parameters.get("M", "inf")
        rows.append((_num(M) if M != "inf" else M, _num(r.value), _num(r.parameters["bracket_lo"]),
                     _num(r.parameters["bracket_hi"]), r.replications))
    _rows_csv(out.path("slab_curve.csv"), ["M", "lambda_c_hat", "bracket_lo", "bracket_hi", "reps"],
              rows)
    out.plot = ("slab_curve.csv", "M", "lambda_c_hat")


def _exp_decay(cfg, stream, out):
    from .estimators.observables import decay_probe

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    recs = decay_probe(p["lambda"], phi, p["d"], p["r_list"], p["R_outer"], p["reps"], stream,
                       norm, cfg.workers, cfg.master_seed)
    out.records(recs)
    qs = [r for r in recs if r.name == "q"]
    _rows_csv(out.path("decay.csv"), ["r", "q_hat", "std_error"],
              [(_num(r.parameters["r"]), _num(r.value), _num(r.std_error)) for r in qs])
    out.plot = ("decay.csv", "r", "q_hat")


def _exp_giant(cfg, stream, out):
    from .estimators.observables import giant_stats

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    recs = giant_stats(p["lambda"], phi, p["d"], p["s_list"], p["reps"], stream, norm,
                       p["theta_reps"], cfg.workers, cfg.master_seed)
    out.records(recs)
    by_s: dict = {}
    for r in recs:
        by_s.setdefault(r.parameters["s"], {})[r.name] = r.value
    _rows_csv(out.path("giant.csv"), ["s", "L1_density", "L2_density"],
              [(_num(s), _num(v["L1_density"]), _num(v["L2_density"])) for s, v in by_s.items()])
    out.plot = ("giant.csv", "s", "L1_density")


def _exp_fkg(cfg, stream, out):
    from .estimators.observables import fkg_check, parse_event

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    d = p["d"]
    region = Box(tuple(p["region"][:d]), tuple(p["region"][d:]))
    try:
        a, b = parse_event(p["event_a"], d), parse_event(p["event_b"], d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rec = fkg_check(p["lambda"], phi, region, a, b, p["reps"], stream, norm, cfg.workers,
                    cfg.master_seed)
    out.records([rec])


def _exp_explore(cfg, stream, out):
    from .exploration.growth import grow_cubewise, grow_sequential
    from .geometry import CubeUnion, lattice_sites
    from .graph import set_cluster
    from .point_process import PointSet, sample_homogeneous

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    d = p["d"]
    box = lam(p["s"], d)
    origin = PointSet.origin(d)
    rows = []
    for r in range(p["reps"]):
        s = stream.child(r)
        if p["method"] == "sequential":
            cl, _ = grow_sequential(origin, p["intensity"], box, phi, norm, s)
        elif p["method"] == "cubewise":
            dom = CubeUnion(corners=lattice_sites(box), dim=d)
            cl, _, _ = grow_cubewise(origin, p["intensity"], dom, phi, norm, s)
        else:
            pts = sample_homogeneous(p["intensity"], box, s.child(tag("points")))
            cl = set_cluster(origin, pts, phi, norm, s.child(tag("edges")))
        rows.append((r, len(cl)))
        if r == 0:
            cl.to_csv(out.path("cluster_rep0.csv"))
    _rows_csv(out.path("cluster_sizes.csv"), ["rep", "size"], rows)
    out.plot = ("cluster_sizes.csv", "rep", "size")


def _exp_renorm(cfg, stream, out):
    from .exploration.renormalization import ToyConstants, run_renormalization

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    c = ToyConstants(d=p["d"], m=p["m"], n=p["n"], lam=p["lambda"], eps1=p["eps1"],
                     eps0=p["eps0"])
    rows = []
    for r in range(p["reps"]):
        res = run_renormalization(c, p["L"], phi, norm, stream.child(r), p["strict"])
        name = "stages.jsonl" if p["reps"] == 1 else f"stages_{r}.jsonl"
        res.write_jsonl(out.path(name))
        rows.append((r, res.records[0].status, len(res.reachable()), len(res.xi),
                     len(res.violations)))
    _rows_csv(out.path("renorm_summary.csv"),
              ["run", "origin_status", "reachable_sites", "xi_size", "violations"], rows)


def _exp_oriented(cfg, stream, out):
    from .estimators.records import EstimateRecord, binomial
    from .exploration.oriented import oriented_site_percolation

    p = cfg.parameters
    rows = []
    for r in range(p["reps"]):
        ok, front = oriented_site_percolation(p["p"], p["L"], stream.child(r))
        rows.append((r, int(ok), len(front)))
    _rows_csv(out.path("oriented_runs.csv"), ["run", "survives", "frontier_size"], rows)
    est, se = binomial(sum(x[1] for x in rows), p["reps"])
    out.records([EstimateRecord("survival", est, se, p["reps"], cfg.master_seed,
                                {"p": p["p"], "L": p["L"]})])


def _exp_constants(cfg, stream, out):
    from .estimators.constants import constants

    p = cfg.parameters
    phi, norm = _phi_norm(p)
    b = constants(p["lambda"], p["mu"], p["d"], p["m"], p["n"], phi, stream, p["eps2"],
                  p["eps2_reps"], norm)
    data = b.as_dict()
    with open(out.path("constants.json"), "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    _rows_csv(out.path("constants.csv"), ["name", "value"],
              [(k, _num(v) if isinstance(v, float) else v) for k, v in sorted(data.items())])


RUNNERS = {"sample": _exp_sample, "graph": _exp_graph, "theta": _exp_theta, "pi-k": _exp_pik,
           "lambda-c": _exp_lambda_c, "slab-curve": _exp_slab, "decay": _exp_decay,
           "giant": _exp_giant, "fkg": _exp_fkg, "explore": _exp_explore,
           "renorm": _exp_renorm, "oriented": _exp_oriented, "constants": _exp_constants}


_PLOT = '''"""Plot {csv} ({x} against {y}); needs matplotlib."""
import csv
import sys

import matplotlib.pyplot as plt

with open("{csv}", newline="") as fh:
    rows = [r for r in csv.DictReader(fh)]
xs = [float(r["{x}"]) for r in rows]
ys = [float(r["{y}"]) for r in rows]
plt.plot(xs, ys, "o-")
plt.xlabel("{x}")
plt.ylabel("{y}")
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "{stem}.png", dpi=120)
'''


def run(cfg: ExperimentConfig, out_dir=None) -> int:
    """Run a validated configuration; returns the exit code."""
    out = _Outputs(Path(out_dir if out_dir is not None else cfg.out))
    out.dir.mkdir(parents=True, exist_ok=True)
    stream = Stream.root(cfg.master_seed).child(tag(cfg.experiment))
    t0 = time.perf_counter()
    status, error = EXIT_OK, None
    try:
        RUNNERS[cfg.experiment](cfg, stream, out)
    except ConfigError as exc:
        status, error = EXIT_INVALID, str(exc)
    except Exception as exc:  # noqa: BLE001 - any failure of the run maps to exit code 2
        status, error = EXIT_FAILED, f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - t0
    if status == EXIT_OK and cfg.plot and out.plot is not None:
        name, x, y = out.plot
        stem = Path(name).stem
        (out.dir / "plot.py").write_text(_PLOT.format(csv=name, x=x, y=y, stem=stem))
        out.files.append("plot.py")
    hashes = {}
    for name in out.files:
        f = out.dir / name
        if f.exists():
            hashes[name] = hashlib.sha256(f.read_bytes()).hexdigest()
    manifest = {"experiment": cfg.experiment, "master_seed": cfg.master_seed,
                "config": serialize(cfg), "version": __version__, "wall_time_s": wall,
                "workers": cfg.workers, "status": status, "error": error, "outputs": hashes,
                "python": platform.python_version(), "numpy": np.__version__}
    with open(out.dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if error:
        print(f"rcm-lab: {error}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    parser = _Parser(prog="rcm-lab", description="Random connection model experiments.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out")
    parser.add_argument("--workers", type=int)
    try:
        args = parser.parse_args(argv)
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config(text)
        if cfg.experiment != args.experiment:
            raise ConfigError(f"config is for experiment '{cfg.experiment}', "
                              f"not '{args.experiment}'")
        if args.seed is not None:
            cfg.master_seed = args.seed
            if "seed" not in cfg.explicit:
                cfg.explicit.append("seed")
        if args.out is not None:
            cfg.out = args.out
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("workers must be ≥ 1")
            cfg.workers = args.workers
    except ConfigError as exc:
        print(f"rcm-lab: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
