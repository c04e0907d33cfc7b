"""Command line: run an experiment, validate a checkpoint, or analyse a measure."""

import argparse
import json
import sys

import numpy as np

from . import persist
from .config import ConfigError, load_config
from .density import PointMeasure, two_limit_check
from .experiment import StageFailure, run_experiment
from .flow import FlowDivergence
from .gauge import energy

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4

_DENSITY_KEYS = {"k", "center", "R_schedule", "floor"}


def _run(args):
    cfg = load_config(args.config)
    run_experiment(cfg, out_dir=args.out, verbose=args.verbose)


def _check(args):
    t, field = persist.load_checkpoint(args.checkpoint)
    g = field.geom
    print(json.dumps({"ok": True, "n": g.n, "N": g.N, "L": g.L, "tau": g.tau, "order": g.order,
                      "time": t, "energy": energy(field)}, sort_keys=True))


def _density_params(path):
    with open(path) as fh:
        try:
            p = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(str(path), f"invalid JSON at line {err.lineno}: {err.msg}") from err
    if not isinstance(p, dict):
        raise ConfigError(str(path), "expected an object")
    extra = sorted(set(p) - _DENSITY_KEYS)
    if extra:
        raise ConfigError(extra[0], "unknown field")
    for key in ("k", "center", "R_schedule"):
        if key not in p:
            raise ConfigError(key, "required")
    if not isinstance(p["k"], int) or isinstance(p["k"], bool) or p["k"] < 0:
        raise ConfigError("k", "must be a nonnegative integer")
    if not isinstance(p["R_schedule"], list) or not p["R_schedule"]:
        raise ConfigError("R_schedule", "must be a nonempty list")
    return p


def _density(args):
    params = _density_params(args.params)
    header, rows = persist.read_csv(args.measure)
    if not rows:
        raise ConfigError(args.measure, "measure has no atoms")
    data = np.asarray(rows, float)
    mu = PointMeasure(data[:, :-1], data[:, -1])
    center = np.asarray(params["center"], float)
    if center.shape != (mu.dim,):
        raise ConfigError("center", f"needs {mu.dim} coordinates")
    try:
        rep = two_limit_check(mu, center, params["k"], params["R_schedule"], params.get("floor"))
    except ValueError as err:
        raise ConfigError("R_schedule", str(err)) from err
    print(json.dumps({"k": params["k"], "radii": rep.radii.tolist(), "mass_ratio": rep.lhs.tolist(),
                      "gaussian_ratio": rep.rhs.tolist(), "terminal_gap": rep.terminal_gap},
                     indent=2, sort_keys=True))


def build_parser():
    ap = argparse.ArgumentParser(prog="ymlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (overrides the config)")
    r.add_argument("--verbose", action="store_true")
    r.set_defaults(func=_run)
    c = sub.add_parser("check", help="validate a checkpoint file")
    c.add_argument("checkpoint")
    c.set_defaults(func=_check)
    d = sub.add_parser("density", help="two-limit density analysis of a weighted point cloud")
    d.add_argument("measure", help="CSV: one column per coordinate, then the weight")
    d.add_argument("params", help="JSON with k, center, R_schedule and optional floor")
    d.set_defaults(func=_density)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FlowDivergence as err:
        print(f"flow diverged: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except StageFailure as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAILURE
    except (persist.CheckpointError, OSError) as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK
