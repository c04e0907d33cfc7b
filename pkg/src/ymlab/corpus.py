"""The calibration corpus: five flows on T^4 and the (R1, R2, x, t) evaluation grid
shared by the monotonicity, antibubbling and epsilon-regularity diagnostics."""

import math
from dataclasses import dataclass

import numpy as np

from . import flow, weighted
from .gauge import abelian_mode, bump_field, random_smooth_field, zero_field
from .lattice import build_torus

DELTA = 0.0025  # record spacing; R^2 = m * DELTA
T_FIRST = 0.06
N_TIMES = 10
M_PAIRS = ((4, 1), (9, 1), (9, 4), (16, 1), (16, 4), (16, 9), (25, 1), (25, 4), (25, 9), (25, 16))
RUNS = ("flat", "abelian", "random", "bump", "rescaled_bump")
RESCALE = 0.75
ANTIBUBBLE_RADII = (0.05, 0.1, 0.15, 0.2)


def corpus_geometry(N=16):
    return build_torus(4, N, 1.0, 0.25)


def initial_field(name, geom):
    c = (geom.N // 2,) * 4
    if name == "flat":
        return zero_field(geom)
    if name == "abelian":
        return abelian_mode(geom, 0.3, (1, 0, 0, 0), (0, 1, 0, 0))
    if name == "random":
        return random_smooth_field(geom, 0.3, 1, 7)
    if name == "bump":
        return bump_field(geom, c, 0.15, 2.0)
    if name == "rescaled_bump":
        # lam A(x0 + lam x) of the bump is a bump of width w / lam and amplitude lam * a
        return bump_field(geom, c, 0.15 / RESCALE, 2.0 * RESCALE)
    raise KeyError(name)


def record_times():
    last = T_FIRST + (N_TIMES - 1) * DELTA
    return [k * DELTA for k in range(1, int(round(last / DELTA)) + 1)]


def grid_times():
    return [T_FIRST + j * DELTA for j in range(N_TIMES)]


def radii():
    return [(math.sqrt(m1 * DELTA), math.sqrt(m2 * DELTA)) for m1, m2 in M_PAIRS]


def grid_sites(N):
    """Ten sites spread over the torus, all on the even sublattice of N (so they
    survive halving the resolution)."""
    base = np.array([[0, 0, 0, 0], [8, 8, 8, 8], [6, 8, 8, 8], [8, 10, 8, 8], [4, 4, 4, 4],
                     [10, 6, 8, 12], [12, 12, 2, 8], [2, 14, 6, 8], [8, 8, 4, 10], [14, 2, 10, 6]])
    return [tuple(int(c) for c in row * N // 16) for row in base]


@dataclass
class CorpusRun:
    name: str
    traj: object
    E0: float


def run_corpus(N=16, dt_factor=1.0, names=RUNS):
    """Integrate every corpus flow with dt = dt_factor * DELTA / 4."""
    geom = corpus_geometry(N)
    ts = record_times()
    dt = dt_factor * DELTA / 4
    out = []
    for name in names:
        tr = flow.run(initial_field(name, geom), ts[-1], record_times=ts, dt=dt)
        out.append(CorpusRun(name, tr, tr.energies[0]))
    return out


def _live(runs):
    return [r for r in runs if r.E0 > 0]


def monotonicity_margins(runs, C0, N=16):
    """Largest margin / ((R1^2 - R2^2) E0) over the grid: the smallest admissible C1."""
    worst = 0.0
    for r in _live(runs):
        for x in grid_sites(N):
            for R1, R2 in radii():
                for t in grid_times():
                    m, d = weighted.monotonicity_margin(r.traj, R1, R2, x, t, C0)
                    worst = max(worst, m / (d * r.E0))
    return worst


@dataclass(frozen=True)
class MonotonicitySweep:
    points: int
    violations: int
    unexplained: int  # violations above the Richardson error estimate


def monotonicity_sweep(runs, C0, C1, N=16):
    pts = viol = bad = 0
    for r in runs:
        for x in grid_sites(N):
            for R1, R2 in radii():
                for t in grid_times():
                    pts += 1
                    res = weighted.monotonicity_residual(r.traj, R1, R2, x, t, C0, C1, r.E0)
                    if res > 0:
                        viol += 1
                        bad += res > weighted.monotonicity_error(r.traj, R1, R2, x, t, C0)
    return MonotonicitySweep(pts, viol, bad)


def antibubble_fit(runs, N=16):
    """Per run, the smallest C with lhs <= C gamma over sites, radii and consecutive grid times."""
    out = {}
    ts = grid_times()
    for r in _live(runs):
        best = 0.0
        for x in grid_sites(N):
            for R in ANTIBUBBLE_RADII:
                for t1, t2 in zip(ts, ts[1:]):
                    rep = weighted.antibubble_residual(r.traj, R, x, t1, t2, r.E0)
                    if rep.bound > 0:
                        best = max(best, rep.lhs / rep.bound)
        out[r.name] = best
    return out


def eps_regularity_constants(runs, eps0, N=16):
    """Per run, the largest implied constant sup_{B_{R/2}} |F| R^2 / sqrt(Phi) over the
    grid points that satisfy the smallness hypothesis."""
    out = {}
    for r in _live(runs):
        cs = []
        for x in grid_sites(N):
            for R in ANTIBUBBLE_RADII:
                for t0 in grid_times():
                    try:
                        c = weighted.eps_regularity_constant(r.traj, R, x, t0, eps0)
                    except KeyError:  # t0 - R^2 not a record time
                        continue
                    if c is not None:
                        cs.append(c)
        if cs:
            out[r.name] = max(cs)
    return out
