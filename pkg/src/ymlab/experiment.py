"""One experiment end to end: initial data, flow, analysis stages, reports.

Every output is a pure function of the config, so two runs write identical bytes.
"""

from pathlib import Path

import numpy as np

from . import __version__, blowup, flow, patching, persist, singular, weighted
from .config import ExperimentConfig
from .constants import MONOTONICITY_C0, MONOTONICITY_C1
from .density import two_limit_check
from .gauge import abelian_mode, bump_field, random_smooth_field, zero_field


class StageFailure(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class OutputDirError(OSError):
    pass


def initial_field(cfg, geom):
    ini = cfg.initial
    if ini.kind == "flat":
        return zero_field(geom)
    if ini.kind == "abelian":
        return abelian_mode(geom, ini.amplitude, ini.k, ini.v, ini.direction)
    if ini.kind == "random":
        return random_smooth_field(geom, ini.amplitude, ini.cutoff_wavenumber, ini.seed)
    center = ini.center or (geom.N // 2,) * geom.n
    return bump_field(geom, center, ini.width, ini.amplitude, ini.direction)


def _centers(cfg, geom):
    return [tuple(int(c) for c in x) for x in cfg.analysis.centers] or [(geom.N // 2,) * geom.n]


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except flow.FlowDivergence:
        raise
    except (ValueError, KeyError, ArithmeticError, RuntimeError) as err:
        raise StageFailure(name, err) from err


def _run_flow(cfg, geom):
    f = cfg.flow
    return flow.run(initial_field(cfg, geom), f.t_end, record_times=f.record_times,
                    dt=f.dt, cfl=f.cfl)


def _energy_rows(traj):
    E0 = traj.energies[0]
    rows = []
    for t, E, D in zip(traj.times, traj.energies, traj.dissipation):
        rows.append((t, E, D, abs(E + 2 * D - E0)))
    return rows


def _phi_rows(traj, scales, centers):
    rows = []
    for x in centers:
        for R in scales:
            for i, t in enumerate(traj.times):
                p = weighted.phi_density(traj.energy_density(i), traj.geom, R, x)
                rows.append((t, R, *x, p, weighted.xi(traj, R, x, 0.0, t)))
    return rows


def _monotonicity_rows(traj, scales, centers, E0):
    """Every (R1 > R2, x, t) whose back time t - R1^2 + R2^2 is a recorded snapshot."""
    rows = []
    rs = sorted(scales, reverse=True)
    for x in centers:
        for a, R1 in enumerate(rs):
            for R2 in rs[a + 1:]:
                for t in traj.times:
                    s = t - R1 * R1 + R2 * R2
                    if s < -1e-12:
                        continue
                    try:
                        traj.index(max(s, 0.0))
                    except KeyError:
                        continue
                    res = weighted.monotonicity_residual(traj, R1, R2, x, t, MONOTONICITY_C0,
                                                        MONOTONICITY_C1, E0)
                    err = weighted.monotonicity_error(traj, R1, R2, x, t, MONOTONICITY_C0)
                    rows.append((t, R1, R2, *x, res, err))
    return rows


def _sigma_sites(traj, eps0, schedule):
    """Sites with Phi(R, x, t_end) >= eps0 for every R of the schedule."""
    keep = None
    for R in schedule:
        vals = singular.density_map(traj, R, t=traj.times[-1]).values >= eps0
        keep = vals if keep is None else keep & vals
    return np.argwhere(keep)


def _hausdorff_rows(traj, an):
    pts = _sigma_sites(traj, an.eps0, an.R_schedule)
    rows = [(d, an.hausdorff_k, len(pts), singular.hausdorff_estimate(traj.geom, pts, an.hausdorff_k, d))
            for d in an.hausdorff_deltas]
    return rows, len(pts)


def _density_rows(traj, an, center):
    g = traj.geom
    mu = singular.snapshot_measure(traj.fields[-1])
    x = np.asarray(center, float) * g.h
    rep = two_limit_check(mu, x, an.density_k, sorted(an.density_R, reverse=True))
    return [(R, a, b) for R, a, b in zip(rep.radii, rep.lhs, rep.rhs)], rep.terminal_gap


def _coulomb(traj, an, center):
    field = traj.fields[-1]
    patch = patching.ball_patch(field.geom, center, an.coulomb_radius)
    res = patching.coulomb_fix(field, patch, an.coulomb_tol, an.coulomb_max_iters)
    inv = patching.curvature_invariance_error(field, res.field, patch.margin)
    return {"center": list(center), "radius": an.coulomb_radius, "residual": res.residual,
            "iterations": res.iterations, "curvature_invariance": inv}


def _blowup(traj, an):
    g = traj.geom
    win = blowup.SearchWindow(tuple(traj.times), g.rho1, g.h)
    found = blowup.select_blowup_center(traj, an.eps0, an.blowup_plane, win)
    if isinstance(found, blowup.NoCrossing):
        return {"outcome": "no_crossing", "max_phi": found.max_phi}
    x0 = [0] * g.n
    free = [a for a in range(g.n) if a not in an.blowup_plane]
    for a, c in zip(an.blowup_plane, found.y):
        x0[a] = c
    for a, c in zip(free, found.z):
        x0[a] = c
    # target window [-c / delta^2, c / delta^2] around t + delta^2, in source time
    mid = found.t + found.delta ** 2
    lo = traj.times[traj.nearest(max(mid - an.blowup_window_c, 0.0))]
    hi = traj.times[traj.nearest(mid + an.blowup_window_c)]
    xi2 = weighted.xi(traj, found.delta, tuple(x0), lo, hi)
    plane_e = blowup.plane_component_energy(traj.field_at(found.t), tuple(an.blowup_plane))
    return {"outcome": "center", "y": list(found.y), "z": list(found.z), "site": x0,
            "t": found.t, "delta": found.delta, "phi": found.phi,
            "xi_window": [lo, hi], "xi_squared": xi2, "plane_energy": plane_e}


def run_experiment(cfg: ExperimentConfig, out_dir=None, verbose=False):
    """Run the flow and every configured analysis stage; returns the summary dict."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    if not out.is_dir():
        if out.exists() or not cfg.create_output:
            raise OutputDirError(f"output directory {out} does not exist")
        out.mkdir(parents=True)
    log = print if verbose else (lambda *a: None)
    geom = cfg.geom()
    an = cfg.analysis
    centers = _centers(cfg, geom)
    csv = {}

    log(f"flow: n={geom.n} N={geom.N} t_end={cfg.flow.t_end}")
    traj = _stage("flow", _run_flow, cfg, geom)
    E0 = traj.energies[0]
    csv["energy"] = ([("t", "time"), ("E", "energy"), ("dissipation", "energy"),
                      ("identity_residual", "energy")], _energy_rows(traj))
    for i, t in enumerate(traj.times):
        persist.save_checkpoint(out / f"checkpoint_{i:03d}.ymck", t, traj.fields[i])

    coords = [(f"x{a}", "site") for a in range(geom.n)]
    log("weighted energy")
    csv["phi"] = ([("t", "time"), ("R", "length")] + coords
                  + [("Phi", "energy"), ("Xi", "energy")],
                  _stage("weighted_energy", _phi_rows, traj, an.phi_scales, centers))
    summary = {"version": __version__, "steps": traj.steps, "E0": E0,
               "E_final": traj.energies[-1],
               "identity_residual": abs(traj.energies[-1] + 2 * traj.dissipation[-1] - E0),
               "times": traj.times,
               "R0": an.R0,
               "outside_calibrated_range": sorted({R for R in (*an.phi_scales, *an.R_schedule)
                                                    if R > an.R0})}
    if summary["outside_calibrated_range"]:
        log(f"warning: radii {summary['outside_calibrated_range']} exceed R0={an.R0}")

    if an.monotonicity:
        log("monotonicity")
        rows = _stage("monotonicity", _monotonicity_rows, traj, an.phi_scales, centers, E0)
        csv["monotonicity"] = ([("t", "time"), ("R1", "length"), ("R2", "length")] + coords
                               + [("residual", "energy"), ("richardson_error", "energy")], rows)
        summary["monotonicity"] = {"C0": MONOTONICITY_C0, "C1": MONOTONICITY_C1,
                                   "points": len(rows),
                                   "violations": sum(r[-2] > 0 for r in rows),
                                   "max_residual": max((r[-2] for r in rows), default=0.0)}

    if an.hausdorff_deltas:
        log("singular set")
        rows, count = _stage("singular_set", _hausdorff_rows, traj, an)
        csv["hausdorff"] = ([("delta", "length"), ("k", "1"), ("sigma_sites", "1"),
                             ("estimate", "length^k")], rows)
        summary["sigma_sites"] = count

    if an.density_k and an.density_R:
        log("density")
        rows, gap = _stage("density_measures", _density_rows, traj, an, centers[0])
        csv["density"] = ([("R", "length"), ("mass_ratio", "mass/length^k"),
                           ("gaussian_ratio", "mass/length^k")], rows)
        summary["density_terminal_gap"] = gap

    if an.coulomb_radius:
        log("coulomb gauge")
        summary["coulomb"] = _stage("gauge_patching", _coulomb, traj, an, centers[0])

    if an.blowup:
        log("blowup center")
        summary["blowup"] = _stage("blowup", _blowup, traj, an)

    for name, (cols, rows) in csv.items():
        persist.write_csv(out / f"{name}.csv", cols, rows)
    persist.write_json(out / "summary.json", summary)
    log(f"wrote {len(csv) + 1} reports and {len(traj.times)} checkpoints to {out}")
    return summary
