"""Acceptance suite.  Each test prints one line `criterion N: PASS|FAIL  details`
and the lines are repeated in the terminal summary.

Expensive inputs (the three corpora and the N=32 abelian runs) are session fixtures,
so the whole file takes on the order of ten minutes on one core.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from ymlab import blowup, corpus, density, flow, singular
from ymlab.config import load_config
from ymlab.constants import EPS0, MONOTONICITY_C0, MONOTONICITY_C1
from ymlab.experiment import run_experiment
from ymlab.gauge import GaugeTransform, abelian_mode, abelian_rate, apply_gauge, random_smooth_field
from ymlab.lattice import build_torus
from ymlab.patching import (Cover, ball_patch, build_exhaustion_limit, coulomb_fix,
                            curvature_invariance_error, glue_cover)

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.json"))
K1 = (1, 0, 0, 0)


def abelian_run(N, dt=None, t_end=0.01):
    g = build_torus(4, N, 1.0, 0.25)
    A = abelian_mode(g, 0.3, K1, (0, 1, 0, 0))
    t = time.perf_counter()
    tr = flow.run(A, t_end, record_times=[0.005], dt=dt)
    return tr, time.perf_counter() - t


@pytest.fixture(scope="session")
def abelian32():
    return {dt: abelian_run(32, dt) for dt in (1e-4, 2e-4)}


@pytest.fixture(scope="session")
def abelian16():
    return abelian_run(16)[0]


@pytest.fixture(scope="session")
def corpus16():
    return corpus.run_corpus(16)


@pytest.fixture(scope="session")
def corpus16_half_dt():
    return corpus.run_corpus(16, dt_factor=0.5)


@pytest.fixture(scope="session")
def corpus8():
    return corpus.run_corpus(8)


def rel_identity(tr):
    return flow.energy_identity_residual(tr, 0.0, tr.times[-1]) / tr.energies[0]


def test_criterion_01_energy_identity(abelian32, verdict):
    (tr, secs), (tr2, _) = abelian32[1e-4], abelian32[2e-4]
    r1, r2 = rel_identity(tr), rel_identity(tr2)
    ok = r1 <= 1e-3 and r2 / r1 >= 1.8 and secs <= 120
    assert verdict(1, ok, f"residual {r1:.2e} (dt=1e-4), dt-halving gain {r2 / r1:.2f}x, "
                          f"runtime {secs:.0f} s")


def decay_rate_error(tr):
    T = tr.times[-1]
    rate = -math.log(tr.energies[-1] / tr.energies[0]) / T
    return abs(rate / (2 * abelian_rate(tr.geom, K1)) - 1)


def test_criterion_02_spectral_oracle(abelian32, abelian16, verdict):
    # evaluated at the resolution of the criterion-1 abelian run; N=16 is informational
    e32, e16 = decay_rate_error(abelian32[1e-4][0]), decay_rate_error(abelian16)
    assert verdict(2, e32 <= 1e-3, f"rate error {e32:.2e} at N=32 (N=16: {e16:.2e})")


def test_criterion_03_monotonicity(corpus16, verdict):
    sw = corpus.monotonicity_sweep(corpus16, MONOTONICITY_C0, MONOTONICITY_C1)
    frac = 1 - sw.violations / sw.points
    ok = len(corpus16) >= 5 and sw.points >= 1000 and frac >= 0.99 and sw.unexplained == 0
    assert verdict(3, ok, f"{sw.points} points, {sw.violations} violations "
                          f"({sw.unexplained} above the Richardson estimate), C0={MONOTONICITY_C0}, "
                          f"C1={MONOTONICITY_C1:g}")


def test_criterion_04_antibubble(corpus16, corpus16_half_dt, corpus8, verdict):
    fits = [corpus.antibubble_fit(corpus16, 16), corpus.antibubble_fit(corpus16_half_dt, 16),
            corpus.antibubble_fit(corpus8, 8)]
    spread = {name: max(f[name] for f in fits) / min(f[name] for f in fits) for name in fits[0]}
    worst = max(spread.values())
    detail = ", ".join(f"{k} {v:.3f}" for k, v in spread.items())
    assert verdict(4, worst <= 2.0, f"max/min fitted C across refinements: {detail}")


def test_criterion_05_eps_regularity(corpus16, verdict):
    cs = corpus.eps_regularity_constants(corpus16, EPS0)
    spread = max(cs.values()) / min(cs.values())
    detail = ", ".join(f"{k} {v:.3g}" for k, v in cs.items())
    assert verdict(5, len(cs) >= 4 and spread <= 10, f"spread {spread:.2f} over runs ({detail})")


def test_criterion_06_two_limits(verdict):
    t = time.perf_counter()
    gaps, worst_target = [], 0.0
    for k in (1, 2, 3):
        R = 20.0  # atom spacing 1
        mu = density.kplane_grid(k, 4, 1.0, (7 if k < 3 else 6) * R)
        rep = density.two_limit_check(mu, np.zeros(4), k, [2 * R, 1.5 * R, R])
        gaps.append(rep.terminal_gap)
        target = density.unit_ball_volume(k)
        worst_target = max(worst_target, abs(rep.lhs[-1] / target - 1), abs(rep.rhs[-1] / target - 1))
    closed = [density.unit_ball_volume(k) for k in (1, 2, 3)]
    closed_ok = np.allclose(closed, [2.0, math.pi, 4 * math.pi / 3], rtol=1e-14)
    ok = max(gaps) <= 0.02 and worst_target <= 0.02 and closed_ok
    assert verdict(6, ok, "terminal gaps " + ", ".join(f"{g:.1e}" for g in gaps)
                   + f"; worst deviation from 2, pi, 4pi/3: {worst_target:.1e}; "
                   f"{time.perf_counter() - t:.0f} s")


def test_criterion_07_laplace(verdict):
    errs = []
    for eps, N0, k in ((0.2, 2, 2), (0.1, 2, 1)):
        ker = density.build_chi_approx(eps, N0, k)
        errs += [abs(density.laplace_reconstruct(ker, x) - ker.value(x)) for x in (0.0, 1.0, 4.0)]
    assert verdict(7, max(errs) <= 1e-6, f"max reconstruction error {max(errs):.1e}")


def test_criterion_08_hausdorff(verdict):
    lines, ok = [], True
    for n in (4, 5, 6):
        g = build_torus(n, 16, 1.0, 1.0)
        pts = singular.plane_sites(g, list(range(n - 4)))
        est = [singular.hausdorff_estimate(g, pts, n - 4, 5 * m * g.h) for m in (8, 4, 2, 1)]
        within = 1 / 3 <= est[-1] <= 3
        stable = abs(est[-1] - est[-2]) <= 0.1 * est[-2]
        ok &= within and stable
        lines.append(f"T^{n} {est[-1]:.3g} ({'ok' if within and stable else 'out'})")
    g = build_torus(5, 16, 1.0, 1.0)
    deltas = [5 * m * g.h for m in (8, 4, 2, 1)]
    pt = [singular.hausdorff_estimate(g, [[0] * 5], 1, d) for d in deltas]
    vanishing = all(b < a for a, b in zip(pt, pt[1:])) and pt[-1] <= deltas[-1] * 1.01
    ok &= vanishing
    lines.append("point " + " > ".join(f"{p:.3g}" for p in pt))
    assert verdict(8, ok, "; ".join(lines) + " (target L^(n-4) = 1)")


def wavy_gauge(g, amp, phase):
    pos = g.positions()
    x = np.stack([amp * np.sin(2 * np.pi * (pos[..., 0] + phase)),
                  amp * np.cos(2 * np.pi * (pos[..., 1] - pos[..., 2] + phase)),
                  amp * np.sin(2 * np.pi * (pos[..., 3] + 2 * phase))], -1)
    return GaugeTransform.from_algebra(g, x)


def coulomb_path_error(N):
    g = build_torus(4, N, 1.0, 0.25)
    f = apply_gauge(random_smooth_field(g, 0.4, 1, 5), wavy_gauge(g, 0.2, 0.2))
    p = ball_patch(g, (N // 2,) * 4, 0.55, round(0.25 / g.h))
    return curvature_invariance_error(f, coulomb_fix(f, p, 1e-2, 5000).field, p.margin)


def glue_path_error(N):
    g = build_torus(4, N, 1.0, 0.25)
    A = random_smooth_field(g, 0.4, 1, 5)
    seq = [apply_gauge(A, wavy_gauge(g, 0.1 * j, 0.1 * j)) for j in range(3)]
    c = N // 2
    out = glue_cover(seq, Cover(((c - N // 8, c, c, c), (c + N // 8, c, c, c)), 0.55, 0.25, 0.0625),
                     1e-2, 5000)
    return max(curvature_invariance_error(A, f, out.patch.margin) for f in out.fields if f is not None)


def test_criterion_09_gauge_pipeline(verdict):
    coul = [coulomb_path_error(N) for N in (8, 16)]
    glue = [glue_path_error(N) for N in (8, 16)]
    g = build_torus(4, 16, 1.0, 0.25)
    A = random_smooth_field(g, 0.4, 1, 5)
    seq = [apply_gauge(A, wavy_gauge(g, 0.1 * j, 0.1 * j)) for j in range(2)]
    cs = ((5, 8, 8, 8), (8, 8, 8, 8), (11, 8, 8, 8))
    lim = build_exhaustion_limit(seq, [Cover(cs[:k], 0.55, 0.25, 0.0625) for k in (1, 2, 3)])
    cocycle = lim.cocycle_residual(0)
    gains = (coul[0] / coul[1], glue[0] / glue[1])
    ok = min(gains) >= 3.5 and cocycle <= 1e-8
    assert verdict(9, ok, f"|F|^2 drift under h-halving: Coulomb {coul[0]:.3g} -> {coul[1]:.3g} "
                          f"({gains[0]:.1f}x), glued {glue[0]:.3g} -> {glue[1]:.3g} ({gains[1]:.1f}x); "
                          f"cocycle {cocycle:.1e}")


def scaling_error(tr):
    N = tr.geom.N
    bar, win = blowup.parabolic_rescale(tr, (N // 4, N // 8, 0, N // 2), 0.005, 0.5,
                                        build_torus(4, N, 1.0, 1.0))
    worst = 0.0
    for t in bar.times:
        for R in (0.05, 0.1, 0.2, 0.4):
            a, b = blowup.phi_window(win, bar, R, t), blowup.phi_source(win, R, t)
            worst = max(worst, abs(a - b) / b)
    return worst


def test_criterion_10_blowup_scaling(abelian16, abelian32, verdict):
    e16, e32 = scaling_error(abelian16), scaling_error(abelian32[1e-4][0])
    ok = e16 <= 0.03 and e32 <= 0.01
    assert verdict(10, ok, f"max relative Phi mismatch {e16:.2%} at N=16, {e32:.2%} at N=32")


def test_criterion_11_derivative_identity(verdict):
    gains = {}
    for name in ("abelian", "bump", "rescaled_bump"):
        r = [blowup.derivative_identity_check(corpus.initial_field(name, corpus.corpus_geometry(N)))
             for N in (16, 32)]
        gains[name] = r[0] / r[1]
    ok = min(gains.values()) >= 3.5
    assert verdict(11, ok, "residual drop N=16 -> 32: "
                   + ", ".join(f"{k} {v:.1f}x" for k, v in gains.items()))


def test_criterion_12_determinism(tmp_path, verdict):
    same = []
    for path in CONFIGS:
        cfg = load_config(path)
        a, b = tmp_path / f"{path.stem}_a", tmp_path / f"{path.stem}_b"
        run_experiment(cfg, out_dir=a)
        run_experiment(cfg, out_dir=b)
        names = sorted(p.name for p in a.iterdir())
        same.append(names == sorted(p.name for p in b.iterdir())
                    and all((a / n).read_bytes() == (b / n).read_bytes() for n in names))
    ok = bool(CONFIGS) and all(same)
    assert verdict(12, ok, "byte-identical outputs for " + ", ".join(
        f"{p.name} {'yes' if s else 'NO'}" for p, s in zip(CONFIGS, same)))
