import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ymlab import flow, weighted
from ymlab.gauge import (GaugeField, GaugeTransform, abelian_mode, apply_gauge, constant_field,
                         curvature, random_smooth_field, zero_field)
from ymlab.lattice import build_torus, cutoff_profile


def test_gaussian_weight_examples():
    for n in (4, 5, 6):
        g = build_torus(n, 8, 1.0, 0.25)
        R = 0.1
        peak = R ** (4 - n) * (4 * math.pi) ** (-n / 2)
        assert weighted.gaussian_weight(g, R, (0,) * n, (0,) * n) == pytest.approx(peak, rel=1e-15)
        y = (2,) + (0,) * (n - 1)  # d = 0.25
        assert weighted.gaussian_weight(g, 0.125, (0,) * n, y) == pytest.approx(
            0.125 ** (4 - n) * (4 * math.pi) ** (-n / 2) / math.e, rel=1e-14)


@given(st.integers(4, 7), st.floats(0.01, 1.0), st.floats(0.1, 3.0), st.floats(0.0, 2.0))
def test_gaussian_weight_homogeneous(n, R, lam, s):
    lhs = weighted.gaussian_profile(n, lam * R, lam * s)
    assert lhs == pytest.approx(lam ** (4 - n) * weighted.gaussian_profile(n, R, s), rel=1e-12)


def test_phi_flat_and_constant(g16):
    assert weighted.phi(zero_field(g16), 0.1, (0, 0, 0, 0)) == 0
    fld = constant_field(g16, np.eye(4, 3))
    c = curvature(fld).sq().flat[0]
    R, rho = 0.1, g16.rho1
    r = np.linspace(0, rho, 20001)
    integrand = weighted.gaussian_profile(4, R, r) * cutoff_profile(r / rho) ** 2 * 2 * math.pi ** 2 * r ** 3
    oracle = c * np.trapezoid(integrand, r) if hasattr(np, "trapezoid") else c * np.trapz(integrand, r)
    coarse = weighted.phi(fld, R, (3, 1, 4, 1))
    assert coarse == pytest.approx(oracle, rel=1e-2)
    g32 = build_torus(4, 32, 1.0, 0.25)
    fine = weighted.phi(constant_field(g32, np.eye(4, 3)), R, (0, 0, 0, 0))
    assert abs(fine - oracle) < abs(coarse - oracle) / 4


def test_phi_rejects_large_R(g8):
    with pytest.raises(ValueError):
        weighted.phi(zero_field(g8), 2 * g8.rho1, (0, 0, 0, 0))


def test_phi_gauge_invariant():
    errs = []
    for N in (8, 16):
        g = build_torus(4, N, 1.0, 0.25)
        x = g.positions() * 2 * np.pi
        u = GaugeTransform.from_algebra(g, 0.4 * np.stack([np.sin(x[..., 0]), np.cos(x[..., 1]),
                                                           np.sin(x[..., 2])], -1))
        fld = GaugeField(g, abelian_mode(g, 0.5, (0, 1, 0, 0), (1, 0, 0, 0)).a + 0.2)
        c = (N // 2,) * 4
        errs.append(abs(weighted.phi(apply_gauge(fld, u), 0.2, c) - weighted.phi(fld, 0.2, c)))
    assert errs[0] / errs[1] > 3.5


def test_phi_monotone_in_density(g8, rng):
    dens = rng.random(g8.shape)
    lower = dens * rng.random(g8.shape)
    assert weighted.phi_density(lower, g8, 0.2, (1, 2, 3, 4)) <= weighted.phi_density(dens, g8, 0.2, (1, 2, 3, 4))


@pytest.fixture(scope="module")
def abelian_traj():
    g = build_torus(4, 16, 1.0, 0.25)
    return flow.run(abelian_mode(g, 0.3, (1, 0, 0, 0), (0, 1, 0, 0)), 0.02,
                    record_times=[0.0025 * k for k in range(1, 8)])


def test_xi_examples(abelian_traj):
    tr = abelian_traj
    x = (0, 0, 0, 0)
    assert weighted.xi(tr, 0.2, x, 0.01, 0.01) == 0
    flat = flow.run(zero_field(tr.geom), 0.005)
    assert weighted.xi(flat, 0.2, x, 0.0, 0.005) == 0
    sup_u = weighted.gaussian_profile(4, 0.2, 0.0)
    for t1, t2 in ((0.0, 0.01), (0.005, 0.02)):
        xv = weighted.xi(tr, 0.2, x, t1, t2)
        window = tr.dissipation[tr.index(t2)] - tr.dissipation[tr.index(t1)]
        assert 0 < xv <= sup_u * window
    with pytest.raises(ValueError):
        weighted.xi(tr, 0.2, x, 0.01, 0.005)


def test_monotonicity_examples(abelian_traj):
    tr = abelian_traj
    x = (2, 0, 0, 0)
    assert weighted.monotonicity_residual(tr, 0.1, 0.1, x, 0.01, 4.0, 0.0, 1.0) == 0
    flat = flow.run(zero_field(tr.geom), 0.0025 * 7, record_times=[0.0025 * k for k in range(1, 7)])
    assert weighted.monotonicity_residual(flat, 0.1, 0.05, x, 0.01, 0.0, 0.0, 0.0) == 0
    with pytest.raises(ValueError):
        weighted.monotonicity_residual(tr, 0.05, 0.1, x, 0.01, 4.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        weighted.monotonicity_residual(tr, 0.2, 0.05, x, 0.0025, 4.0, 0.0, 1.0)


def test_monotonicity_abelian_grid(abelian_traj):
    from ymlab.constants import MONOTONICITY_C0, MONOTONICITY_C1
    tr = abelian_traj
    E = tr.energies[0]
    pairs = [(0.1, 0.05), (0.15, 0.1), (0.15, 0.05)]
    total = bad = 0
    for x in [(0, 0, 0, 0), (4, 0, 0, 0), (2, 5, 1, 7)]:
        for R1, R2 in pairs:
            for t in tr.times:
                if t - R1 ** 2 + R2 ** 2 < 0:
                    continue
                total += 1
                res = weighted.monotonicity_residual(tr, R1, R2, x, t, MONOTONICITY_C0, MONOTONICITY_C1, E)
                err = weighted.monotonicity_error(tr, R1, R2, x, t, MONOTONICITY_C0)
                bad += res > err
    assert total > 20 and bad == 0


def test_antibubble_examples(abelian_traj):
    tr = abelian_traj
    r = weighted.antibubble_residual(tr, 0.1, (0, 0, 0, 0), 0.01, 0.01, 10.0)
    assert (r.lhs, r.bound) == (0.0, 0.0)
    flat = flow.run(zero_field(tr.geom), 0.005, record_times=[0.0025])
    r = weighted.antibubble_residual(flat, 0.1, (0, 0, 0, 0), 0.0, 0.005, 1.0)
    assert (r.lhs, r.bound) == (0.0, 0.0)
    r = weighted.antibubble_residual(tr, 0.1, (4, 0, 0, 0), 0.005, 0.01, tr.energies[0])
    assert 0 < r.lhs and 0 < r.bound
    with pytest.raises(ValueError):
        weighted.antibubble_residual(tr, 0.1, (4, 0, 0, 0), 0.005, 0.01, 1e-9)


def test_kernel_gradient_center_and_max():
    g = build_torus(4, 32, 1.0, 0.25)
    R = 0.125
    assert weighted.kernel_gradient_bound_check(g, R, [(0, 0, 0, 0)]) == 0
    axis = [(j, 0, 0, 0) for j in range(1, 17)]  # d up to 4R
    got = weighted.kernel_gradient_bound_check(g, R, axis)
    assert got <= weighted.kernel_gradient_max(4) * 1.01
    assert got >= weighted.kernel_gradient_max(4) * 0.95
    j = 9
    s = j * g.h / R
    assert weighted.kernel_gradient_bound_check(g, R, [(j, 0, 0, 0)]) == pytest.approx(
        float(weighted.kernel_gradient_ratio(4, s)), rel=1e-2)


def test_kernel_gradient_scale_invariant():
    a = build_torus(4, 16, 1.0, 0.25)
    b = build_torus(4, 32, 1.0, 0.25)
    ra = weighted.kernel_gradient_bound_check(a, 0.125, [(3, 0, 0, 0)])
    rb = weighted.kernel_gradient_bound_check(b, 0.0625, [(3, 0, 0, 0)])
    assert ra == pytest.approx(rb, rel=1e-12)


def test_kernel_gradient_max_closed_form():
    s = np.linspace(0, 8, 200001)
    assert weighted.kernel_gradient_max(5) == pytest.approx(weighted.kernel_gradient_ratio(5, s).max(), rel=1e-9)


def test_eps_regularity_returns_none_outside_hypotheses(abelian_traj):
    tr = abelian_traj
    assert weighted.eps_regularity_constant(tr, 0.05, (0, 0, 0, 0), 0.01, 1e-12) is None
    c = weighted.eps_regularity_constant(tr, 0.05, (4, 0, 0, 0), 0.01, 1.0)
    assert c is not None and c > 0


def test_eps_regularity_small_data(g8):
    tr = flow.run(random_smooth_field(g8, 0.05, 1, 3), 0.005, record_times=[0.0025])
    assert weighted.eps_regularity_constant(tr, 0.05, (0, 0, 0, 0), 0.005, 1.0) > 0
