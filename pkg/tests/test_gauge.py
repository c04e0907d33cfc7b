import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ymlab import su2
from ymlab.gauge import (GaugeField, GaugeTransform, abelian_mode, abelian_rate, apply_gauge,
                         constant_field, covariant_divergence, curvature, deriv, energy,
                         pure_gauge, random_smooth_field, zero_field)
from ymlab.lattice import build_torus


def smooth_gauge(geom, scale=0.4):
    x = geom.positions() * 2 * np.pi / geom.L
    alg = np.stack([np.sin(x[..., 0] + x[..., 1]), np.cos(x[..., 2]), np.sin(x[..., 3] - x[..., 0])], -1)
    return GaugeTransform.from_algebra(geom, scale * alg)


def test_flat_curvature(g8):
    c = curvature(zero_field(g8))
    assert not c.f.any() and not covariant_divergence(zero_field(g8)).any()


def test_abelian_embedded_curvature():
    errs = []
    for N in (16, 32):
        g = build_torus(4, N, 1.0, 0.25)
        x1 = g.positions()[..., 1]
        a = np.zeros(g.shape + (4, 3))
        a[..., 0, 0] = np.sin(2 * np.pi * x1)
        F01 = curvature(GaugeField(g, a)).component(0, 1)
        exact = -2 * np.pi * np.cos(2 * np.pi * x1)
        errs.append(np.max(np.abs(F01[..., 0] - exact)))
        assert np.max(np.abs(F01[..., 1:])) == 0
    assert errs[0] < 1e-2 and errs[0] / errs[1] > 3.5


def test_constant_field_curvature_and_dstar(g8, rng):
    vals = rng.normal(size=(4, 3))
    fld = constant_field(g8, vals)
    c = curvature(fld)
    for mu, nu in g8.pairs:
        assert np.allclose(c.component(mu, nu), su2.bracket(vals[mu], vals[nu]), atol=1e-13)
        assert np.allclose(c.component(nu, mu), -c.component(mu, nu))
    ds = covariant_divergence(fld, c)
    for nu in range(4):
        want = -sum(su2.bracket(vals[mu], su2.bracket(vals[mu], vals[nu])) for mu in range(4))
        assert np.allclose(ds[..., nu, :], want, atol=1e-12)


def test_abelian_mode_dstar_eigen():
    g = build_torus(4, 16, 1.0, 0.25)
    fld = abelian_mode(g, 1e-3, (1, 0, 0, 0), (0, 1, 0, 0))
    ds = covariant_divergence(fld)
    rate = abelian_rate(g, (1, 0, 0, 0))
    assert np.max(np.abs(ds - rate * fld.a)) / (rate * 1e-3) < 5e-3


def test_identity_gauge_exact(g8, rng):
    fld = random_smooth_field(g8, 0.3, 1, 3)
    out = apply_gauge(fld, GaugeTransform.identity(g8))
    assert np.array_equal(out.a, fld.a)


def test_pure_gauge_flat_converges():
    errs = []
    for N in (8, 16):
        g = build_torus(4, N, 1.0, 0.25)
        errs.append(np.max(np.sqrt(curvature(pure_gauge(g, smooth_gauge(g))).sq())))
    assert errs[1] < 0.1 and errs[0] / errs[1] > 3.5


def test_gauge_invariance_of_F_squared():
    errs = []
    for N in (8, 16):
        g = build_torus(4, N, 1.0, 0.25)
        fld = abelian_mode(g, 0.5, (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1))
        fld = GaugeField(g, fld.a + 0.2 * np.cos(2 * np.pi * g.positions()[..., 2:3, None]))
        moved = apply_gauge(fld, smooth_gauge(g))
        errs.append(np.max(np.abs(curvature(moved).sq() - curvature(fld).sq())))
    assert errs[0] / errs[1] > 3.5


def test_composition_law():
    errs = []
    for N in (8, 16):
        g = build_torus(4, N, 1.0, 0.25)
        u, v = smooth_gauge(g, 0.3), smooth_gauge(g, -0.2)
        fld = abelian_mode(g, 0.3, (0, 1, 0, 0), (1, 0, 0, 0))
        errs.append(np.max(np.abs(apply_gauge(apply_gauge(fld, v), u).a - apply_gauge(fld, u @ v).a)))
    assert errs[0] / errs[1] > 3.5


def test_energy_examples(g8):
    assert energy(zero_field(g8)) == 0
    fld = constant_field(g8, np.eye(4, 3))
    c = curvature(fld).sq()
    assert energy(fld) == pytest.approx(c.flat[0] * g8.L ** 4)
    g = build_torus(4, 16, 1.0, 0.25)
    eps = 0.1
    e = energy(abelian_mode(g, eps, (1, 0, 0, 0), (0, 1, 0, 0)))
    assert e == pytest.approx(eps ** 2 * (2 * np.pi) ** 2 / 2, rel=5e-3)


def test_energy_region(g8):
    fld = random_smooth_field(g8, 0.4, 1, 0)
    half = np.zeros(g8.shape, bool)
    half[:4] = True
    assert energy(fld, half) + energy(fld, ~half) == pytest.approx(energy(fld))


@given(st.tuples(*[st.integers(0, 7)] * 4))
def test_energy_translation_invariant(shift):
    g = build_torus(4, 8, 1.0, 0.25)
    fld = random_smooth_field(g, 0.4, 1, 11)
    moved = GaugeField(g, np.roll(fld.a, shift, axis=(0, 1, 2, 3)))
    assert energy(moved) == pytest.approx(energy(fld), rel=1e-12)


def test_random_field_examples(g8):
    assert not random_smooth_field(g8, 0.0, 1, 5).a.any()
    assert np.array_equal(random_smooth_field(g8, 0.3, 1, 5).a, random_smooth_field(g8, 0.3, 1, 5).a)
    e1 = energy(random_smooth_field(g8, 1e-3, 1, 5))
    e2 = energy(random_smooth_field(g8, 1e-2, 1, 5))
    assert e2 / e1 == pytest.approx(100, rel=0.05)
    with pytest.raises(ValueError):
        random_smooth_field(g8, -1.0, 1, 5)


def test_abelian_curvature_is_exterior_derivative(g8):
    fld = random_smooth_field(g8, 0.5, 1, 2)
    a = fld.a.copy()
    a[..., 1:] = 0.0  # one algebra direction: brackets vanish
    c = curvature(GaugeField(g8, a))
    for mu, nu in g8.pairs:
        d = deriv(a[..., nu, :], mu, g8) - deriv(a[..., mu, :], nu, g8)
        assert np.array_equal(c.component(mu, nu), d) or np.allclose(c.component(mu, nu), d, atol=1e-14)


def test_field_validation(g8):
    with pytest.raises(ValueError):
        GaugeField(g8, np.zeros((8, 8, 8, 8, 4, 2)))
    a = np.zeros(g8.shape + (4, 3))
    a[0, 0, 0, 0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        GaugeField(g8, a)
