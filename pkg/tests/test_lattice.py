import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ymlab import su2
from ymlab.lattice import GeometryError, ball_sites, build_torus, cutoff, cutoff_profile, distance

sites = st.tuples(*[st.integers(-40, 40)] * 4)


def test_build_torus_examples():
    g = build_torus(4, 16, 1.0, 1.0)
    assert g.h == 1 / 16 and g.rho1 == 0.25
    assert build_torus(5, 8, 2.0, 0.25).rho1 == 0.25
    with pytest.raises(GeometryError):
        build_torus(3, 16, 1.0, 1.0)
    with pytest.raises(GeometryError):
        build_torus(4, 4, 1.0, 1.0)


def test_distance_examples(g16):
    assert distance(g16, (1, 2, 3, 4), (1, 2, 3, 4)) == 0
    assert distance(g16, (0, 0, 0, 0), (15, 0, 0, 0)) == pytest.approx(1 / 16)
    assert distance(g16, (0, 0, 0, 0), (8, 0, 0, 0)) == pytest.approx(0.5)


@given(sites, sites, sites)
def test_distance_metric(x, y, z):
    g = build_torus(4, 16, 1.0, 0.25)
    dxy = distance(g, x, y)
    assert dxy == pytest.approx(distance(g, y, x))
    assert dxy <= math.sqrt(4) * g.L / 2 + 1e-12
    assert distance(g, x, z) <= dxy + distance(g, y, z) + 1e-12


@given(sites, sites, sites)
def test_distance_translation_invariant(x, y, v):
    g = build_torus(4, 16, 1.0, 0.25)
    xv = tuple(a + b for a, b in zip(x, v))
    yv = tuple(a + b for a, b in zip(y, v))
    assert distance(g, xv, yv) == pytest.approx(distance(g, x, y), abs=1e-12)


def test_cutoff_examples(g16):
    x = (0, 0, 0, 0)
    assert cutoff(g16, x, x, 0.3) == 1.0
    assert cutoff(g16, x, (5, 0, 0, 0), 0.3) == 0.0
    # d = 0.75 rho sits at the middle of the transition band
    assert cutoff(g16, x, (3, 0, 0, 0), 0.25) == pytest.approx(0.5, abs=1e-14)


def test_cutoff_monotone_continuous():
    s = np.linspace(0, 1.2, 100001)
    v = cutoff_profile(s)
    assert np.all(np.diff(v) <= 1e-15)
    assert np.max(np.abs(np.diff(v))) < 1e-4
    assert v[s <= 0.5].min() == 1.0 and v[s >= 1].max() == 0.0


def test_ball_sites(g16):
    x = (3, 4, 5, 6)
    assert {tuple(s) for s in ball_sites(g16, x, 0.0)} == {x}
    assert len(ball_sites(g16, x, g16.diameter)) == g16.size
    nb = {tuple(s) for s in ball_sites(g16, x, g16.h)}
    assert len(nb) == 9 and x in nb


# -- su(2) ------------------------------------------------------------------

alg = st.tuples(*[st.floats(-3, 3)] * 3).map(np.array)


@given(alg, alg)
def test_bracket_bound(x, y):
    assert np.linalg.norm(su2.bracket(x, y)) <= math.sqrt(2) * np.linalg.norm(x) * np.linalg.norm(y) + 1e-12


@given(alg, alg)
def test_bracket_matches_matrices(x, y):
    X, Y = su2.to_matrix_alg(x), su2.to_matrix_alg(y)
    assert np.allclose(su2.to_matrix_alg(su2.bracket(x, y)), X @ Y - Y @ X, atol=1e-12)


@given(alg)
def test_exp_log_roundtrip(x):
    if np.linalg.norm(x) < 3.0:
        assert np.allclose(su2.log(su2.exp(x)), x, atol=1e-10)


@given(alg, alg)
def test_exp_is_homomorphism_on_matrices(x, y):
    p, q = su2.exp(x), su2.exp(y)
    assert np.allclose(su2.to_matrix(su2.qmul(p, q)), su2.to_matrix(p) @ su2.to_matrix(q), atol=1e-12)


@given(alg, alg)
def test_adjoint_is_conjugation(x, y):
    q = su2.exp(x)
    U = su2.to_matrix(q)
    lhs = su2.to_matrix_alg(su2.adjoint(q, y))
    assert np.allclose(lhs, U @ su2.to_matrix_alg(y) @ U.conj().T, atol=1e-12)
