"""Gaussian-weighted energy Phi, weighted dissipation Xi, and the inequality checks
built on them (almost-monotonicity, antibubbling, kernel gradient bound,
epsilon-regularity diagnostic)."""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gauge import curvature, deriv
from .lattice import cutoff_profile, distance, distance_field


def gaussian_weight(geom, R, x, y):
    if not R > 0:
        raise ValueError("R must be positive")
    d = distance(geom, x, y)
    return R ** (4 - geom.n) * (4 * math.pi) ** (-geom.n / 2) * np.exp(-((d / (2 * R)) ** 2))


def gaussian_profile(n, R, d):
    return R ** (4 - n) * (4 * math.pi) ** (-n / 2) * np.exp(-((np.asarray(d) / (2 * R)) ** 2))


@lru_cache(maxsize=64)
def _origin_weight(geom, R, rho):
    d = distance_field(geom, (0,) * geom.n)
    w = gaussian_profile(geom.n, R, d) * cutoff_profile(d / rho) ** 2
    w.setflags(write=False)
    return w


def weight_field(geom, R, x, rho=None):
    """u_{R,x} phi_x^2 at every site."""
    rho = geom.rho1 if rho is None else rho
    w = _origin_weight(geom, float(R), float(rho))
    x = geom.wrap(x)
    if any(x):
        w = np.roll(w, x, axis=tuple(range(geom.n)))
    return w


def _check_R(geom, R, rho=None):
    rho = geom.rho1 if rho is None else rho
    if not (0 < R <= rho * (1 + 1e-12)):
        raise ValueError(f"R={R} outside (0, rho1={rho}]")


def phi_density(dens, geom, R, x, check=True, rho=None):
    """Phi(R, x) from a per-site |F|^2 array; rho overrides the cutoff radius."""
    if check:
        _check_R(geom, R, rho)
    return float(np.sum(dens * weight_field(geom, R, x, rho)) * geom.dV)


def phi(snapshot, R, x):
    """Phi(R, x) of one field snapshot."""
    return phi_density(curvature(snapshot).sq(), snapshot.geom, R, x)


def phi_richardson(dens, geom, R, x):
    """Quadrature error estimate |Phi_h - Phi_2h| / 3, Phi_2h on the sublattice through x."""
    w = weight_field(geom, R, x)
    fine = float(np.sum(dens * w)) * geom.dV
    sl = tuple(slice(int(c) % 2, None, 2) for c in geom.wrap(x))
    coarse = float(np.sum(dens[sl] * w[sl])) * (2 * geom.h) ** geom.n
    return abs(fine - coarse) / 3.0


def phi_at(traj, R, x, t, check=True):
    i = traj.index(t)
    return phi_density(traj.energy_density(i), traj.geom, R, x, check)


def xi(traj, R, x, t1, t2):
    """Weighted dissipation int_{t1}^{t2} int |D*F|^2 u phi^2, same quadratures as the flow."""
    _check_R(traj.geom, R)
    if t2 < t1:
        raise ValueError("t1 must not exceed t2")
    i, j = traj.index(t1), traj.index(t2)
    if i == j:
        return 0.0
    dd = traj.dissipation_density[j] - traj.dissipation_density[i]
    return float(np.sum(dd * weight_field(traj.geom, R, x)) * traj.geom.dV)


def monotonicity_residual(traj, R1, R2, x, t, C0, C1, E):
    if R2 > R1:
        raise ValueError("R2 must not exceed R1")
    if not R2 > 0:
        raise ValueError("R2 must be positive")
    s = t - R1 ** 2 + R2 ** 2
    if s < -1e-12:
        raise ValueError("t - R1^2 + R2^2 must be nonnegative")
    p2 = phi_at(traj, R2, x, t)
    p1 = phi_at(traj, R1, x, max(s, 0.0))
    return max(0.0, p2 - math.exp(C0 * (R1 - R2)) * p1 - C1 * (R1 ** 2 - R2 ** 2) * E)


def monotonicity_error(traj, R1, R2, x, t, C0):
    """Richardson error bar for the residual: quadrature estimates of both Phi terms."""
    s = max(t - R1 ** 2 + R2 ** 2, 0.0)
    g = traj.geom
    e2 = phi_richardson(traj.energy_density(traj.index(t)), g, R2, x)
    e1 = phi_richardson(traj.energy_density(traj.index(s)), g, R1, x)
    return e2 + math.exp(C0 * (R1 - R2)) * e1


def monotonicity_margin(traj, R1, R2, x, t, C0):
    """(Phi(R2, t) - e^{C0(R1-R2)} Phi(R1, s), (R1^2 - R2^2)): the data C1 must dominate."""
    s = max(t - R1 ** 2 + R2 ** 2, 0.0)
    p2 = phi_at(traj, R2, x, t)
    p1 = phi_at(traj, R1, x, s)
    return p2 - math.exp(C0 * (R1 - R2)) * p1, R1 ** 2 - R2 ** 2


@dataclass(frozen=True)
class AntibubbleReport:
    lhs: float
    bound: float
    xi: float


def antibubble_residual(traj, R, x, t1, t2, E0):
    """lhs = |Phi(R,t2) - Phi(R,t1)|, bound = gamma = xi (xi + sqrt((t2-t1) E0) / R)."""
    i, j = traj.index(t1), traj.index(t2)
    if i == j:
        return AntibubbleReport(0.0, 0.0, 0.0)
    lo, hi = min(i, j), max(i, j)
    sup2 = max(phi_density(traj.energy_density(m), traj.geom, 2 * R, x, check=False)
               for m in range(lo, hi + 1))
    if sup2 > E0 * (1 + 1e-12):
        raise ValueError(f"E0={E0:.4g} below sup Phi(2R)={sup2:.4g} on the window")
    lhs = abs(phi_at(traj, R, x, traj.times[hi]) - phi_at(traj, R, x, traj.times[lo]))
    xv = math.sqrt(max(xi(traj, R, x, traj.times[lo], traj.times[hi]), 0.0))
    dt = traj.times[hi] - traj.times[lo]
    return AntibubbleReport(lhs, xv * (xv + math.sqrt(dt * E0) / R), xv)


def kernel_gradient_ratio(n, s):
    """Exact |grad u_R| R / sqrt(u_R u_2R) at s = d/R."""
    s = np.asarray(s, float)
    return 2.0 ** ((n - 4) / 2) * (s / 2) * np.exp(-3 * s * s / 32)


def kernel_gradient_max(n):
    return float(kernel_gradient_ratio(n, math.sqrt(16.0 / 3.0)))


def kernel_gradient_bound_check(geom, R, samples):
    """Max over sampled sites y of |grad u_{R,0}(y)| R / sqrt(u_R u_2R), finite-difference grad."""
    _check_R(geom, R)
    origin = (0,) * geom.n
    d = distance_field(geom, origin)
    u = gaussian_profile(geom.n, R, d)
    u2 = gaussian_profile(geom.n, 2 * R, d)
    grad2 = sum(deriv(u, mu, geom) ** 2 for mu in range(geom.n))
    ratio = np.sqrt(grad2) * R / np.sqrt(u * u2)
    samples = np.atleast_2d(np.asarray(samples, np.int64)) % geom.N
    return float(np.max(ratio[tuple(samples.T)]))


def sup_curvature_ball(field, x, r):
    """sup over the ball B_r(x) of |F|."""
    d = distance_field(field.geom, x)
    return float(np.sqrt(np.max(curvature(field).sq()[d <= r + 1e-12])))


def eps_regularity_constant(traj, R, x, t0, eps0, E0=None):
    """sup_{B_{R/2}(x)} |F(t0)| R^2 / sqrt(Phi(R, x, t0 - R^2)) when the smallness
    hypotheses hold, else None.  Flat data (Phi = 0) also returns None."""
    s = t0 - R * R
    p = phi_at(traj, R, x, s)
    if not (0 < p < eps0):
        return None
    if E0 is not None and phi_at(traj, 2 * R, x, s, check=False) > E0:
        return None
    sup = sup_curvature_ball(traj.field_at(t0), x, R / 2)
    return sup * R * R / math.sqrt(p)
