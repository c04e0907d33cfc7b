"""Parabolic rescaling of trajectories, blowup-center selection, maximal
functions on the singular plane, and tangent-plane splitting diagnostics."""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .density import unit_ball_volume
from .flow import FlowTrajectory
from .gauge import GaugeField, covariant_divergence, curvature, deriv
from .lattice import distance_field
from .singular import density_map_from
from .weighted import phi_density


class WindowError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BlowupWindow:
    center: tuple  # source site
    t0: float
    lam: float
    source: FlowTrajectory
    target_geom: object

    def __post_init__(self):
        if not 0 < self.lam <= 1:
            raise WindowError(f"scale {self.lam} outside (0, 1]")
        if self.target_geom.n != self.source.geom.n:
            raise WindowError("source and target dimensions differ")
        if self.lam * self.target_geom.L / 2 > self.source.geom.rho1 * (1 + 1e-12):
            raise WindowError("rescaled window exceeds rho1 of the source")

    @property
    def rho(self):
        """Cutoff radius pulled back to the target, rho1 / lambda."""
        return self.source.geom.rho1 / self.lam

    def source_time(self, t):
        return self.t0 + self.lam ** 2 * t

    def target_time(self, s):
        return (s - self.t0) / self.lam ** 2


def _corner_weights(geom_src, x0, lam, tgeom):
    """Source corner indices and multilinear weights for each target site."""
    n = tgeom.n
    idx = np.arange(tgeom.N)
    rel = (idx - tgeom.N * np.round(idx / tgeom.N - 1e-12)) * tgeom.h  # centered coordinates
    per_axis = []
    for j in range(n):
        u = (x0[j] * geom_src.h + lam * rel) / geom_src.h
        lo = np.floor(u + 1e-12)
        fr = np.clip(u - lo, 0.0, 1.0)
        per_axis.append((lo.astype(np.int64) % geom_src.N, fr))
    return per_axis


def _interp_space(arr, per_axis, N):
    """Multilinear interpolation of a site-major array (N,)*n + tail onto the target grid."""
    n = len(per_axis)
    out = 0.0
    for corner in product((0, 1), repeat=n):
        sl = []
        w = 1.0
        for j, (lo, fr) in enumerate(per_axis):
            sl.append((lo + corner[j]) % N)
            wj = fr if corner[j] else 1.0 - fr
            shape = [1] * n
            shape[j] = len(lo)
            w = w * wj.reshape(shape)
        piece = arr[np.ix_(*sl)]
        out = out + piece * w.reshape(w.shape + (1,) * (arr.ndim - n))
    return out


def _bracket(traj, s):
    times = np.asarray(traj.times)
    if s < times[0] - 1e-12 or s > times[-1] + 1e-12:
        raise WindowError(f"time {s} outside recorded range [{times[0]}, {times[-1]}]")
    j = int(np.searchsorted(times, s))
    if j < len(times) and abs(times[j] - s) <= 1e-12 * max(1.0, abs(s)):
        return j, j, 0.0
    j = min(max(j, 1), len(times) - 1)
    a, b = times[j - 1], times[j]
    return j - 1, j, (s - a) / (b - a)


def parabolic_rescale(traj, x0, t0, lam, target_geom, times=None):
    """Abar(x, t) = lam A(x0 + lam x, t0 + lam^2 t), x centered on the target torus.

    Multilinear interpolation in space, linear in time.  `times` are target times
    (default: every source snapshot at or after t0).  The cumulative dissipation
    density scales by lam^4 and is measured from the first target time."""
    win = BlowupWindow(tuple(int(c) for c in x0), float(t0), float(lam), traj, target_geom)
    g = traj.geom
    if times is None:
        times = [win.target_time(s) for s in traj.times if s >= t0 - 1e-12]
    per_axis = _corner_weights(g, win.center, lam, target_geom)
    out = FlowTrajectory(target_geom, (traj.tau - t0) / lam ** 2)
    base = None
    for t in times:
        i, j, w = _bracket(traj, win.source_time(t))
        a = traj.fields[i].a if w == 0.0 else (1 - w) * traj.fields[i].a + w * traj.fields[j].a
        d = (traj.dissipation_density[i] if w == 0.0 else
             (1 - w) * traj.dissipation_density[i] + w * traj.dissipation_density[j])
        abar = lam * _interp_space(a, per_axis, g.N)
        dbar = lam ** 4 * _interp_space(d, per_axis, g.N)
        base = dbar if base is None else base
        dens = dbar - base
        out.append(float(t), GaugeField(target_geom, np.ascontiguousarray(abar)),
                   float(np.sum(dens) * target_geom.dV), dens)
    return out, win


def phi_window(win, traj_bar, R, t, x=None):
    """Phi(Abar; R, x, t) with the cutoff pulled back from the source."""
    x = (0,) * win.target_geom.n if x is None else x
    i = traj_bar.index(t)
    return phi_density(traj_bar.energy_density(i), win.target_geom, R, x, rho=win.rho)


def phi_source(win, R, t):
    """The matching source value Phi(A; lam R, x0, t0 + lam^2 t)."""
    tr = win.source
    i = tr.index(win.source_time(t))
    return phi_density(tr.energy_density(i), tr.geom, win.lam * R, win.center)


# -- blowup center ---------------------------------------------------------------

@dataclass(frozen=True)
class BlowupCenter:
    y: tuple
    z: tuple
    t: float
    delta: float
    phi: float


@dataclass(frozen=True)
class NoCrossing:
    """The flow never reaches eps0/2 in the search window."""
    max_phi: float


@dataclass(frozen=True)
class SearchWindow:
    times: tuple
    delta_max: float
    delta_min: float
    y: tuple = ()
    sites: np.ndarray = None  # optional transverse mask, shape (N,)*(n - len(plane))
    scan: int = 24


def _slice_max(dens, geom, R, plane, y, mask):
    vals = density_map_from(dens, geom, R)
    sl = [slice(None)] * geom.n
    for a, c in zip(plane, y):
        sl[a] = int(c) % geom.N
    vals = vals[tuple(sl)]
    if mask is not None:
        vals = np.where(mask, vals, -np.inf)
    k = int(np.argmax(vals))  # first maximum in C order is the lexicographic tie break
    return float(vals.reshape(-1)[k]), np.unravel_index(k, vals.shape)


def select_blowup_center(traj, eps0, plane, window, iters=40):
    """Largest delta with max_z Phi(delta, (y, z), t) = eps0 / 2, per time; the
    time with the smallest such delta wins (ties: earlier time, then lexicographic z)."""
    g = traj.geom
    plane = tuple(plane)
    y = tuple(window.y) if window.y else (0,) * len(plane)
    target = eps0 / 2.0
    hi_cap = min(window.delta_max, g.rho1)
    if not 0 < window.delta_min < hi_cap:
        raise ValueError("need 0 < delta_min < delta_max <= rho1")
    best = None
    top = -np.inf
    for t in window.times:
        dens = traj.energy_density(traj.index(t))
        m = lambda d: _slice_max(dens, g, d, plane, y, window.sites)
        grid = np.geomspace(hi_cap, window.delta_min, window.scan)
        vals = [m(d)[0] for d in grid]
        top = max(top, max(vals))
        # first crossing from above while scanning delta downward
        k = next((k for k in range(1, len(grid)) if vals[k - 1] >= target > vals[k]), None)
        if k is None:
            continue
        lo, hi = grid[k], grid[k - 1]
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if m(mid)[0] >= target:
                hi = mid
            else:
                lo = mid
        val, zi = m(hi)
        z = tuple(int(c) for c in zi)
        cand = BlowupCenter(y, z, float(t), float(hi), val)
        if best is None or (cand.delta, cand.t, cand.z) < (best.delta, best.t, best.z):
            best = cand
    return NoCrossing(float(top)) if best is None else best


# -- maximal functions -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MaximalReport:
    kind: str
    radii: np.ndarray
    centers: np.ndarray
    values: np.ndarray  # M at each center
    profiles: np.ndarray  # normalized averages, (centers, radii)


def dyadic_radii(h, r_max=1.0):
    """2^-j for j >= 0 down to the grid spacing."""
    out = []
    r = r_max
    while r >= h * (1 - 1e-12):
        out.append(r)
        r /= 2
    return np.array(out)


def _ball_sum(values, h, c, r):
    k = values.ndim
    if k == 0:
        return float(values)
    d = distance_field(_PlaneGeom(k, values.shape[0], h), c)
    return float(np.sum(values[d <= r + 1e-12]) * h ** k)


@dataclass(frozen=True)
class _PlaneGeom:
    n: int
    N: int
    h: float

    @property
    def shape(self):
        return (self.N,) * self.n


def maximal_function(values, h, kind, centers, radii, times=None, t=None):
    """sup over radii of normalized ball integrals on the (n-4)-plane grid.

    kind 'spatial': R^{-k} int_{B_R} f (this is also the normalization for h_i).
    kind 'parabolic': values carry a leading time axis; R^{-k-2} int_{t-R^2}^{t} int_{B_R} g,
    time quadrature by the trapezoid rule on the recorded times."""
    values = np.asarray(values, float)
    radii = np.asarray(radii, float)
    if np.any(radii <= 0) or np.any(radii > 1 + 1e-12):
        raise ValueError("radii must lie in (0, 1]")
    centers = np.atleast_2d(np.asarray(centers, np.int64))
    if kind == "spatial":
        k = values.ndim
        prof = np.array([[_ball_sum(values, h, c, r) * r ** (-k) for r in radii] for c in centers])
    elif kind == "parabolic":
        times = np.asarray(times, float)
        k = values.ndim - 1
        prof = np.empty((len(centers), len(radii)))
        for ci, c in enumerate(centers):
            per_t = np.array([[_ball_sum(v, h, c, r) for r in radii] for v in values])
            for ri, r in enumerate(radii):
                sel = (times >= t - r * r - 1e-12) & (times <= t + 1e-12)
                ts, fs = times[sel], per_t[sel, ri]
                integral = float(np.sum(0.5 * (fs[1:] + fs[:-1]) * np.diff(ts))) if len(ts) > 1 else 0.0
                prof[ci, ri] = integral * r ** (-k - 2)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if centers.shape[1] == 0:
        centers = np.zeros((len(prof), 0), np.int64)
    return MaximalReport(kind, radii, centers, prof.max(axis=1), prof)


def weak_type_constant(k):
    """C with |{M f >= a}| <= C ||f||_1 / a for the R^{-k} normalization (Vitali 3^k)."""
    return 3.0 ** k * unit_ball_volume(k)


# -- splitting diagnostics -------------------------------------------------------------

def plane_component_energy(field, plane):
    """sum_x sum_{alpha in V} sum_beta |F_{alpha beta}|^2 h^n."""
    curv = curvature(field)
    g = field.geom
    tot = 0.0
    for p, (mu, nu) in enumerate(g.pairs):
        mult = (mu in plane) + (nu in plane)
        if mult:
            tot += mult * float(np.sum(curv.f[..., p, :] ** 2))
    return tot * g.dV


def _full_curvature(curv, n):
    shp = curv.f.shape[:-2]
    F = np.zeros(shp + (n, n, 3))
    for p, (mu, nu) in enumerate(curv.geom.pairs):
        F[..., mu, nu, :] = curv.f[..., p, :]
        F[..., nu, mu, :] = -curv.f[..., p, :]
    return F


def derivative_identity_check(field):
    """max over sites and alpha of
    |d_alpha |F|^2 - 2 (sum_{beta,gamma} d_beta <F_ag, F_bg> + sum_gamma <F_ag, D*F_g>)|."""
    g = field.geom
    curv = curvature(field)
    F = _full_curvature(curv, g.n)
    dstar = covariant_divergence(field, curv)
    sq = curv.sq()
    worst = 0.0
    for al in range(g.n):
        lhs = deriv(sq, al, g)
        rhs = np.einsum("...gc,...gc->...", F[..., al, :, :], dstar)
        for be in range(g.n):
            rhs = rhs + deriv(np.einsum("...gc,...gc->...", F[..., al, :, :], F[..., be, :, :]), be, g)
        worst = max(worst, float(np.max(np.abs(lhs - 2.0 * rhs))))
    return worst
