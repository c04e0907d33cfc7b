"""SU(2) connections as su(2)-valued 1-forms on the lattice, curvature and gauge action.

Public arrays are site-major: a connection is (N,)*n + (n, 3), curvature is
(N,)*n + (P, 3) over the pairs mu < nu in lexicographic order.  The pointwise
norm is the 2-form norm |F|^2 = sum_{mu<nu} |F_mu,nu|^2.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels, su2
from .lattice import LatticeGeometry


@lru_cache(maxsize=None)
def pair_tables(n):
    pairs = [(m, v) for m in range(n) for v in range(m + 1, n)]
    pmu = np.array([p[0] for p in pairs], np.int64)
    pnu = np.array([p[1] for p in pairs], np.int64)
    pidx = np.zeros((n, n), np.int64)
    psgn = np.zeros((n, n))
    for p, (m, v) in enumerate(pairs):
        pidx[m, v] = pidx[v, m] = p
        psgn[m, v] = 1.0
        psgn[v, m] = -1.0
    return pmu, pnu, pidx, psgn


@dataclass(frozen=True, eq=False)
class GaugeField:
    geom: LatticeGeometry
    a: np.ndarray

    def __post_init__(self):
        g = self.geom
        want = g.shape + (g.n, 3)
        if self.a.shape != want:
            raise ValueError(f"field shape {self.a.shape} != {want}")
        if not np.all(np.isfinite(self.a)):
            raise ValueError("field has non-finite entries")

    def copy(self):
        return GaugeField(self.geom, self.a.copy())


@dataclass(frozen=True, eq=False)
class CurvatureField:
    geom: LatticeGeometry
    f: np.ndarray
    dstar: np.ndarray | None = None

    def component(self, mu, nu):
        if mu == nu:
            return np.zeros(self.geom.shape + (3,))
        _, _, pidx, psgn = pair_tables(self.geom.n)
        return psgn[mu, nu] * self.f[..., pidx[mu, nu], :]

    def sq(self):
        """|F|^2 per site."""
        return np.sum(self.f ** 2, axis=(-2, -1))

    def dstar_sq(self):
        if self.dstar is None:
            raise ValueError("dstar not computed")
        return np.sum(self.dstar ** 2, axis=(-2, -1))


@dataclass(frozen=True, eq=False)
class GaugeTransform:
    geom: LatticeGeometry
    q: np.ndarray

    def __post_init__(self):
        if self.q.shape != self.geom.shape + (4,):
            raise ValueError("transform shape mismatch")

    @staticmethod
    def identity(geom):
        return GaugeTransform(geom, su2.identity(geom.shape))

    @staticmethod
    def from_algebra(geom, x):
        return GaugeTransform(geom, su2.exp(x))

    def __matmul__(self, other):
        return GaugeTransform(self.geom, su2.normalize(su2.qmul(self.q, other.q)))

    def inverse(self):
        return GaugeTransform(self.geom, su2.qconj(self.q))


# -- layout helpers -----------------------------------------------------------

def to_cm(arr, geom):
    """(N,)*n + (m, C) site-major -> contiguous (m, C, S)."""
    S = geom.size
    return np.ascontiguousarray(arr.reshape(S, *arr.shape[geom.n:]).transpose(1, 2, 0))


def from_cm(arr, geom):
    return np.ascontiguousarray(arr.transpose(2, 0, 1)).reshape(geom.shape + arr.shape[:2])


def deriv(x, axis, geom):
    """Centered finite difference along a spatial axis of an array (N,)*n + (...)."""
    c1, c2 = geom.stencil
    out = c1 * (np.roll(x, -1, axis) - np.roll(x, 1, axis))
    if c2:
        out += c2 * (np.roll(x, -2, axis) - np.roll(x, 2, axis))
    return out


def region_mask(geom, region):
    """Boolean mask from None (all sites), a mask, or an (M, n) array of sites."""
    if region is None:
        return np.ones(geom.shape, bool)
    region = np.asarray(region)
    if region.dtype == bool:
        if region.shape != geom.shape:
            raise ValueError("mask shape mismatch")
        return region
    m = np.zeros(geom.shape, bool)
    idx = np.atleast_2d(region).astype(np.int64) % geom.N
    m[tuple(idx.T)] = True
    return m


# -- operators ----------------------------------------------------------------

def _curvature_cm(acm, geom, bracket=True):
    pmu, pnu, _, _ = pair_tables(geom.n)
    f = np.empty((len(pmu), acm.shape[1], acm.shape[2]))
    c1, c2 = geom.stencil
    _kernels.curvature_cm(acm, geom.N, c1, c2, pmu, pnu, bracket, f)
    return f


def _dstar_cm(acm, fcm, geom, bracket=True):
    _, _, pidx, psgn = pair_tables(geom.n)
    out = np.empty_like(acm)
    c1, c2 = geom.stencil
    _kernels.dstar_cm(acm, fcm, geom.N, c1, c2, pidx, psgn, bracket, out)
    return out


def curvature(field):
    g = field.geom
    return CurvatureField(g, from_cm(_curvature_cm(to_cm(field.a, g), g), g))


def covariant_divergence(field, curv=None):
    """(D*F)_nu = -sum_mu (D_mu F_mu,nu + [A_mu, F_mu,nu]), shape (N,)*n + (n, 3)."""
    g = field.geom
    if curv is None:
        curv = curvature(field)
    return from_cm(_dstar_cm(to_cm(field.a, g), to_cm(curv.f, g), g), g)


def curvature_with_dstar(field):
    g = field.geom
    acm = to_cm(field.a, g)
    fcm = _curvature_cm(acm, g)
    return CurvatureField(g, from_cm(fcm, g), from_cm(_dstar_cm(acm, fcm, g), g))


def energy_density(field):
    return curvature(field).sq()


def energy(field, region=None):
    dens = energy_density(field)
    return float(np.sum(dens[region_mask(field.geom, region)]) * field.geom.dV)


def apply_gauge(field, g):
    """A_mu -> u A_mu u^{-1} - (D_mu u) u^{-1}."""
    geom = field.geom
    q = g.q
    out = np.empty_like(field.a)
    for mu in range(geom.n):
        dq = deriv(q, mu, geom)
        out[..., mu, :] = su2.adjoint(q, field.a[..., mu, :]) - su2.maurer_cartan(dq, q)
    return GaugeField(geom, out)


def pure_gauge(geom, g):
    return apply_gauge(zero_field(geom), g)


# -- constructors -------------------------------------------------------------

def zero_field(geom):
    return GaugeField(geom, np.zeros(geom.shape + (geom.n, 3)))


def constant_field(geom, values):
    values = np.asarray(values, float)
    return GaugeField(geom, np.broadcast_to(values, geom.shape + (geom.n, 3)).copy())


def abelian_mode(geom, eps, k, v, direction=(1.0, 0.0, 0.0)):
    """A_nu = eps sin(2 pi k.x / L) v_nu e, a transverse mode when k.v = 0."""
    k = np.asarray(k, float)
    v = np.asarray(v, float)
    e = np.asarray(direction, float)
    phase = 2.0 * np.pi * (geom.positions() @ k) / geom.L
    prof = eps * np.sin(phase)
    a = prof[..., None, None] * v[:, None] * e[None, :]
    return GaugeField(geom, a)


def abelian_rate(geom, k):
    """Continuum D*F eigenvalue (2 pi |k| / L)^2 of a transverse mode."""
    return (2.0 * np.pi * np.linalg.norm(k) / geom.L) ** 2


def random_smooth_field(geom, amplitude, cutoff_wavenumber, seed):
    """Band-limited random connection with max_x |A_mu(x)| = amplitude."""
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    if amplitude == 0:
        return zero_field(geom)
    rng = np.random.default_rng(seed)
    freq = np.fft.fftfreq(geom.N, 1.0 / geom.N)
    grids = np.meshgrid(*([freq] * geom.n), indexing="ij")
    kmax = np.max(np.abs(np.stack(grids)), axis=0)
    mask = (kmax <= cutoff_wavenumber) & (kmax > 0)
    a = np.empty(geom.shape + (geom.n, 3))
    for mu in range(geom.n):
        for c in range(3):
            z = rng.standard_normal(geom.shape) + 1j * rng.standard_normal(geom.shape)
            a[..., mu, c] = np.fft.ifftn(z * mask).real
    peak = np.max(np.linalg.norm(a, axis=-1))
    a *= amplitude / peak
    return GaugeField(geom, a)


def bump_field(geom, center, width, amplitude, direction=(0.0, 0.0, 1.0)):
    """Localized abelian-plus-twist connection concentrated at `center`.

    A_mu = amplitude * exp(-r^2 / 2 w^2) * (J x)_mu * e_{mu mod 3 rotated}: a
    rotational profile in the first two planes whose curvature is concentrated
    in a ball of radius ~ width around the center.  Displacements enter through
    the periodic coordinates x = (L / 2 pi) sin(2 pi d / L) and
    r^2 = sum (L / pi)^2 sin^2(pi d / L), so the field is smooth on the torus.
    """
    pos = geom.positions()
    c = np.asarray(center, float) * geom.h
    phase = np.pi * (pos - c) / geom.L
    d = np.sin(2.0 * phase) * (geom.L / (2.0 * np.pi))
    r2 = np.sum(np.sin(phase) ** 2, axis=-1) * (geom.L / np.pi) ** 2
    env = amplitude * np.exp(-r2 / (2.0 * width ** 2))
    a = np.zeros(geom.shape + (geom.n, 3))
    e = np.asarray(direction, float)
    e = e / np.linalg.norm(e)
    # rotation generators in planes (0,1) and (2,3), with orthogonal algebra directions
    f1 = np.array([1.0, 0.0, 0.0]) if abs(e[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    f1 = f1 - (f1 @ e) * e
    f1 /= np.linalg.norm(f1)
    a[..., 0, :] = (-d[..., 1] * env)[..., None] * e
    a[..., 1, :] = (d[..., 0] * env)[..., None] * e
    a[..., 2, :] = (-d[..., 3] * env)[..., None] * f1
    a[..., 3, :] = (d[..., 2] * env)[..., None] * f1
    return GaugeField(geom, a / width)


def ck_norm(arr, geom, k):
    """max over orders j <= k of sup_x |nabla^j arr|(x) for an array (N,)*n + (...)."""
    best = float(np.max(np.sqrt(np.sum(arr.reshape(geom.shape + (-1,)) ** 2, axis=-1))))
    level = [arr]
    for _ in range(k):
        nxt = [deriv(x, mu, geom) for x in level for mu in range(geom.n)]
        tot = sum(np.sum(x.reshape(geom.shape + (-1,)) ** 2, axis=-1) for x in nxt)
        best = max(best, float(np.sqrt(np.max(tot))))
        level = nxt
    return best
