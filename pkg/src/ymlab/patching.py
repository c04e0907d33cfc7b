"""Coulomb gauge fixing on patches, log/exp interpolation of relative gauges,
two-patch gluing and nested exhaustions with transition functions."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, su2
from .gauge import GaugeField, GaugeTransform, apply_gauge, curvature, deriv
from .lattice import distance_field, smoothstep

BRANCH_GATE = 0.5
SMALLNESS_GATE = math.pi


class SmallnessGateError(ValueError):
    pass


class CoulombNonConvergence(RuntimeError):
    def __init__(self, residual, iters, result):
        super().__init__(f"Coulomb relaxation stalled at residual {residual:.3g} after {iters} iterations")
        self.residual = residual
        self.iters = iters
        self.result = result


class BranchGateError(ValueError):
    def __init__(self, site, value):
        super().__init__(f"|z - 1| = {value:.3g} >= {BRANCH_GATE} at site {tuple(site)}")
        self.site = tuple(int(c) for c in site)
        self.value = value


class NonCauchyError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, region, cause):
        super().__init__(f"region {region}: {cause}")
        self.region = region
        self.cause = cause


@dataclass(frozen=True, eq=False)
class Patch:
    region: np.ndarray  # bool mask
    margin: np.ndarray  # bool mask inside region
    diameter: float
    weight: np.ndarray = field(default=None, repr=False)  # cutoff, 1 near margin, 0 off region

    def __post_init__(self):
        if not self.margin.any() or not self.region.any():
            raise ValueError("patch region and margin must be nonempty")
        if np.any(self.margin & ~self.region):
            raise ValueError("margin must lie inside the region")
        if self.weight is not None and np.any(self.weight[~self.region] != 0):
            raise ValueError("patch weight must vanish off the region")

    def cutoff(self):
        return self.region.astype(float) if self.weight is None else self.weight


def ball_patch(geom, center, radius, margin_sites=2):
    """Ball of the given radius; margin at depth margin_sites * h.  The cutoff
    weight is 1 up to two sites outside the margin and falls to 0 at the rim."""
    d = distance_field(geom, center)
    region = d <= radius + 1e-12
    margin = d <= radius - margin_sites * geom.h + 1e-12
    inner = min(radius - (margin_sites - 2) * geom.h, radius)
    if inner < radius:
        w = 1.0 - smoothstep((d - inner) / (radius - inner))
    else:
        w = region.astype(float)
    w[~region] = 0.0
    return Patch(region, margin, 2.0 * radius, w)


@dataclass(frozen=True, eq=False)
class CoulombResult:
    transform: GaugeTransform
    field: GaugeField
    residual: float
    iterations: int


def dilate(mask, sites):
    """Sites within `sites` steps of mask in the max-norm."""
    out = mask.copy()
    for mu in range(mask.ndim):
        grown = out.copy()
        for sh in range(1, sites + 1):
            grown |= np.roll(out, sh, mu) | np.roll(out, -sh, mu)
        out = grown
    return out


def erode(mask, sites):
    return ~dilate(~mask, sites)


def divergence(field):
    """sum_mu D_mu A_mu, shape (N,)*n + (3,)."""
    g = field.geom
    out = np.empty((g.size, 3))
    c1, c2 = g.stencil
    _kernels.divergence_sm(field.a.reshape(g.size, g.n, 3), _kernels.neighbor_table(g.N, g.n),
                           c1, c2, np.arange(g.size), out)
    return out.reshape(g.shape + (3,))


def coulomb_fix(field, patch, tol, max_iters, gate=SMALLNESS_GATE, initial=None):
    """Gauge u with max over the margin of |div u(A)| <= tol.

    The field is multiplied by the patch cutoff and relaxed on the whole torus,
    u <- exp(-lam div u(chi A)) u with lam = h^2 / 2n (Jacobi sweep).  Where the
    cutoff is 1 the two fields agree, so the margin residual is that of u(A).
    Relaxing the cut-off field instead of pinning u outside the patch keeps u
    free of odd-even modes, which the central divergence cannot see.

    Each sweep is gradient descent on sum |u(chi A)|^2: along u -> e^X u the
    first variation is <div u(chi A), X>.
    """
    g = field.geom
    big = float(np.max(np.linalg.norm(field.a[patch.region], axis=-1)))
    if big * patch.diameter > gate:
        raise SmallnessGateError(f"max|A| * diam = {big * patch.diameter:.3g} exceeds gate {gate:.3g}")
    lam = g.h ** 2 / (2 * g.n)
    chi = patch.cutoff()
    a = np.ascontiguousarray((field.a * chi[..., None, None]).reshape(g.size, g.n, 3))
    q = su2.identity((g.size,)) if initial is None else initial.q.reshape(g.size, 4).copy()
    nbr = _kernels.neighbor_table(g.N, g.n)
    c1, c2 = g.stencil
    sites = np.arange(g.size)
    mar = np.flatnonzero(patch.margin.reshape(-1))
    ap = np.empty((g.size, g.n, 3))
    div = np.empty((g.size, 3))
    it = 0
    while True:
        _kernels.gauge_action_sm(a, q, nbr, c1, c2, sites, ap)
        _kernels.divergence_sm(ap, nbr, c1, c2, sites, div)
        res = float(np.sqrt(np.max(np.sum(div[mar] ** 2, axis=-1))))
        if res <= tol or it >= max_iters:
            break
        _kernels.relax_update(q, div, lam, sites)
        it += 1
    u = GaugeTransform(g, q.reshape(g.shape + (4,)))
    out = CoulombResult(u, apply_gauge(field, u), res, it)
    if res > tol:
        raise CoulombNonConvergence(res, it, out)
    return out


def log_interpolate(z, inner, outer, psi, gate_mask=None):
    """exp(psi log z): z on inner (psi = 1), identity outside outer (psi = 0).

    The branch gate is enforced on the transition band (restricted to gate_mask)."""
    g = z.geom
    psi = np.asarray(psi, float)
    if np.any(psi[inner] != 1.0):
        raise ValueError("psi must equal 1 on the inner region")
    if np.any(psi[~outer] != 0.0):
        raise ValueError("psi must vanish outside the outer region")
    band = (psi > 0) & (psi < 1)
    dist = su2.distance_to_identity(z.q)
    bad = band & (dist >= BRANCH_GATE)
    if gate_mask is not None:
        bad &= gate_mask
    if bad.any():
        site = np.argwhere(bad)[0]
        raise BranchGateError(site, float(dist[tuple(site)]))
    q = su2.identity(g.shape)
    q[band] = su2.exp(psi[band][:, None] * su2.log(z.q[band]))
    full = psi == 1.0
    q[full] = z.q[full]
    return GaugeTransform(g, q)


def slab_cutoff(geom, c1, c2, trusted1, trusted2, omega_prime):
    """psi = smoothstep of the projection on the axis c1 -> c2: 0 where only
    trusted1 holds and 1 where only trusted2 holds (on omega')."""
    if np.any(omega_prime & ~(trusted1 | trusted2)):
        raise ValueError("omega' must lie inside the union of the trusted sets")
    c1 = np.asarray(c1, float)
    e = np.asarray(c2, float) - c1
    e = (e + geom.N / 2) % geom.N - geom.N / 2
    if not np.any(e):
        raise ValueError("patch centers coincide")
    mid = c1 + 0.5 * e
    e /= np.linalg.norm(e)
    idx = np.indices(geom.shape).transpose(tuple(range(1, geom.n + 1)) + (0,))
    # minimum image about the midpoint keeps both patches on one chart
    disp = (idx - mid + geom.N / 2) % geom.N - geom.N / 2
    s = disp @ e * geom.h
    zero = omega_prime & trusted1 & ~trusted2
    one = omega_prime & trusted2 & ~trusted1
    lo = float(np.max(s[zero])) if zero.any() else float(np.min(s[omega_prime])) - geom.h
    hi = float(np.min(s[one])) if one.any() else float(np.max(s[omega_prime])) + geom.h
    if not lo < hi:
        raise ValueError("trusted sets admit no separating slab on omega'")
    return smoothstep((s - lo) / (hi - lo))


def _masked_ck(arr, geom, k, mask):
    best = 0.0
    level = [arr]
    for j in range(k + 1):
        if j:
            level = [deriv(x, mu, geom) for x in level for mu in range(geom.n)]
            # stencils reach two sites, so shrink the trusted set each order
            for mu in range(geom.n):
                for sh in (1, 2):
                    mask = mask & np.roll(mask, sh, mu) & np.roll(mask, -sh, mu)
        if not mask.any():
            break
        tot = sum(np.sum(x.reshape(geom.shape + (-1,)) ** 2, axis=-1) for x in level)
        best = max(best, float(np.sqrt(np.max(tot[mask]))))
    return best


def cauchy_tail(fields, mask, k_max=2):
    """max over consecutive pairs of the C^k (k <= k_max) difference on `mask`."""
    g = fields[0].geom
    return max((_masked_ck(b.a - a.a, g, k_max, mask) for a, b in zip(fields, fields[1:])),
               default=0.0)


@dataclass(frozen=True, eq=False)
class GluedSequence:
    gauges: list  # entries before j0 are None
    fields: list
    j0: int
    psi: np.ndarray = field(repr=False)
    patch: Patch = field(repr=False)


def _apply(field, g):
    return apply_gauge(field, g).a


def patch_two(fields_seq, omega1, omega2, gauges1, gauges2, omega_prime, psi=None,
              j0=0, centers=None, tail_tol=None, k_max=2):
    """Glue gauges u_j (trusted on omega1.margin) and u~_j (trusted on
    omega2.margin) into one sequence trusted on omega_prime.

    v_j = u~_j u_j^{-1} is the relative gauge on the overlap, z_j = v_{j0}^{-1} v_j,
    and the glued gauge is w_j = exp(psi log z_j) u_j where psi < 1, and
    v_{j0}^{-1} u~_j where psi = 1.  The tail index j0 is raised until every
    z_j with j >= j0 passes the branch gate on omega'.
    """
    J = len(fields_seq)
    if not (len(gauges1) == len(gauges2) == J):
        raise ValueError("one gauge per sequence element is required")
    if not 0 <= j0 < J:
        raise ValueError("j0 out of range")
    if tail_tol is not None:
        for gs, om in ((gauges1, omega1), (gauges2, omega2)):
            fixed = [GaugeField(f.geom, _apply(f, u)) for f, u in zip(fields_seq[j0:], gs[j0:])]
            tail = cauchy_tail(fixed, om.margin, k_max)
            if tail > tail_tol:
                raise NonCauchyError(f"sequence tail {tail:.3g} exceeds {tail_tol:.3g}")
    t1, t2 = omega1.margin, omega2.margin
    if psi is None:
        if centers is None:
            raise ValueError("either psi or the patch centers are required")
        psi = slab_cutoff(fields_seq[0].geom, centers[0], centers[1], t1, t2,
                          omega_prime)
    else:
        psi = np.asarray(psi, float)
        if np.any(psi[omega_prime & t1 & ~t2] != 0) or np.any(psi[omega_prime & t2 & ~t1] != 1):
            raise ValueError("psi must be 0 where only omega1 is trusted and 1 where only omega2 is")
    inner = psi == 1.0
    outer = psi > 0.0
    glued = Patch(omega1.region | omega2.region, omega_prime, omega1.diameter + omega2.diameter)
    last_err = None
    for start in range(j0, J):
        v0inv = (gauges2[start] @ gauges1[start].inverse()).inverse()
        try:
            ws = [None] * start
            for j in range(start, J):
                z = v0inv @ gauges2[j] @ gauges1[j].inverse()
                w = log_interpolate(z, inner, outer, psi, omega_prime) @ gauges1[j]
                q = w.q.copy()
                q[inner] = (v0inv @ gauges2[j]).q[inner]
                ws.append(GaugeTransform(w.geom, q))
        except BranchGateError as err:
            last_err = err
            continue
        fixed = [None] * start + [GaugeField(f.geom, _apply(f, w))
                                  for f, w in zip(fields_seq[start:], ws[start:])]
        return GluedSequence(ws, fixed, start, psi, glued)
    raise last_err


@dataclass(frozen=True, eq=False)
class PatchedLimit:
    regions: list  # nested bool masks
    transitions: list  # g_{(m+1)m}, meaningful on regions[m]
    limit_fields: list
    gauges: list  # final glued gauge of each region
    tail_indices: list

    def cocycle_residual(self, m=0):
        """max over regions[m] of |g_{m+2,m} - g_{m+2,m+1} g_{m+1,m}|, with g_{m+2,m}
        formed directly from the glued gauges."""
        g31 = self.gauges[m + 2] @ self.gauges[m].inverse()
        prod = self.transitions[m + 1] @ self.transitions[m]
        return float(np.max(np.linalg.norm((g31.q - prod.q)[self.regions[m]], axis=-1)))

    def overlap_agreement(self, m, mask=None):
        """max over regions[m] (or mask) of |g_{(m+1)m}(A^m) - A^{m+1}|."""
        moved = apply_gauge(self.limit_fields[m], self.transitions[m]).a
        mask = self.regions[m] if mask is None else mask
        return float(np.max(np.linalg.norm((moved - self.limit_fields[m + 1].a)[mask], axis=-1)))


@dataclass(frozen=True)
class Cover:
    """Ball cover of one exhaustion region; radius, margin and shrink in length units.

    Each ball is Coulomb fixed on B(c, radius), trusted on B(c, radius - margin),
    and contributes B(c, radius - margin - shrink) to the glued region."""
    centers: tuple
    radius: float
    margin: float
    shrink: float


def _ball(geom, c, r):
    return distance_field(geom, c) <= r + 1e-12


def glue_cover(fields_seq, cover, tol, max_iters, j0=0, cache=None):
    """Coulomb-fix every element on each ball, then glue the balls in order.
    Returns the GluedSequence of the whole cover."""
    g = fields_seq[0].geom
    cache = {} if cache is None else cache
    msites = max(1, int(round(cover.margin / g.h)))

    def fixed(c):
        key = (tuple(c), cover.radius, msites)
        if key not in cache:
            p = ball_patch(g, c, cover.radius, msites)
            cache[key] = (p, [coulomb_fix(f, p, tol, max_iters).transform for f in fields_seq])
        return cache[key]

    keep = cover.radius - cover.margin - cover.shrink
    c0 = cover.centers[0]
    p0, seq = fixed(c0)
    acc = Patch(p0.region, _ball(g, c0, keep), p0.diameter)
    acc_center = np.asarray(c0, float)
    out = GluedSequence(seq, None, j0, np.zeros(g.shape), acc)
    for c in cover.centers[1:]:
        p, other = fixed(c)
        omega_prime = acc.margin | _ball(g, c, keep)
        out = patch_two(fields_seq, acc, p, out.gauges, other, omega_prime, j0=out.j0,
                        centers=(acc_center, np.asarray(c, float)))
        acc = out.patch
        acc_center = np.asarray(c, float)
    return out


def build_exhaustion_limit(fields_seq, covers, tol=1e-2, max_iters=5000):
    """Glue each cover, then form the transitions g_{(m+1)m} = w^{m+1}_J (w^m_J)^{-1}
    at the final index J.  Limit fields are w^m_J(A_J)."""
    regions, finals, limits, tails = [], [], [], []
    J = len(fields_seq) - 1
    cache = {}
    for m, cover in enumerate(covers):
        try:
            glued = glue_cover(fields_seq, cover, tol, max_iters, cache=cache)
        except (CoulombNonConvergence, SmallnessGateError, BranchGateError, ValueError) as err:
            raise StageError(m, err) from err
        regions.append(glued.patch.margin)
        finals.append(glued.gauges[J])
        limits.append(apply_gauge(fields_seq[J], glued.gauges[J]))
        tails.append(glued.j0)
    for m in range(len(regions) - 1):
        if np.any(regions[m] & ~regions[m + 1]):
            raise StageError(m, ValueError("regions must be nested"))
    trans = [finals[m + 1] @ finals[m].inverse() for m in range(len(finals) - 1)]
    return PatchedLimit(regions, trans, limits, finals, tails)


def curvature_invariance_error(original, transformed, mask):
    """max over mask of ||F_{u(A)}|^2 - |F_A|^2|."""
    a = curvature(original).sq()
    b = curvature(transformed).sq()
    return float(np.max(np.abs(a - b)[mask]))
