"""Concentration set detection, snapshot measures and covering estimates."""

from dataclasses import dataclass

import numpy as np

from .density import PointMeasure
from .flow import FlowTrajectory
from .gauge import GaugeField, curvature, region_mask
from .weighted import _check_R, weight_field


@dataclass(frozen=True, eq=False)
class DensityMap:
    R: float
    t: float
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class SigmaSet:
    sites: np.ndarray  # (M, n) lexicographically sorted
    eps0: float
    R_schedule: tuple


def density_map_from(dens, geom, R):
    """Phi(R, x) at every site x: circular correlation of |F|^2 with the weight."""
    _check_R(geom, R)
    w = weight_field(geom, R, (0,) * geom.n)
    # the weight is even under y -> -y, so correlation equals convolution
    ax = tuple(range(geom.n))
    vals = np.fft.irfftn(np.fft.rfftn(dens, axes=ax) * np.fft.rfftn(w, axes=ax), s=geom.shape, axes=ax) * geom.dV
    return np.maximum(vals, 0.0)


def density_map(source, R, t=None, stride=1):
    """Density map of a trajectory at time t (default tau - R^2, nearest snapshot),
    or of a single field snapshot."""
    if isinstance(source, GaugeField):
        dens, geom, tt = curvature(source).sq(), source.geom, 0.0 if t is None else t
    else:
        geom = source.geom
        tt = source.tau - R * R if t is None else t
        i = source.nearest(tt)
        dens, tt = source.energy_density(i), source.times[i]
    vals = density_map_from(dens, geom, R)
    if stride > 1:
        vals = vals[(slice(None, None, stride),) * geom.n]
    return DensityMap(float(R), float(tt), vals)


def detect_sigma(family, eps0, R_schedule):
    """Sites where min over the family of Phi(R, x, tau - R^2) >= eps0 for every R."""
    R = [float(r) for r in R_schedule]
    if any(b >= a for a, b in zip(R, R[1:])):
        raise ValueError("R_schedule must be strictly decreasing")
    geom = family[0].geom
    keep = np.ones(geom.shape, bool)
    for r in R:
        _check_R(geom, r)
        low = None
        for traj in family:
            i = traj.index(traj.tau - r * r)
            vals = density_map_from(traj.energy_density(i), geom, r)
            low = vals if low is None else np.minimum(low, vals)
        keep &= low >= eps0
    return SigmaSet(np.argwhere(keep), float(eps0), tuple(R))


def _periodic_dist(geom, p, pts):
    d = np.abs(pts - p) % geom.N
    d = np.minimum(d, geom.N - d) * geom.h
    return np.sqrt(np.sum(d * d, axis=-1))


def _greedy(geom, pts, order, r):
    """Greedy maximal family of disjoint open balls of radius r centered in pts."""
    chosen = []
    for i in order:
        p = pts[i]
        if chosen and np.min(_periodic_dist(geom, p, pts[chosen])) < 2 * r:
            continue
        chosen.append(i)
    return len(chosen)


def hausdorff_estimate(geom, points, k, delta, values=None):
    """H^k_delta estimate: greedy disjoint packing at radius delta/5, count * delta^k.

    Sites are taken in decreasing `values` order (if given), ties broken by the
    lexicographic order of coordinates relative to an anchor point.  The count is
    maximized over anchors in the set, which makes the result invariant under
    lattice translations.
    """
    if delta <= geom.h:
        raise ValueError("delta must exceed the lattice spacing")
    pts = np.atleast_2d(np.asarray(points, np.int64)) % geom.N
    if pts.size == 0:
        return 0.0
    pts = np.unique(pts, axis=0)
    vals = np.zeros(len(pts)) if values is None else np.asarray(values, float)
    if values is not None and np.ndim(values) == geom.n:
        vals = np.asarray(values)[tuple(pts.T)]
    anchors = np.flatnonzero(vals == vals.max())
    best = 0
    for a in anchors:
        rel = (pts - pts[a]) % geom.N
        keys = [rel[:, j] for j in range(geom.n - 1, -1, -1)] + [-vals]
        order = np.lexsort(keys)
        best = max(best, _greedy(geom, pts, order, delta / 5.0))
    return float(best * delta ** k)


def plane_sites(geom, axes, base=None):
    """All sites of the coordinate plane spanned by `axes` through `base`."""
    base = np.zeros(geom.n, np.int64) if base is None else np.asarray(base, np.int64)
    grids = np.meshgrid(*([np.arange(geom.N)] * len(axes)), indexing="ij")
    pts = np.tile(base, (grids[0].size if axes else 1, 1))
    for j, g in zip(axes, grids):
        pts[:, j] = g.ravel()
    return pts


def snapshot_measure(field):
    """Atoms at site positions with weights |F|^2 h^n."""
    g = field.geom
    w = (curvature(field).sq() * g.dV).reshape(-1)
    return PointMeasure(g.positions().reshape(-1, g.n), w)


def dstar_tail(traj: FlowTrajectory, sigma_t, region=None):
    """int_{sigma_t}^{last} int_region |D*F|^2."""
    i = traj.index(sigma_t)
    mask = region_mask(traj.geom, region)
    dd = traj.dissipation_density[-1] - traj.dissipation_density[i]
    return float(np.sum(dd[mask]) * traj.geom.dV)
