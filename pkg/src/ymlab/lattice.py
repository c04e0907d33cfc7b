"""Flat periodic lattice geometry: sites, minimum-image distances, cutoffs, balls."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

Site = tuple  # n-tuple of ints mod N


class GeometryError(ValueError):
    pass


# centered first-derivative stencils (multiplied by 1/h): shifts +-1, +-2
STENCILS = {2: (0.5, 0.0), 4: (2.0 / 3.0, -1.0 / 12.0)}


@dataclass(frozen=True)
class LatticeGeometry:
    n: int
    N: int
    L: float
    tau: float
    order: int = 4

    @property
    def h(self):
        return self.L / self.N

    @property
    def inj(self):
        return self.L / 2.0

    @property
    def rho1(self):
        return min(self.inj / 2.0, np.sqrt(self.tau) / 2.0, 1.0)

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def size(self):
        return self.N ** self.n

    @property
    def dV(self):
        return self.h ** self.n

    @property
    def diameter(self):
        return np.sqrt(self.n) * self.L / 2.0

    @property
    def stencil(self):
        c1, c2 = STENCILS[self.order]
        return c1 / self.h, c2 / self.h

    @cached_property
    def pairs(self):
        return [(m, v) for m in range(self.n) for v in range(m + 1, self.n)]

    def wrap(self, x):
        return tuple(int(c) % self.N for c in x)

    def refined(self, factor=2):
        return LatticeGeometry(self.n, self.N * factor, self.L, self.tau, self.order)

    def axis_coords(self):
        return np.arange(self.N) * self.h

    def positions(self):
        """Site positions in length units, shape (N,)*n + (n,)."""
        g = np.meshgrid(*([self.axis_coords()] * self.n), indexing="ij")
        return np.stack(g, axis=-1)


def build_torus(n, N, L, tau, order=4):
    if int(n) != n or n < 4:
        raise GeometryError(f"dimension n={n} must be an integer >= 4")
    if int(N) != N or N < 8:
        raise GeometryError(f"extent N={N} must be an integer >= 8")
    if not L > 0:
        raise GeometryError(f"side L={L} must be positive")
    if not tau > 0:
        raise GeometryError(f"horizon tau={tau} must be positive")
    if order not in STENCILS:
        raise GeometryError(f"stencil order {order} not in {sorted(STENCILS)}")
    return LatticeGeometry(int(n), int(N), float(L), float(tau), int(order))


def axis_offsets(geom, x):
    """Per-axis minimum-image offsets |x_j - y_j| (length) from x to every coordinate."""
    idx = np.arange(geom.N)
    out = []
    for c in x:
        d = np.abs(idx - int(c) % geom.N)
        out.append(np.minimum(d, geom.N - d) * geom.h)
    return out


def distance(geom, x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    d = np.abs(x - y) % geom.N
    d = np.minimum(d, geom.N - d) * geom.h
    return np.sqrt(np.sum(d * d, axis=-1))


def distance_field(geom, x):
    """Distances from site x to every site, shape (N,)*n."""
    d2 = np.zeros(geom.shape)
    for j, off in enumerate(axis_offsets(geom, x)):
        sh = [1] * geom.n
        sh[j] = geom.N
        d2 = d2 + (off ** 2).reshape(sh)
    return np.sqrt(d2)


def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def cutoff_profile(s):
    """phi(s): 1 on [0, 1/2], 0 on [1, inf), quintic transition."""
    s = np.asarray(s, float)
    return 1.0 - smoothstep(2.0 * s - 1.0)


def cutoff(geom, x, y, rho):
    if not rho > 0:
        raise ValueError("rho must be positive")
    return cutoff_profile(distance(geom, x, y) / rho)


def ball_sites(geom, x, r):
    """Sites y with d(x, y) <= r, as an (M, n) integer array in lexicographic order."""
    mask = distance_field(geom, x) <= r + 1e-12 * geom.h
    return np.argwhere(mask)
