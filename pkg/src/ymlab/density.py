"""Densities of point measures: Gaussian density phi(R), ball mass m(r), the
two-limit comparison, the rational approximation of the unit-interval indicator
and its Laplace representation, and the small-mass density bound."""

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

_CHUNK = 1 << 20


@dataclass(frozen=True, eq=False)
class PointMeasure:
    positions: np.ndarray  # (M, n)
    weights: np.ndarray  # (M,)

    def __post_init__(self):
        if self.positions.ndim != 2 or self.weights.shape != (self.positions.shape[0],):
            raise ValueError("positions (M, n) and weights (M,) required")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")

    @property
    def dim(self):
        return self.positions.shape[1]

    def total_mass(self):
        return float(np.sum(self.weights))

    def __add__(self, other):
        return PointMeasure(np.concatenate([self.positions, other.positions]),
                            np.concatenate([self.weights, other.weights]))

    def scaled(self, c):
        return PointMeasure(self.positions, self.weights * c)

    def translated(self, v):
        return PointMeasure(self.positions + np.asarray(v, float), self.weights)


def empty_measure(n):
    return PointMeasure(np.zeros((0, n)), np.zeros(0))


def kplane_grid(k, n, spacing, radius, center=None, offset=0.5):
    """Unit k-density grid on the plane spanned by the first k axes.

    Atoms sit at (j + offset) * spacing (so a query at the origin is a cell
    center) and are kept within `radius` of `center`; each weighs spacing**k.
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    m = int(math.ceil(radius / spacing)) + 1
    ax = (np.arange(-m, m) + offset) * spacing
    g = np.stack(np.meshgrid(*([ax] * k), indexing="ij"), axis=-1).reshape(-1, k)
    g = g[np.sum(g * g, axis=1) <= radius * radius]
    pos = np.zeros((g.shape[0], n))
    pos[:, :k] = g
    if center is not None:
        pos += np.asarray(center, float)
    return PointMeasure(pos, np.full(g.shape[0], float(spacing) ** k))


def _sqdist_chunks(measure, x):
    x = np.asarray(x, float)
    for s in range(0, measure.positions.shape[0], _CHUNK):
        d = measure.positions[s:s + _CHUNK] - x
        yield s, np.einsum("ij,ij->i", d, d)


def gaussian_density(measure, x, R, k):
    """phi(R) = R^-k sum_j w_j exp(-|x - x_j|^2 / 4R^2) (cutoff taken as 1)."""
    if not R > 0:
        raise ValueError("R must be positive")
    tot = 0.0
    for s, d2 in _sqdist_chunks(measure, x):
        w = measure.weights[s:s + d2.shape[0]]
        tot += float(np.sum(w * np.exp(-d2 / (4.0 * R * R))))
    return tot / R ** k


def ball_mass(measure, x, r):
    if r < 0:
        raise ValueError("r must be nonnegative")
    tot = 0.0
    for s, d2 in _sqdist_chunks(measure, x):
        w = measure.weights[s:s + d2.shape[0]]
        tot += float(np.sum(w[d2 <= r * r]))
    return tot


def gamma_half_integer(k):
    """Gamma(k/2 + 1) for integer k >= 0 by closed forms."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    if k % 2 == 0:
        return float(math.factorial(k // 2))
    j = (k + 1) // 2  # Gamma(j + 1/2) = (2j)! sqrt(pi) / (4^j j!)
    return math.factorial(2 * j) * math.sqrt(math.pi) / (4 ** j * math.factorial(j))


def unit_ball_volume(k):
    return math.pi ** (k / 2) / gamma_half_integer(k)


@dataclass(frozen=True)
class TwoLimitReport:
    radii: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    terminal_gap: float


def two_limit_check(measure, x, k, R_schedule, floor=None):
    """Traces of m(R)/R^k and phi(R)/(2^k Gamma(k/2+1)); relative gap at the last R."""
    R = np.asarray(R_schedule, float)
    if R.ndim != 1 or R.size == 0 or np.any(np.diff(R) >= 0):
        raise ValueError("R_schedule must be strictly decreasing")
    if floor is not None and R[-1] < floor:
        raise ValueError(f"smallest R={R[-1]} below resolution floor {floor}")
    norm = 2.0 ** k * gamma_half_integer(k)
    lhs = np.array([ball_mass(measure, x, r) / r ** k for r in R])
    rhs = np.array([gaussian_density(measure, x, r, k) / norm for r in R])
    gap = abs(lhs[-1] - rhs[-1]) / max(abs(rhs[-1]), 1e-300)
    return TwoLimitReport(R, lhs, rhs, float(gap))


# -- rational approximation of the smoothed cutoff ------------------------------

def sigma_band(eps):
    """u-interval of the transition: sigma = 0 below lo, 1 above hi."""
    return 1.0 / (2.0 + eps), 1.0 / (2.0 - eps)


def sigma(u, eps):
    lo, hi = sigma_band(eps)
    t = np.clip((np.asarray(u, float) - lo) / (hi - lo), 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


class ApproximationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ApproxKernel:
    eps: float
    N0: int
    k: int
    coeffs: tuple  # ((i, a_i), ...) with a_i as mpmath mpf
    dps: int = 50
    degree: int = field(default=0)

    def value(self, x):
        """chi~(x) = sum a_i / (x + 1)^i, evaluated in extended precision."""
        with mp.workdps(self.dps):
            u = 1 / (mp.mpf(x) + 1)
            return float(mp.fsum(a * u ** i for i, a in self.coeffs))

    def values(self, xs):
        return np.array([self.value(x) for x in np.asarray(xs, float)])

    def to_json(self):
        return {"eps": self.eps, "N0": self.N0, "k": self.k, "dps": self.dps,
                "coeffs": [[i, mp.nstr(a, self.dps)] for i, a in self.coeffs]}

    @staticmethod
    def from_json(d):
        with mp.workdps(d["dps"]):
            co = tuple((int(i), mp.mpf(a)) for i, a in d["coeffs"])
        return ApproxKernel(d["eps"], d["N0"], d["k"], co, d["dps"], len(co) - 1)


def check_grid(n_points=10_000):
    """Log grid on [0, inf) used to certify the bounds (plus x = 0 and band edges)."""
    return np.concatenate([[0.0], np.logspace(-4, 4, n_points - 1)])


def certify(kernel, grid=None):
    """Worst slack of the three bounds on a grid; all must be >= 0."""
    eps, N0 = kernel.eps, kernel.N0
    xs = check_grid() if grid is None else grid
    xs = np.unique(np.concatenate([xs, [1 - eps, 1 + eps, 4.0]]))
    v = kernel.values(xs)
    range_slack = min(np.min(v + eps), np.min(1 + eps - v))
    near = xs <= 1 - eps
    far = xs >= 1 + eps
    near_slack = np.min(eps - np.abs(v[near] - 1.0)) if near.any() else np.inf
    far_slack = np.min(eps / xs[far] ** N0 - np.abs(v[far])) if far.any() else np.inf
    return float(min(range_slack, near_slack, far_slack))


def build_chi_approx(eps, N0, k, degree_cap=200, start_degree=8):
    """Polynomial p ~ u^{-N0} sigma(u) on [0, 1] (Chebyshev interpolation with degree
    escalation), then chi~(x) = u^{N0} p(u) with u = 1/(x+1)."""
    if not N0 > (k + 1) / 2:
        raise ValueError(f"N0={N0} must exceed (k+1)/2")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")

    def target(u):
        u = np.asarray(u, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(u > 0, sigma(u, eps) / np.where(u > 0, u, 1.0) ** N0, 0.0)

    deg = start_degree
    while deg <= degree_cap:
        cheb = np.polynomial.Chebyshev.interpolate(target, deg, domain=[0, 1])
        fine = np.linspace(0, 1, 20 * deg + 1)
        if np.max(np.abs(cheb(fine) - target(fine))) < 0.4 * eps:
            kern = _to_kernel(cheb, eps, N0, k)
            if certify(kern) >= 0:
                return kern
        deg = int(math.ceil(deg * 1.25))
    raise ApproximationError(f"degree cap {degree_cap} reached for eps={eps}")


def _to_kernel(cheb, eps, N0, k):
    # exact conversion of the Chebyshev series to monomials in u, in high precision
    c = cheb.coef
    # monomial coefficients of T_j(2u - 1) grow like (3 + 2 sqrt 2)^j
    mag = float(np.max(np.abs(c))) * 6.0 ** len(c)
    dps = 30 + int(math.log10(max(mag, 10.0)))
    with mp.workdps(dps):
        # T_j(2u - 1) in the monomial basis via recurrence
        t_prev = [mp.mpf(1)]
        t_cur = [mp.mpf(-1), mp.mpf(2)]
        poly = [mp.mpf(c[0])] + [mp.mpf(0)] * (len(c) - 1)
        for j in range(1, len(c)):
            if j > 1:
                nxt = [mp.mpf(0)] * (j + 1)
                for i, v in enumerate(t_cur):
                    nxt[i] += -2 * v
                    nxt[i + 1] += 4 * v
                for i, v in enumerate(t_prev):
                    nxt[i] -= v
                t_prev, t_cur = t_cur, nxt
            for i, v in enumerate(t_cur):
                poly[i] += mp.mpf(c[j]) * v
        coeffs = tuple((N0 + i, a) for i, a in enumerate(poly))
    return ApproxKernel(float(eps), int(N0), int(k), coeffs, dps, len(poly) - 1)


def single_term_kernel(i, k, eps=0.25):
    with mp.workdps(30):
        return ApproxKernel(eps, i, k, ((i, mp.mpf(1)),), 30, 0)


def _g_series(kernel):
    """Coefficients b_i = a_i / (2^{2i-1} (i-1)!) so that the g sum is
    lam^-1 * sum_i b_i v^i with v = lam^-2."""
    return [(i, a / (mp.mpf(2) ** (2 * i - 1) * mp.factorial(i - 1))) for i, a in kernel.coeffs]


def _horner(series, v):
    lo = series[0][0]
    acc = mp.mpf(0)
    for _, b in reversed(series):
        acc = acc * v + b
    return acc * v ** lo


def g_eps_kernel(kernel, lam, k=None):
    """g(lam) = e^{-1/4 lam^2} lam^k sum_i a_i / (lam^{2i+1} 2^{2i-1} (i-1)!).

    The sign is the one for which the Laplace reconstruction returns +chi~.
    """
    k = kernel.k if k is None else k
    with mp.workdps(kernel.dps):
        lam = mp.mpf(lam)
        if lam <= 0:
            return 0.0
        s = _horner(_g_series(kernel), 1 / (lam * lam)) / lam
        return float(mp.exp(-1 / (4 * lam * lam)) * lam ** k * s)


def laplace_reconstruct(kernel, x, k=None):
    """int_0^inf g(lam) e^{-x/4 lam^2} lam^{-k} d lam by adaptive quadrature.

    The lam^k of g and the lam^-k of the kernel cancel identically; k is kept in
    the signature for symmetry with g_eps_kernel.
    """
    with mp.workdps(kernel.dps):
        x = mp.mpf(x)
        series = _g_series(kernel)

        def integrand(lam):
            if lam == 0:
                return mp.mpf(0)
            v = 1 / (lam * lam)
            return mp.exp(-(1 + x) * v / 4) * _horner(series, v) / lam

        # geometric breakpoints resolve the peaks of the high-order terms at small lam
        pts = [mp.mpf(0)] + [mp.mpf(2) ** (j / mp.mpf(2)) for j in range(-16, 7)] + [mp.inf]
        return float(mp.quad(integrand, pts))


@dataclass(frozen=True)
class SandwichReport:
    lower: float
    mass: float
    upper: float
    C: float


def smoothed_ball_mass(measure, x, R, kernel):
    """int chi~((r/R)^2) d mu."""
    tot = 0.0
    for s, d2 in _sqdist_chunks(measure, x):
        w = measure.weights[s:s + d2.shape[0]]
        keep = w > 0
        if not keep.any():
            continue
        xs = d2[keep] / (R * R)
        # group equal radii (grids repeat distances) to limit extended-precision work
        uniq, inv = np.unique(xs, return_inverse=True)
        vals = kernel.values(uniq)
        tot += float(np.sum(w[keep] * vals[inv]))
    return tot


def sandwich_check(measure, x, R, kernel):
    """Sandwich int chi_eps(r/(1-eps)R) - C eps R^k <= mu(B_R) <= int chi_eps(r/(1+eps)R) + C eps R^k
    with C = R^-k int (2R/(R+r))^{2 N0} d mu."""
    eps, N0, k = kernel.eps, kernel.N0, kernel.k
    tail = 0.0
    for s, d2 in _sqdist_chunks(measure, x):
        w = measure.weights[s:s + d2.shape[0]]
        tail += float(np.sum(w * (2 * R / (R + np.sqrt(d2))) ** (2 * N0)))
    C = tail / R ** k
    lo = smoothed_ball_mass(measure, x, (1 - eps) * R, kernel) - C * eps * R ** k
    hi = smoothed_ball_mass(measure, x, (1 + eps) * R, kernel) + C * eps * R ** k
    return SandwichReport(lo, ball_mass(measure, x, R), hi, C)


class MassBoundError(ValueError):
    pass


class DensityBoundError(ValueError):
    pass


@dataclass(frozen=True)
class SupDensityReport:
    lhs: float
    bound: float


def sup_density_bound_check(measure, x, R, eps, E0, k, r_samples=None):
    """lhs = phi(eps^{1/2k} R), bound = sqrt(eps) + E0 exp(-eps^{-1/2k})."""
    m = ball_mass(measure, x, R)
    if m > eps * R ** k * (1 + 1e-12):
        raise MassBoundError(f"m(R)={m:.4g} exceeds eps R^k={eps * R ** k:.4g}")
    rs = R * np.logspace(-2, 0, 9) if r_samples is None else np.asarray(r_samples, float)
    for r in rs:
        p = gaussian_density(measure, x, r, k)
        if p > E0 * (1 + 1e-12):
            raise DensityBoundError(f"phi({r:.4g})={p:.4g} exceeds E0={E0:.4g}")
    a = eps ** (1.0 / (2 * k))
    lhs = gaussian_density(measure, x, a * R, k)
    return SupDensityReport(lhs, math.sqrt(eps) + E0 * math.exp(-1.0 / a))
