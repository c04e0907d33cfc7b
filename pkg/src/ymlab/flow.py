"""RK4 integration of the gradient flow dA/dt = -D*F with dissipation bookkeeping."""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .gauge import GaugeField, ck_norm, curvature, pair_tables, to_cm
from .lattice import LatticeGeometry

DEFAULT_CFL = 0.25
OVERFLOW = 1e8


class FlowDivergence(RuntimeError):
    def __init__(self, time, value):
        super().__init__(f"overflow guard fired at t={time:.6g} (max |A| = {value:.3g})")
        self.time = time
        self.value = value


class CFLViolation(ValueError):
    pass


@dataclass
class FlowTrajectory:
    """Snapshots of a solution.

    `dissipation[i]` is the cumulative space-time integral of |D*F|^2 from the first
    snapshot to snapshot i, and `dissipation_density[i]` is the same integral per
    site (before multiplying by h^n).  Energies follow the identity
    E(t) + 2 dissipation(t) = E(0).
    """

    geom: LatticeGeometry
    tau: float
    times: list = dc_field(default_factory=list)
    fields: list = dc_field(default_factory=list)
    energies: list = dc_field(default_factory=list)
    dissipation: list = dc_field(default_factory=list)
    dissipation_density: list = dc_field(default_factory=list)
    steps: int = 0
    _sq: dict = dc_field(default_factory=dict, repr=False, compare=False)

    @property
    def snapshots(self):
        return list(zip(self.times, self.fields))

    def index(self, t, tol=1e-9):
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"time {t} not recorded (nearest {self.times[i]})")
        return i

    def nearest(self, t):
        return int(np.argmin(np.abs(np.asarray(self.times) - t)))

    def energy_density(self, i):
        """|F|^2 per site of snapshot i (cached)."""
        if i not in self._sq:
            self._sq[i] = curvature(self.fields[i]).sq()
        return self._sq[i]

    def field_at(self, t):
        return self.fields[self.index(t)]

    def append(self, t, fld, cum, dens):
        if self.times and not t > self.times[-1]:
            raise ValueError("times must increase")
        self.times.append(float(t))
        self.fields.append(fld)
        self._sq[len(self.fields) - 1] = curvature(fld).sq()
        self.energies.append(float(np.sum(self._sq[len(self.fields) - 1]) * self.geom.dV))
        self.dissipation.append(float(cum))
        self.dissipation_density.append(dens.copy())


def abelian_direction(field, rtol=1e-13):
    """Unit algebra vector e with A = (A.e) e everywhere, or None."""
    flat = field.a.reshape(-1, 3)
    norms = np.linalg.norm(flat, axis=1)
    big = float(norms.max())
    if big == 0.0:
        return np.array([1.0, 0.0, 0.0])
    e = flat[int(np.argmax(norms))] / big
    resid = flat - np.outer(flat @ e, e)
    if float(np.max(np.abs(resid))) <= rtol * big:
        return e
    return None


class _Stepper:
    """Preallocated RK4 buffers in the component-major kernel layout."""

    def __init__(self, field, allow_reduction=True):
        g = field.geom
        self.geom = g
        e = abelian_direction(field) if allow_reduction else None
        self.e = e
        if e is not None:
            a = (field.a @ e)[..., None]
            self.bracket = False
        else:
            a = field.a
            self.bracket = True
        self.a = to_cm(a, g)
        self.y = np.empty_like(self.a)
        self.k = np.empty_like(self.a)
        self.acc = np.empty_like(self.a)
        self.f = np.empty((len(g.pairs), self.a.shape[1], self.a.shape[2]))
        self.q = np.empty(g.size)
        self.tables = pair_tables(g.n)
        self.c1, self.c2 = g.stencil

    def rhs(self, src):
        pmu, pnu, pidx, psgn = self.tables
        _kernels.curvature_cm(src, self.geom.N, self.c1, self.c2, pmu, pnu, self.bracket, self.f)
        _kernels.dstar_cm(src, self.f, self.geom.N, self.c1, self.c2, pidx, psgn, self.bracket, self.k)

    def step(self, dt, dens):
        """Advance in place; adds dt * midpoint |D*F|^2 to dens; returns max |A|."""
        a, y, k, acc = self.a, self.y, self.k, self.acc
        self.rhs(a)
        _kernels.rk_stage(k, acc, y, a, 1.0, 0.5 * dt, True)
        self.rhs(y)
        _kernels.sqnorm_cm(k, self.q)
        dens += (0.5 * dt) * self.q
        _kernels.rk_stage(k, acc, y, a, 2.0, 0.5 * dt, False)
        self.rhs(y)
        _kernels.sqnorm_cm(k, self.q)
        dens += (0.5 * dt) * self.q
        _kernels.rk_stage(k, acc, y, a, 2.0, dt, False)
        self.rhs(y)
        return _kernels.rk_final(k, acc, a, dt / 6.0)

    def field(self):
        g = self.geom
        arr = self.a.transpose(2, 0, 1).reshape(g.shape + (g.n, self.a.shape[1]))
        if self.e is not None:
            arr = arr * self.e
        return GaugeField(g, np.ascontiguousarray(arr))


def max_dt(geom, cfl=DEFAULT_CFL):
    return cfl * geom.h ** 2


def _check_dt(geom, dt, cfl):
    if not dt > 0:
        raise CFLViolation("dt must be positive")
    if dt > max_dt(geom, cfl) * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.3g} exceeds cfl*h^2={max_dt(geom, cfl):.3g}")


def step(field, dt, cfl=DEFAULT_CFL):
    """One classical RK4 step of dA/dt = -D*F."""
    _check_dt(field.geom, dt, cfl)
    st = _Stepper(field)
    big = st.step(dt, np.zeros(field.geom.size))
    if not big <= OVERFLOW:
        raise FlowDivergence(dt, big)
    return st.field()


def run(initial, t_end, record_times=(), dt=None, cfl=DEFAULT_CFL, tau=None,
        allow_reduction=True):
    """Integrate to t_end, recording snapshots at 0, each record time, and t_end.

    Steps are uniform within each segment between consecutive record times, with
    the largest dt' <= dt that lands exactly on the segment end.
    """
    g = initial.geom
    tau = g.tau if tau is None else tau
    if t_end < 0 or not t_end < tau:
        raise ValueError(f"t_end={t_end} must lie in [0, tau={tau})")
    dt = max_dt(g, cfl) if dt is None else dt
    _check_dt(g, dt, cfl)
    marks = sorted({float(t) for t in record_times if 0 < t < t_end} | {float(t_end)})
    traj = FlowTrajectory(g, tau)
    dens = np.zeros(g.size)
    traj.append(0.0, initial.copy(), 0.0, dens.reshape(g.shape))
    if t_end == 0:
        return traj
    st = _Stepper(initial, allow_reduction)
    t = 0.0
    for mark in marks:
        m = max(1, math.ceil((mark - t) / dt * (1 - 1e-12)))
        h = (mark - t) / m
        for i in range(m):
            big = st.step(h, dens)
            traj.steps += 1
            if not big <= OVERFLOW:
                raise FlowDivergence(t + (i + 1) * h, big)
        t = mark
        traj.append(t, st.field(), float(np.sum(dens) * g.dV), dens.reshape(g.shape))
    return traj


def energy_identity_residual(traj, t1, t2):
    i, j = traj.index(t1), traj.index(t2)
    diss = traj.dissipation[j] - traj.dissipation[i]
    return abs(traj.energies[j] + 2.0 * diss - traj.energies[i])


@dataclass(frozen=True)
class DistanceComparison:
    lhs: float
    delta: float
    sqrt_dt: float


def distance_comparison_check(traj, t1, t2, k=0, f_bound=None):
    """||A(t2) - A(t1)||_{C^k} against (delta, sqrt|t2 - t1|), delta^2 = window dissipation."""
    i, j = sorted((traj.index(t1), traj.index(t2)))
    sup = max(float(np.sqrt(np.max(traj.energy_density(m)))) for m in range(i, j + 1))
    if not np.isfinite(sup) or (f_bound is not None and sup > f_bound):
        raise ValueError(f"|F| not bounded on the window (sup {sup:.3g})")
    diff = traj.fields[j].a - traj.fields[i].a
    lhs = ck_norm(diff, traj.geom, k)
    delta = math.sqrt(max(traj.dissipation[j] - traj.dissipation[i], 0.0))
    return DistanceComparison(lhs, delta, math.sqrt(abs(traj.times[j] - traj.times[i])))
