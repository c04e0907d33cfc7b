"""Experiment configuration: one JSON document, validated field by field."""

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .constants import CALIBRATED_R_MAX
from .lattice import GeometryError, build_torus

INITIAL_KINDS = ("flat", "abelian", "random", "bump")


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class GeometryConfig:
    n: int = 4
    N: int = 16
    L: float = 1.0
    tau: float = 0.25
    order: int = 4


@dataclass(frozen=True)
class InitialConfig:
    kind: str = "abelian"
    amplitude: float = 0.3
    seed: int = 0
    k: tuple = (1, 0, 0, 0)
    v: tuple = (0, 1, 0, 0)
    direction: tuple = (1.0, 0.0, 0.0)
    cutoff_wavenumber: int = 1
    center: tuple = ()
    width: float = 0.1


@dataclass(frozen=True)
class FlowConfig:
    t_end: float = 0.01
    cfl: float = 0.25
    dt: float = None
    record_times: tuple = ()


@dataclass(frozen=True)
class AnalysisConfig:
    phi_scales: tuple = (0.05, 0.1, 0.2)
    centers: tuple = ()
    eps0: float = 1e-2
    R0: float = CALIBRATED_R_MAX  # larger radii are reported as uncalibrated
    R_schedule: tuple = (0.2, 0.1, 0.05)
    hausdorff_deltas: tuple = ()
    hausdorff_k: int = 0
    monotonicity: bool = True
    coulomb_tol: float = 1e-2
    coulomb_max_iters: int = 5000
    coulomb_radius: float = 0.0  # 0 disables the Coulomb stage
    blowup: bool = False
    blowup_plane: tuple = ()
    blowup_lambda: float = 0.5
    blowup_window_c: float = 0.25
    density_k: int = 0
    density_R: tuple = ()


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output_dir: str = "out"
    create_output: bool = True

    def geom(self):
        g = self.geometry
        return build_torus(g.n, g.N, g.L, g.tau, g.order)


_TYPES = {int: (int,), float: (int, float), str: (str,), bool: (bool,), tuple: (list, tuple)}


def _coerce(path, value, default):
    if default is None:
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number or null, got {value!r}")
        return float(value)
    kind = type(default)
    ok = _TYPES.get(kind, (kind,))
    if isinstance(value, bool) and kind is not bool:
        raise ConfigError(path, f"expected {kind.__name__}, got a boolean")
    if not isinstance(value, ok):
        raise ConfigError(path, f"expected {kind.__name__}, got {type(value).__name__}")
    if kind is tuple:
        return tuple(tuple(v) if isinstance(v, list) else v for v in value)
    if kind is int and value != int(value):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return kind(value)


def _block(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    known = {f.name: f for f in fields(cls)}
    extra = sorted(set(data) - set(known))
    if extra:
        raise ConfigError(f"{path}.{extra[0]}", "unknown field")
    kw = {}
    for name, f in known.items():
        if name in data:
            kw[name] = _coerce(f"{path}.{name}", data[name], f.default)
    return cls(**kw)


def _positive(path, v):
    if not v > 0:
        raise ConfigError(path, f"must be positive, got {v}")


def validate(cfg):
    g = cfg.geometry
    try:
        geom = cfg.geom()
    except GeometryError as err:
        raise ConfigError("geometry", str(err)) from err
    ini = cfg.initial
    if ini.kind not in INITIAL_KINDS:
        raise ConfigError("initial.kind", f"must be one of {', '.join(INITIAL_KINDS)}")
    if ini.kind == "abelian":
        if len(ini.k) != g.n or len(ini.v) != g.n:
            raise ConfigError("initial.k", f"wave and polarization vectors need {g.n} entries")
        if any(int(c) != c for c in ini.k):
            raise ConfigError("initial.k", "wave vector must be integral")
    if len(ini.direction) != 3:
        raise ConfigError("initial.direction", "algebra direction needs 3 entries")
    if ini.center and len(ini.center) != g.n:
        raise ConfigError("initial.center", f"needs {g.n} entries")
    if ini.kind == "bump":
        _positive("initial.width", ini.width)
    fl = cfg.flow
    if fl.t_end < 0 or not fl.t_end < g.tau:
        raise ConfigError("flow.t_end", f"must lie in [0, tau={g.tau})")
    _positive("flow.cfl", fl.cfl)
    if fl.dt is not None:
        _positive("flow.dt", fl.dt)
    rt = list(fl.record_times)
    if rt != sorted(rt) or len(set(rt)) != len(rt):
        raise ConfigError("flow.record_times", "must be strictly increasing")
    if any(t <= 0 or t > fl.t_end for t in rt):
        raise ConfigError("flow.record_times", "must lie in (0, t_end]")
    an = cfg.analysis
    for name in ("phi_scales", "R_schedule"):
        for i, R in enumerate(getattr(an, name)):
            if not 0 < R <= geom.rho1 * (1 + 1e-12):
                raise ConfigError(f"analysis.{name}[{i}]", f"{R} outside (0, rho1={geom.rho1:.6g}]")
    rs = list(an.R_schedule)
    if any(b >= a for a, b in zip(rs, rs[1:])):
        raise ConfigError("analysis.R_schedule", "must be strictly decreasing")
    for i, c in enumerate(an.centers):
        if not isinstance(c, tuple) or len(c) != g.n or any(int(v) != v for v in c):
            raise ConfigError(f"analysis.centers[{i}]", f"needs {g.n} integer site indices")
    for i, d in enumerate(an.hausdorff_deltas):
        if not d > geom.h:
            raise ConfigError(f"analysis.hausdorff_deltas[{i}]", "must exceed the lattice spacing")
    if not 0 <= an.hausdorff_k <= g.n:
        raise ConfigError("analysis.hausdorff_k", f"must lie in [0, {g.n}]")
    _positive("analysis.eps0", an.eps0)
    _positive("analysis.R0", an.R0)
    _positive("analysis.coulomb_tol", an.coulomb_tol)
    if not 0 < an.blowup_lambda <= 1:
        raise ConfigError("analysis.blowup_lambda", "must lie in (0, 1]")
    _positive("analysis.blowup_window_c", an.blowup_window_c)
    if not 0 <= an.coulomb_radius <= g.L / 2:
        raise ConfigError("analysis.coulomb_radius", f"must lie in [0, L/2={g.L / 2}]")
    if an.coulomb_radius and not an.centers:
        raise ConfigError("analysis.coulomb_radius", "the Coulomb stage needs analysis.centers")
    plane = list(an.blowup_plane)
    if len(plane) != len(set(plane)) or any(not 0 <= a < g.n for a in plane):
        raise ConfigError("analysis.blowup_plane", f"axes must be distinct and in [0, {g.n})")
    if an.blowup and len(plane) != g.n - 4:
        raise ConfigError("analysis.blowup_plane", f"needs n - 4 = {g.n - 4} axes")
    return cfg


def from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected an object")
    blocks = {"geometry": GeometryConfig, "initial": InitialConfig, "flow": FlowConfig,
              "analysis": AnalysisConfig}
    extra = sorted(set(data) - set(blocks) - {"output_dir", "create_output"})
    if extra:
        raise ConfigError(extra[0], "unknown field")
    kw = {name: _block(cls, data.get(name, {}), name) for name, cls in blocks.items()}
    if "output_dir" in data:
        kw["output_dir"] = _coerce("output_dir", data["output_dir"], "")
    if "create_output" in data:
        kw["create_output"] = _coerce("create_output", data["create_output"], True)
    return validate(ExperimentConfig(**kw))


def load_config(path):
    text = Path(path).read_text()  # OSError propagates as an I/O failure
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(str(path), f"invalid JSON at line {err.lineno}: {err.msg}") from err
    return from_dict(data)
