"""Run configuration (YAML).

Schema, with defaults (SI units)::

    scales:    {dx: 4.39e-5, dt: 1.08e-5, rho0: 1060}
    rheology:  {model: carreau_yasuda, mu0: 0.16, mu_inf: 0.0035, lambda: 8.2,
                n: 0.2128, a: 0.64, omega_min: 0.2, omega_max: 1.95}
    porous:    {d_p: 1.25e-3, phi_min: 0.05, phi_pure_fluid_threshold: 0.999999999,
                anisotropic: false, anisotropy: identity, fp_tol: 1e-13, fp_max_iter: 200}
    geometry:  {mask: <path>, coil: null, wire_diameter: 2.0e-4, window: null,
                mode: volume_averaged, region: null, periodic: [false, false, false]}
    inflow:    {waveform: null, period: null, scale: 1.0, ramp_steps: 1500,
                ramp_shape: linear, radius: 1.649e-3}
    run:       {heartbeats: 2, final_time: 2.0, stop_time: null,
                body_acceleration: [0, 0, 0], outlet: characteristic, outlet_relax: 0.001,
                output_every: 100, checkpoint_every: 0, snapshot_times: [], threads: 1,
                backend: auto}

Relative paths resolve against the config file's directory. ``window: null``
means three wire diameters, ``waveform: null`` the built-in synthetic
heartbeat, ``radius: auto`` the equal-area radius of the inlet patch.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .boundaries import OUTLET_SCHEMES, InflowWaveform, read_waveform_csv, synthetic_waveform
from .porous import PorousClosure
from .rheology import CarreauYasudaParams
from .units import UnitScales

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class GeometryConfig:
    mask: str | None = None
    coil: str | None = None
    wire_diameter: float = 0.2e-3
    window: float | None = None
    mode: str = "volume_averaged"
    region: str | None = None
    periodic: tuple = (False, False, False)

    @property
    def window_size(self):
        return 3.0 * self.wire_diameter if self.window is None else self.window


@dataclass
class InflowConfig:
    waveform: str | None = None
    period: float | None = None
    scale: float = 1.0
    ramp_steps: int = 1500
    ramp_shape: str = "linear"
    radius: float | str | None = 1.649e-3


@dataclass
class RunConfig:
    heartbeats: int = 2
    final_time: float | None = 2.0
    stop_time: float | None = None
    body_acceleration: tuple = (0.0, 0.0, 0.0)
    outlet: str = "characteristic"
    outlet_relax: float = 1e-3
    output_every: int = 100
    checkpoint_every: int = 0
    snapshot_times: list = field(default_factory=list)
    threads: int = 1
    backend: str = "auto"


@dataclass
class PorousOptions:
    anisotropic: bool = False
    anisotropy: np.ndarray = field(default_factory=lambda: np.eye(3))
    fp_tol: float = 1e-13
    fp_max_iter: int = 200


@dataclass
class SimConfig:
    scales: UnitScales = field(default_factory=UnitScales)
    rheology: CarreauYasudaParams = field(default_factory=CarreauYasudaParams)
    porous: PorousClosure = field(default_factory=PorousClosure)
    porous_options: PorousOptions = field(default_factory=PorousOptions)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    inflow: InflowConfig = field(default_factory=InflowConfig)
    run: RunConfig = field(default_factory=RunConfig)
    base_dir: str = "."

    def path(self, p):
        if p is None:
            return None
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def waveform(self) -> InflowWaveform:
        inf = self.inflow
        if inf.waveform is None:
            wf = synthetic_waveform(ramp_steps=inf.ramp_steps)
            if inf.period is not None:
                wf = InflowWaveform(wf.t * inf.period / wf.period, wf.v, inf.period, inf.ramp_steps)
        else:
            wf = read_waveform_csv(self.path(inf.waveform), inf.period, inf.ramp_steps, inf.ramp_shape)
        wf.ramp_shape = inf.ramp_shape
        wf.dt = self.scales.dt
        return wf.scaled(inf.scale) if inf.scale != 1.0 else wf

    def peak_inflow_velocity(self) -> float:
        return self.waveform().peak()

    def main_steps(self) -> int:
        """Steps after the ramp: ``heartbeats`` periods, or up to ``stop_time``."""
        if self.run.stop_time is not None:
            return int(round(self.run.stop_time / self.scales.dt))
        period = self.waveform().period
        return int(round(self.run.heartbeats * period / self.scales.dt))


_SECTIONS = {"scales", "rheology", "porous", "geometry", "inflow", "run"}


def _take(section, name, allowed):
    section = dict(section or {})
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return section


def config_from_dict(raw: dict, base_dir=".") -> SimConfig:
    raw = dict(raw or {})
    unknown = set(raw) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    try:
        sc = _take(raw.get("scales"), "scales", ("dx", "dt", "rho0"))
        scales = UnitScales(**{k: float(v) for k, v in sc.items()})

        rh = _take(raw.get("rheology"), "rheology",
                   ("model", "mu0", "mu_inf", "lambda", "n", "a", "omega_min", "omega_max"))
        if "lambda" in rh:
            rh["lam"] = rh.pop("lambda")
        rheology = CarreauYasudaParams(**rh)

        po = _take(raw.get("porous"), "porous",
                   ("d_p", "phi_min", "phi_pure_fluid_threshold", "anisotropic", "anisotropy",
                    "fp_tol", "fp_max_iter"))
        opts = PorousOptions(
            anisotropic=bool(po.pop("anisotropic", False)),
            anisotropy=np.array(po.pop("anisotropy", np.eye(3)), dtype=float),
            fp_tol=float(po.pop("fp_tol", 1e-13)),
            fp_max_iter=int(po.pop("fp_max_iter", 200)),
        )
        if opts.anisotropy.shape != (3, 3):
            raise ConfigError("porous.anisotropy must be a 3x3 matrix")
        closure = PorousClosure(**{k: float(v) for k, v in po.items()})

        ge = _take(raw.get("geometry"), "geometry",
                   ("mask", "coil", "wire_diameter", "window", "mode", "region", "periodic"))
        if "periodic" in ge:
            ge["periodic"] = tuple(bool(p) for p in ge["periodic"])
        geometry = GeometryConfig(**ge)

        inf = _take(raw.get("inflow"), "inflow",
                    ("waveform", "period", "scale", "ramp_steps", "ramp_shape", "radius"))
        inflow = InflowConfig(**inf)

        ru = _take(raw.get("run"), "run",
                   ("heartbeats", "final_time", "stop_time", "body_acceleration", "outlet",
                    "outlet_relax", "output_every", "checkpoint_every", "snapshot_times",
                    "threads", "backend"))
        if "body_acceleration" in ru:
            ru["body_acceleration"] = tuple(float(g) for g in ru["body_acceleration"])
        run = RunConfig(**ru)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    cfg = SimConfig(scales, rheology, closure, opts, geometry, inflow, run, base_dir)
    validate(cfg)
    return cfg


def load_config(path) -> SimConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return config_from_dict(raw, os.path.dirname(os.path.abspath(path)))


def dump_config(cfg: SimConfig) -> dict:
    """Plain-dict form suitable for YAML."""
    rh = cfg.rheology
    return {
        "scales": {"dx": cfg.scales.dx, "dt": cfg.scales.dt, "rho0": cfg.scales.rho0},
        "rheology": {"model": rh.model, "mu0": rh.mu0, "mu_inf": rh.mu_inf, "lambda": rh.lam,
                     "n": rh.n, "a": rh.a, "omega_min": rh.omega_min, "omega_max": rh.omega_max},
        "porous": {"d_p": cfg.porous.d_p, "phi_min": cfg.porous.phi_min,
                   "phi_pure_fluid_threshold": cfg.porous.phi_pure_fluid_threshold,
                   "anisotropic": cfg.porous_options.anisotropic,
                   "anisotropy": cfg.porous_options.anisotropy.tolist(),
                   "fp_tol": cfg.porous_options.fp_tol,
                   "fp_max_iter": cfg.porous_options.fp_max_iter},
        "geometry": {"mask": cfg.geometry.mask, "coil": cfg.geometry.coil,
                     "wire_diameter": cfg.geometry.wire_diameter, "window": cfg.geometry.window,
                     "mode": cfg.geometry.mode, "region": cfg.geometry.region,
                     "periodic": list(cfg.geometry.periodic)},
        "inflow": {"waveform": cfg.inflow.waveform, "period": cfg.inflow.period,
                   "scale": cfg.inflow.scale, "ramp_steps": cfg.inflow.ramp_steps,
                   "ramp_shape": cfg.inflow.ramp_shape, "radius": cfg.inflow.radius},
        "run": {"heartbeats": cfg.run.heartbeats, "final_time": cfg.run.final_time,
                "stop_time": cfg.run.stop_time,
                "body_acceleration": list(cfg.run.body_acceleration),
                "outlet": cfg.run.outlet, "outlet_relax": cfg.run.outlet_relax,
                "output_every": cfg.run.output_every,
                "checkpoint_every": cfg.run.checkpoint_every,
                "snapshot_times": list(cfg.run.snapshot_times), "threads": cfg.run.threads,
                "backend": cfg.run.backend},
    }


def validate(cfg: SimConfig):
    g = cfg.geometry
    if g.mode not in ("fully_resolved", "volume_averaged"):
        raise ConfigError(f"geometry.mode must be fully_resolved or volume_averaged, got {g.mode!r}")
    if g.mode == "fully_resolved" and g.coil is None:
        log.warning("fully_resolved mode without a coil: plain vessel run")
    if not g.wire_diameter > 0 or not g.window_size > 0:
        raise ConfigError("wire diameter and window must be positive")
    if len(g.periodic) != 3:
        raise ConfigError("geometry.periodic needs three entries")
    r = cfg.run
    if r.outlet not in OUTLET_SCHEMES:
        raise ConfigError(f"run.outlet must be one of {OUTLET_SCHEMES}, got {r.outlet!r}")
    if not 0 <= r.outlet_relax <= 1:
        raise ConfigError("run.outlet_relax must lie in [0, 1]")
    if r.heartbeats < 0 or r.output_every < 0 or r.checkpoint_every < 0 or r.threads < 1:
        raise ConfigError("heartbeats, cadences must be non-negative and threads >= 1")
    if len(r.body_acceleration) != 3:
        raise ConfigError("run.body_acceleration needs three components")
    inf = cfg.inflow
    if inf.ramp_steps < 0:
        raise ConfigError("inflow.ramp_steps must be non-negative")
    if not (inf.radius is None or inf.radius == "auto" or float(inf.radius) > 0):
        raise ConfigError("inflow.radius must be positive or 'auto'")
    if inf.ramp_shape not in ("linear", "smoothstep"):
        raise ConfigError("inflow.ramp_shape must be linear or smoothstep")
    if cfg.porous_options.anisotropic:
        A = cfg.porous_options.anisotropy
        if not np.allclose(A, A.T) or np.any(np.linalg.eigvalsh(A) <= 0):
            raise ConfigError("porous.anisotropy must be symmetric positive definite")
    try:
        wf = cfg.waveform()
    except ValueError as exc:
        raise ConfigError(f"waveform: {exc}") from exc
    if r.final_time is not None and r.stop_time is None:
        derived = r.heartbeats * wf.period
        if not math.isclose(derived, r.final_time, rel_tol=1e-9):
            log.warning("final_time %.6g differs from heartbeats x period = %.6g; "
                        "using the heartbeat count", r.final_time, derived)
