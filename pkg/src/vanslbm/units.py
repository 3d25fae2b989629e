"""Conversion between SI and lattice units.

Solver state lives in lattice units (dx = dt = 1, reference density 1).
Conversion happens only when a config is ingested and when output is written.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .lattice import CS2

log = logging.getLogger(__name__)

MACH_WARN = 0.1
OMEGA_SAFE = (0.05, 1.95)


@dataclass(frozen=True)
class UnitScales:
    dx: float = 43.9e-6
    dt: float = 10.8e-6
    rho0: float = 1060.0

    def __post_init__(self):
        for name in ("dx", "dt", "rho0"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be positive and finite, got {val!r}")

    @property
    def velocity(self) -> float:
        return self.dx / self.dt

    @property
    def kinematic_viscosity(self) -> float:
        return self.dx * self.dx / self.dt

    @property
    def dynamic_viscosity(self) -> float:
        return self.rho0 * self.dx * self.dx / self.dt

    @property
    def stress(self) -> float:
        return self.rho0 * self.velocity ** 2

    @property
    def acceleration(self) -> float:
        return self.dx / (self.dt * self.dt)


def to_lattice_velocity(u_phys, scales: UnitScales):
    return u_phys * scales.dt / scales.dx


def to_physical_velocity(u_lat, scales: UnitScales):
    return u_lat * scales.dx / scales.dt


def to_lattice_kinematic_viscosity(nu_phys, scales: UnitScales):
    if not nu_phys > 0:
        raise ValueError(f"kinematic viscosity must be positive, got {nu_phys!r}")
    return nu_phys * scales.dt / (scales.dx * scales.dx)


def to_physical_kinematic_viscosity(nu_lat, scales: UnitScales):
    return nu_lat * scales.dx * scales.dx / scales.dt


def to_lattice_dynamic_viscosity(mu_phys, scales: UnitScales):
    return mu_phys / scales.dynamic_viscosity


def to_physical_dynamic_viscosity(mu_lat, scales: UnitScales):
    return mu_lat * scales.dynamic_viscosity


def to_lattice_length(x_phys, scales: UnitScales):
    return x_phys / scales.dx


def to_lattice_area(a_phys, scales: UnitScales):
    return a_phys / (scales.dx * scales.dx)


def to_lattice_time(t_phys, scales: UnitScales):
    return t_phys / scales.dt


def to_lattice_acceleration(g_phys, scales: UnitScales):
    return g_phys / scales.acceleration


def to_physical_stress(s_lat, scales: UnitScales):
    return s_lat * scales.stress


@dataclass
class StabilityReport:
    peak_mean_velocity: float  # lattice units
    peak_centerline_velocity: float
    mach: float
    omega_range: tuple[float, float]
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.warnings


def _omega(mu_lat: float) -> float:
    return 2.0 * CS2 / (2.0 * mu_lat + CS2)


def stability_report(config) -> StabilityReport:
    """Pre-flight regime check for a run configuration.

    Warnings are advisory only. The lattice velocity check uses the
    Poiseuille centreline value ``2 v_peak``; the Mach number is reported
    against ``c_s``.
    """
    scales = config.scales
    v_peak = abs(config.peak_inflow_velocity())
    u_mean = to_lattice_velocity(v_peak, scales)
    u_center = 2.0 * u_mean
    mach = u_center / math.sqrt(CS2)

    rh = config.rheology
    mus = [to_lattice_dynamic_viscosity(rh.mu0, scales)]
    if rh.model != "newtonian":
        mus.append(to_lattice_dynamic_viscosity(rh.mu_inf, scales))
    omegas = sorted(_omega(m) for m in mus)
    omega_range = (omegas[0], omegas[-1])

    warnings = []
    if u_center > MACH_WARN:
        warnings.append(
            f"peak lattice velocity {u_center:.4g} exceeds {MACH_WARN} (Mach {mach:.3g})"
        )
    lo, hi = OMEGA_SAFE
    if omega_range[0] <= lo or omega_range[1] >= hi:
        warnings.append(
            f"relaxation rate range [{omega_range[0]:.4g}, {omega_range[1]:.4g}] "
            f"leaves ({lo}, {hi})"
        )
    for msg in warnings:
        log.warning(msg)
    return StabilityReport(u_mean, u_center, mach, omega_range, warnings)
