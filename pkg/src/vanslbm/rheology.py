"""Carreau-Yasuda blood rheology and the viscosity <-> relaxation-rate map."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import CS2
from .units import UnitScales, to_lattice_dynamic_viscosity, to_lattice_time

OMEGA_BOUNDS = (0.2, 1.95)


@dataclass(frozen=True)
class CarreauYasudaParams:
    """Shear-thinning law parameters, SI units.

    Defaults are the blood set of the reference simulations. ``mu0`` is the
    zero-shear (larger) limit; ``model="newtonian"`` pins the viscosity at
    ``mu0``.
    """

    mu0: float = 0.16
    mu_inf: float = 0.0035
    lam: float = 8.2
    n: float = 0.2128
    a: float = 0.64
    model: str = "carreau_yasuda"
    omega_min: float = OMEGA_BOUNDS[0]
    omega_max: float = OMEGA_BOUNDS[1]

    def __post_init__(self):
        if self.model not in ("carreau_yasuda", "newtonian"):
            raise ValueError(f"unknown rheology model {self.model!r}")
        if not self.mu0 > 0:
            raise ValueError("mu0 must be positive")
        if self.model == "carreau_yasuda":
            if not self.mu0 > self.mu_inf > 0:
                raise ValueError("shear thinning needs mu0 > mu_inf > 0")
            if not (self.lam > 0 and self.a > 0 and 0 < self.n < 1):
                raise ValueError("need lam > 0, a > 0 and 0 < n < 1")
        if not 0 < self.omega_min < self.omega_max < 2:
            raise ValueError("need 0 < omega_min < omega_max < 2")

    @property
    def newtonian(self) -> bool:
        return self.model == "newtonian"


@dataclass(frozen=True)
class LatticeRheology:
    """Rheology constants converted to lattice units, as consumed by the kernels."""

    mu0: float
    mu_inf: float
    lam: float
    n: float
    a: float
    newtonian: bool
    omega_min: float
    omega_max: float

    @classmethod
    def from_physical(cls, p: CarreauYasudaParams, scales: UnitScales):
        return cls(
            mu0=to_lattice_dynamic_viscosity(p.mu0, scales),
            mu_inf=to_lattice_dynamic_viscosity(p.mu_inf, scales),
            lam=to_lattice_time(p.lam, scales),
            n=p.n,
            a=p.a,
            newtonian=p.newtonian,
            omega_min=p.omega_min,
            omega_max=p.omega_max,
        )

    def viscosity(self, gamma_dot):
        if self.newtonian:
            return np.full_like(np.asarray(gamma_dot, dtype=float), self.mu0)
        return carreau_yasuda_mu(gamma_dot, self)


@dataclass
class RheologyState:
    mu: np.ndarray
    omega: np.ndarray


def carreau_yasuda_mu(gamma_dot, params):
    """``mu_inf + (mu0 - mu_inf) (1 + (lam gamma)^a)^((n-1)/a)``."""
    g = np.asarray(gamma_dot, dtype=float)
    if np.any(g < 0):
        raise ValueError("shear rate must be non-negative")
    p = params
    mu = p.mu_inf + (p.mu0 - p.mu_inf) * (1.0 + (p.lam * g) ** p.a) ** ((p.n - 1.0) / p.a)
    return mu if mu.ndim else float(mu)


def shear_rate_from_stress(sigma, mu_prev):
    """Frobenius norm of the deviatoric stress divided by the previous viscosity.

    ``sigma`` is ``(..., 3, 3)``.
    """
    mu_prev = np.asarray(mu_prev, dtype=float)
    if np.any(mu_prev <= 0):
        raise ValueError("viscosity must be positive")
    s = np.asarray(sigma, dtype=float)
    out = np.sqrt(np.sum(s * s, axis=(-2, -1))) / mu_prev
    return out if out.ndim else float(out)


def omega_from_mu(mu, rho=1.0, dt=1.0, bounds=None):
    """Relaxation rate ``2 rho cs2 dt / (2 mu + rho cs2 dt)``, optionally clamped.

    ``bounds=None`` leaves the value unclamped.
    """
    mu = np.asarray(mu, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(mu <= 0) or np.any(rho <= 0):
        raise ValueError("mu and rho must be positive")
    r = rho * CS2 * dt
    omega = 2.0 * r / (2.0 * mu + r)
    if bounds is not None:
        omega = np.clip(omega, bounds[0], bounds[1])
    return omega if omega.ndim else float(omega)


def mu_from_omega(omega, rho=1.0, dt=1.0):
    omega = np.asarray(omega, dtype=float)
    mu = rho * CS2 * dt * (1.0 / omega - 0.5)
    return mu if mu.ndim else float(mu)
