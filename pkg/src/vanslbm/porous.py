"""Porous-medium closure: Kozeny-Carman permeability, Ergun/Forchheimer
constant, Darcy-Forchheimer drag and the implicit velocity reconstruction.

All functions work in any consistent unit system and broadcast over leading
array axes. Pure-fluid cells carry ``k = inf``, which zeroes both drag terms
without special-casing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PureFluidCell(ValueError):
    """Kozeny-Carman is singular at phi = 1; the caller must skip drag."""


class NonConvergence(RuntimeError):
    def __init__(self, residual, iterations):
        super().__init__(
            f"fixed-point velocity solve did not converge in {iterations} "
            f"iterations (last increment {residual:.3e})"
        )
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class PorousClosure:
    d_p: float = 1.25e-3
    phi_min: float = 0.05
    phi_pure_fluid_threshold: float = 1.0 - 1e-9

    def __post_init__(self):
        if not self.d_p > 0:
            raise ValueError("d_p must be positive")
        if not 0 < self.phi_min < self.phi_pure_fluid_threshold <= 1:
            raise ValueError("need 0 < phi_min < phi_pure_fluid_threshold <= 1")


@dataclass(frozen=True)
class CellDrag:
    k: np.ndarray | float
    c_f: np.ndarray | float
    phi: np.ndarray | float


def kozeny_carman_k(phi, d_p):
    phi = np.asarray(phi, dtype=float)
    if np.any(phi >= 1):
        raise PureFluidCell("phi >= 1 has infinite permeability")
    if np.any(phi <= 0):
        raise ValueError("porosity must be positive")
    k = phi ** 3 * d_p ** 2 / (150.0 * (1.0 - phi) ** 2)
    return k if k.ndim else float(k)


def ergun_cf(phi):
    phi = np.asarray(phi, dtype=float)
    if np.any(phi <= 0):
        raise ValueError("porosity must be positive")
    cf = 1.75 / np.sqrt(150.0 * phi ** 3)
    return cf if cf.ndim else float(cf)


def cell_drag(phi, closure: PorousClosure, d_p=None) -> CellDrag:
    """Per-cell closure; cells at or above the pure-fluid threshold get k=inf."""
    phi = np.clip(np.asarray(phi, dtype=float), closure.phi_min, 1.0)
    d_p = closure.d_p if d_p is None else d_p
    pure = phi >= closure.phi_pure_fluid_threshold
    k = np.full(phi.shape, np.inf)
    if np.any(~pure):
        k[~pure] = kozeny_carman_k(phi[~pure], d_p)
    return CellDrag(k=k, c_f=ergun_cf(phi), phi=phi)


def drag_force(u, cell: CellDrag, nu):
    """Darcy-Forchheimer drag acceleration ``-phi^2 nu/k u - phi^3 C_F/sqrt(k) |u| u``."""
    u = np.asarray(u, dtype=float)
    phi = np.asarray(cell.phi, dtype=float)[..., None]
    k = np.asarray(cell.k, dtype=float)[..., None]
    cf = np.asarray(cell.c_f, dtype=float)[..., None]
    speed = np.linalg.norm(u, axis=-1, keepdims=True)
    darcy = phi ** 2 * nu / k
    forch = phi ** 3 * cf / np.sqrt(k)
    return -(darcy + forch * speed) * u


def solve_velocity_isotropic(v_pre, cell: CellDrag, nu, dt=1.0):
    """Closed-form root of ``u = v + dt/(2 phi) f(u)`` for scalar permeability."""
    v = np.asarray(v_pre, dtype=float)
    phi = np.asarray(cell.phi, dtype=float)[..., None]
    k = np.asarray(cell.k, dtype=float)[..., None]
    cf = np.asarray(cell.c_f, dtype=float)[..., None]
    c0 = 0.5 + phi * nu * dt / (4.0 * k)
    c1 = dt * phi ** 2 * cf / (2.0 * np.sqrt(k))
    vn = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / (c0 + np.sqrt(c0 * c0 + c1 * vn))


def implicit_residual(u, v_pre, cell: CellDrag, nu, dt=1.0):
    """``u - v - dt/(2 phi) f(u)``; zero for the exact reconstruction."""
    phi = np.asarray(cell.phi, dtype=float)[..., None]
    return u - v_pre - dt / (2.0 * phi) * drag_force(u, cell, nu)


def spd_inverse_sqrt(K):
    """Return ``(K^-1, K^-1/2)`` for symmetric positive definite ``K``."""
    K = np.asarray(K, dtype=float)
    if not np.allclose(K, np.swapaxes(K, -1, -2), rtol=1e-12, atol=0):
        raise ValueError("permeability tensor must be symmetric")
    lam, vec = np.linalg.eigh(K)
    if np.any(lam <= 0):
        raise ValueError("permeability tensor must be positive definite")
    vt = np.swapaxes(vec, -1, -2)
    kinv = (vec / lam[..., None, :]) @ vt
    kmh = (vec / np.sqrt(lam)[..., None, :]) @ vt
    return kinv, kmh


def solve_velocity_anisotropic(v_pre, K, phi, nu, c_f, dt=1.0, u_init=None,
                               tol=1e-14, max_iter=500, history=None):
    """Fixed-point solve of the implicit drag relation for tensor permeability.

    Iterates ``u <- X(u)^-1 v`` with
    ``X(u) = I + phi nu dt/2 K^-1 + phi^2 C_F dt/2 |u| K^-1/2``.
    Stops once every increment norm is ``<= tol``. If ``history`` is a list,
    the per-iteration ``(|u_{m+1}|, |u_{m+1} - u_m|)`` arrays are appended.
    """
    v = np.asarray(v_pre, dtype=float)
    kinv, kmh = spd_inverse_sqrt(K)
    phi = np.asarray(phi, dtype=float)[..., None, None]
    c_f = np.asarray(c_f, dtype=float)[..., None, None]
    lin = np.eye(3) + 0.5 * phi * nu * dt * kinv
    quad = 0.5 * phi ** 2 * c_f * dt * kmh
    u = v.copy() if u_init is None else np.array(u_init, dtype=float)
    u = np.broadcast_to(u, v.shape).copy()
    inc = np.inf
    for it in range(1, max_iter + 1):
        speed = np.linalg.norm(u, axis=-1)[..., None, None]
        X = lin + speed * quad
        u_new = np.linalg.solve(X, v[..., None])[..., 0]
        step = np.linalg.norm(u_new - u, axis=-1)
        if history is not None:
            history.append((np.linalg.norm(u_new, axis=-1), step))
        u = u_new
        inc = float(np.max(step)) if step.size else 0.0
        if inc <= tol:
            return u
    raise NonConvergence(inc, max_iter)
