"""Per-cell lattice Boltzmann operators for the volume-averaged scheme.

These are the readable reference versions of what the fused kernels in
:mod:`vanslbm.kernels` do in one pass. Arrays carry the 27 directions on the
last axis (cell-major, direction-minor); lattice units throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import C, CS2, W

# (xx, yy, zz, xy, xz, yz) component pairs for packed symmetric tensors
SYM_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


class BlowUp(FloatingPointError):
    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


@dataclass
class PopulationField:
    """Double-buffered populations; ``read`` is time t, ``write`` receives t+1.

    Both buffers have one trailing spare row that absorbs populations leaving
    the domain through open boundaries.
    """

    read: np.ndarray
    write: np.ndarray

    @classmethod
    def empty(cls, n_cells):
        return cls(np.zeros((n_cells + 1, 27)), np.zeros((n_cells + 1, 27)))

    @property
    def f(self):
        return self.read[:-1]

    def swap(self):
        self.read, self.write = self.write, self.read


@dataclass
class MacroState:
    rho: np.ndarray
    u: np.ndarray
    sigma: np.ndarray  # packed (n, 6)

    @classmethod
    def empty(cls, n_cells):
        return cls(np.ones(n_cells), np.zeros((n_cells, 3)), np.zeros((n_cells, 6)))

    @property
    def p(self):
        return CS2 * self.rho

    def sigma_tensor(self):
        return unpack_sym(self.sigma)


def pack_sym(t):
    return np.stack([t[..., a, b] for a, b in SYM_PAIRS], axis=-1)


def unpack_sym(s):
    s = np.asarray(s)
    out = np.empty(s.shape[:-1] + (3, 3))
    for k, (a, b) in enumerate(SYM_PAIRS):
        out[..., a, b] = s[..., k]
        out[..., b, a] = s[..., k]
    return out


def compute_moments(f, phi):
    """Return ``(rho, v_pre)`` with ``rho = sum f / phi`` and
    ``v_pre = sum f c / (phi rho)``."""
    f = np.asarray(f, dtype=float)
    phi = np.asarray(phi, dtype=float)
    m0 = f.sum(axis=-1)
    if np.any(~(m0 > 0)):
        bad = np.argwhere(~(m0 > 0))
        raise BlowUp(f"non-positive density at {bad[0].tolist()}", cell=tuple(bad[0]))
    rho = m0 / phi
    v = (f @ C) / m0[..., None]
    return rho, v


def equilibrium(phi, rho, u):
    phi = np.asarray(phi, dtype=float)[..., None]
    rho = np.asarray(rho, dtype=float)[..., None]
    u = np.asarray(u, dtype=float)
    cu = u @ C.T
    uu = np.sum(u * u, axis=-1, keepdims=True)
    return W * phi * rho * (1.0 + cu / CS2 + cu * cu / (2 * CS2 * CS2) - uu / (2 * CS2))


def porosity_term(rho, phi, phi_neighbors):
    """``w_i rho (phi(x + c_i) - phi(x))``; ``phi_neighbors`` is ``(..., 27)``."""
    return W * np.asarray(rho)[..., None] * (phi_neighbors - np.asarray(phi)[..., None])


def guo_term(rho, u, force, omega, dt=1.0):
    """Guo source ``dt w_i rho (1 - omega/2) [(c_i - u)/cs2 + (u.c_i) c_i/cs4] . F``."""
    u = np.asarray(u, dtype=float)
    force = np.asarray(force, dtype=float)
    cu = u @ C.T
    cf = force @ C.T
    uf = np.sum(u * force, axis=-1, keepdims=True)
    pref = dt * np.asarray(rho)[..., None] * (1.0 - 0.5 * np.asarray(omega)[..., None])
    return W * pref * ((cf - uf) / CS2 + cu * cf / (CS2 * CS2))


def srt_term(f, feq, omega):
    return -np.asarray(omega)[..., None] * (f - feq)


def deviatoric_stress(f, feq, rho, u, force, omega_prev, dt=1.0):
    """Deviatoric stress tensor ``(..., 3, 3)`` from non-equilibrium moments
    with the half-force correction, scaled by ``omega_prev/2 - 1``."""
    fneq = np.asarray(f) - feq
    pi = np.einsum("...i,ia,ib->...ab", fneq, C, C)
    u = np.asarray(u, dtype=float)
    force = np.asarray(force, dtype=float)
    fu = force[..., :, None] * u[..., None, :]
    corr = 0.5 * dt * np.asarray(rho)[..., None, None] * (fu + np.swapaxes(fu, -1, -2))
    scale = (0.5 * np.asarray(omega_prev) - 1.0)[..., None, None]
    return scale * (pi + corr)


def collide(f, feq, rho, phi, phi_neighbors, u, force, omega, dt=1.0):
    """Post-collision populations ``f + Omega^phi + Omega^F + Omega^SRT``."""
    return (
        f
        + porosity_term(rho, phi, phi_neighbors)
        + guo_term(rho, u, force, omega, dt)
        + srt_term(f, feq, omega)
    )
