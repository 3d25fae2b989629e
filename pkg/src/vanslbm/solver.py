"""Time stepping: owns populations, rheology state and boundary sequencing.

Per step: fused kernel (moments, velocity solve, stress with the previous
relaxation rate, viscosity and relaxation-rate update, collision, push with
bounce-back), then inlet and outlet closures on the write buffer, then the
buffer swap.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .boundaries import (InflowWaveform, extrapolation_outlet, outlet_invariant, waveform_sample,
                         zou_he_inlet)
from .core import BlowUp, MacroState, PopulationField, equilibrium
from .kernels import KernelGeometry, KernelParams, KernelState
from .lattice import ORDERING_TAG, Q
from .porous import PorousClosure, cell_drag, spd_inverse_sqrt
from .rheology import CarreauYasudaParams, LatticeRheology, omega_from_mu
from .units import (UnitScales, to_lattice_acceleration, to_lattice_kinematic_viscosity,
                    to_lattice_velocity)

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = "vanslbm-checkpoint-v1"


@dataclass
class SolverOptions:
    body_accel: tuple = (0.0, 0.0, 0.0)  # m/s^2
    outlet_scheme: str = "characteristic"
    outlet_relax: float = 1e-3
    anisotropic: bool = False
    anisotropy: np.ndarray | None = None
    fp_tol: float = 1e-13
    fp_max_iter: int = 200
    backend: str | None = None
    threads: int = 1


def lattice_drag_coefficients(phi, closure: PorousClosure, nu_lat, scales: UnitScales):
    """Per-cell ``(darcy, forch)`` in lattice units; zero for pure fluid."""
    drag = cell_drag(phi, closure)
    k_lat = drag.k / (scales.dx * scales.dx)
    with np.errstate(divide="ignore"):
        darcy = np.where(np.isfinite(k_lat), drag.phi ** 2 * nu_lat / k_lat, 0.0)
        forch = np.where(np.isfinite(k_lat), drag.phi ** 3 * drag.c_f / np.sqrt(k_lat), 0.0)
    return drag.phi, darcy, forch


class Simulation:
    def __init__(self, dom, scales: UnitScales, rheology: CarreauYasudaParams,
                 closure: PorousClosure = PorousClosure(), waveform: InflowWaveform | None = None,
                 options: SolverOptions | None = None):
        if waveform is not None and waveform.dt is None:
            waveform = replace(waveform, dt=scales.dt)
        self.dom = dom
        self.scales = scales
        self.rheology = rheology
        self.closure = closure
        self.waveform = waveform
        self.options = options or SolverOptions()
        self.backend = kernels.get_backend(self.options.backend)
        self.lat_rheology = LatticeRheology.from_physical(rheology, scales)
        # drag uses the zero-shear kinematic viscosity
        self.nu_drag = to_lattice_kinematic_viscosity(rheology.mu0 / scales.rho0, scales)
        phi, darcy, forch = lattice_drag_coefficients(dom.phi, closure, self.nu_drag, scales)
        self.geo = KernelGeometry(np.ascontiguousarray(phi), darcy, forch,
                                  np.ascontiguousarray(dom.nb), np.ascontiguousarray(dom.dest))
        opts = self.options
        a_inv, a_inv_sqrt = np.eye(3), np.eye(3)
        if opts.anisotropic:
            a_inv, a_inv_sqrt = spd_inverse_sqrt(opts.anisotropy)
        g = tuple(float(to_lattice_acceleration(x, scales)) for x in opts.body_accel)
        self.params = KernelParams(self.lat_rheology, self.nu_drag, g, opts.anisotropic,
                                   a_inv, a_inv_sqrt, opts.fp_tol, opts.fp_max_iter)
        n = dom.n
        self.pop = PopulationField.empty(n)
        self.state = KernelState(mu=np.zeros(n), omega=np.zeros(n), u=np.zeros((n, 3)),
                                 rho=np.ones(n), sigma=np.zeros((n, 6)))
        self.step_index = 0
        self.t_start = -waveform.ramp_duration if waveform is not None else 0.0
        self.initialize()

    # -- state ---------------------------------------------------------------

    def initialize(self, rho=1.0, u=None):
        """Equilibrium populations at the given density and velocity (lattice
        units); viscosity at its zero-shear value."""
        n = self.dom.n
        rho = np.broadcast_to(np.asarray(rho, dtype=float), (n,)).copy()
        u = np.zeros((n, 3)) if u is None else np.broadcast_to(np.asarray(u, float), (n, 3)).copy()
        self.pop.read[:n] = equilibrium(self.geo.phi, rho, u)
        self.pop.read[n:] = 0.0
        self.pop.write[:] = 0.0
        lr = self.lat_rheology
        self.state.mu[:] = lr.mu0
        self.state.omega[:] = omega_from_mu(lr.mu0 * np.ones(n), rho,
                                            bounds=(lr.omega_min, lr.omega_max))
        self.state.mu[:] = rho * (1.0 / 3.0) * (1.0 / self.state.omega - 0.5)
        self.state.u[:] = u
        self.state.rho[:] = rho
        self.state.sigma[:] = 0.0
        # incoming acoustic amplitude per outlet cell (characteristic outlet)
        self.outlet_state = [outlet_invariant(rho[p.cells], u[p.cells], p.normal)
                             for p in self.dom.outlets]
        self.step_index = 0

    @property
    def f(self):
        return self.pop.f

    @property
    def mu(self):
        return self.state.mu

    @property
    def macro(self) -> MacroState:
        """Density, velocity and stress from the most recent step (time
        ``macro_time``)."""
        return MacroState(self.state.rho, self.state.u, self.state.sigma)

    @property
    def time(self) -> float:
        """Physical time of the current populations."""
        return self.t_start + self.step_index * self.scales.dt

    @property
    def macro_time(self) -> float:
        return self.time - self.scales.dt

    def total_mass(self) -> float:
        return float(np.sum(self.f))

    # -- stepping ------------------------------------------------------------

    def inlet_velocity_lattice(self, t) -> float:
        if self.waveform is None:
            return 0.0
        return to_lattice_velocity(waveform_sample(self.waveform, t), self.scales)

    def step(self, nsteps=1, trace=None):
        for _ in range(nsteps):
            n_bad, first, unconv = self.backend.step(
                self.pop.read, self.pop.write, self.geo, self.state, self.params,
                threads=self.options.threads, use_prev_u=self.step_index > 0, trace=trace)
            if n_bad:
                coord = tuple(int(x) for x in self.dom.coords[first])
                raise BlowUp(f"numerical blow-up in {n_bad} cells at step {self.step_index}, "
                             f"first at {coord}", cell=coord)
            if unconv:
                log.warning("%d cells did not converge in the fixed-point velocity solve", unconv)
            if trace is not None:
                trace.append("boundaries")
            t_next = self.time + self.scales.dt
            fw = self.pop.write
            if self.dom.inlets:
                v = self.inlet_velocity_lattice(t_next)
                for patch in self.dom.inlets:
                    zou_he_inlet(fw, patch, self.dom, v)
            for patch, inv in zip(self.dom.outlets, self.outlet_state):
                extrapolation_outlet(fw, patch, self.options.outlet_scheme, self.geo.phi,
                                     invariant=inv, relax=self.options.outlet_relax)
            self.pop.swap()
            self.step_index += 1

    # -- checkpoints ---------------------------------------------------------

    def save_checkpoint(self, path):
        header = {
            "format": CHECKPOINT_MAGIC,
            "dims": list(self.dom.shape),
            "n_cells": int(self.dom.n),
            "dx": self.scales.dx,
            "dt": self.scales.dt,
            "step": int(self.step_index),
            "ordering": ORDERING_TAG,
            "endianness": "little",
            "arrays": ["populations[n_cells,27]", "mu[n_cells]", "omega[n_cells]",
                       "u[n_cells,3]", "outlet_invariant[n_outlet_cells]"],
        }
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            for arr in (self.f, self.state.mu, self.state.omega, self.state.u, *self.outlet_state):
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    def load_checkpoint(self, path):
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode())
            raw = fh.read()
        if header.get("format") != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        if header["ordering"] != ORDERING_TAG:
            raise ValueError(f"{path}: direction ordering {header['ordering']} unsupported")
        n = self.dom.n
        if header["n_cells"] != n or tuple(header["dims"]) != tuple(self.dom.shape):
            raise ValueError(f"{path}: checkpoint geometry does not match the domain")
        data = np.frombuffer(raw, dtype="<f8")
        sizes = [n * Q, n, n, 3 * n] + [len(p.cells) for p in self.dom.outlets]
        if data.size != sum(sizes):
            raise ValueError(f"{path}: truncated checkpoint")
        parts = np.split(data, np.cumsum(sizes)[:-1])
        self.pop.read[:n] = parts[0].reshape(n, Q)
        self.state.mu[:] = parts[1]
        self.state.omega[:] = parts[2]
        self.state.u[:] = parts[3].reshape(n, 3)
        for inv, part in zip(self.outlet_state, parts[4:]):
            inv[:] = part
        self.step_index = int(header["step"])
