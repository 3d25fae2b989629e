"""Run orchestration: geometry assembly, ramp and heartbeat schedule, output.

The simulated clock is zero at the end of the inflow ramp, so ramp steps run
at negative times and ``stop_time``/snapshot times refer to the periodic
part of the run.
"""
from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig
from .core import BlowUp, unpack_sym
from .geometry import (SOLID, porosity_by_convolution, classify_cells, read_coil_csv,
                       read_mask, voxelize_coil)
from .observables import (TimeSeriesWriter, estimate_normals, export_fields, region_average,
                          wall_adjacent, wall_shear_stress)
from .solver import Simulation, SolverOptions

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    steps: int = 0
    wall_clock: float = 0.0
    blew_up: bool = False
    blowup_cell: tuple | None = None
    blowup_step: int | None = None
    peak_speed: float = 0.0  # m/s, max over sampled states
    omega_min: float = np.inf
    omega_max: float = -np.inf
    mass_drift: float = 0.0  # relative change of total mass
    series: list = field(default_factory=list)  # rows of SERIES_HEADER plus max_wss_pa
    final: dict = field(default_factory=dict)
    checkpoint: str | None = None

    def summary(self) -> str:
        s = (f"steps={self.steps} wall={self.wall_clock:.1f}s peak_speed={self.peak_speed:.4g} m/s "
             f"omega=[{self.omega_min:.4g}, {self.omega_max:.4g}] mass_drift={self.mass_drift:.3e}")
        if self.blew_up:
            s += f" BLOW-UP at step {self.blowup_step} cell {self.blowup_cell}"
        return s


@dataclass
class Setup:
    """Everything a run needs besides the schedule."""

    sim: Simulation
    mask: object
    region: np.ndarray  # active-cell indices averaged over
    wall_cells: np.ndarray  # region cells next to the vessel wall
    wall_normals: np.ndarray


def build(cfg: SimConfig, threads=None) -> Setup:
    """Assemble mask, optional coil, porosity, domain and solver from a config."""
    g = cfg.geometry
    if g.mask is None:
        raise ValueError("geometry.mask is required")
    mask = read_mask(cfg.path(g.mask))
    base = mask
    if g.coil is not None:
        wire = read_coil_csv(cfg.path(g.coil), g.wire_diameter)
        mask = voxelize_coil(wire, mask)
    phi = None
    if g.mode == "volume_averaged":
        phi = porosity_by_convolution(mask, g.window_size, cfg.porous.phi_min)
    radius = cfg.inflow.radius
    radius = None if radius in (None, "auto") else float(radius)
    dom = classify_cells(mask, phi, g.mode, g.periodic, inlet_radius=radius)

    po = cfg.porous_options
    opts = SolverOptions(body_accel=tuple(cfg.run.body_acceleration), outlet_scheme=cfg.run.outlet,
                         outlet_relax=cfg.run.outlet_relax,
                         anisotropic=po.anisotropic, anisotropy=po.anisotropy, fp_tol=po.fp_tol,
                         fp_max_iter=po.fp_max_iter,
                         backend=None if cfg.run.backend == "auto" else cfg.run.backend,
                         threads=int(threads or cfg.run.threads))
    waveform = cfg.waveform() if dom.inlets else None
    sim = Simulation(dom, cfg.scales, cfg.rheology, cfg.porous, waveform, opts)

    if g.region is not None:
        sac = read_mask(cfg.path(g.region))
        if sac.dims != mask.dims:
            raise ValueError("region mask dimensions differ from the geometry mask")
        region = dom.cells_in(sac.data != SOLID)
    else:
        region = np.arange(dom.n)
    if region.size == 0:
        raise ValueError("averaging region contains no active cells")
    # shear stress is sampled on the vessel wall, never on coil wire
    vessel_wall = base.data == SOLID
    wall = np.intersect1d(wall_adjacent(dom, vessel_wall), region)
    normals = estimate_normals(vessel_wall, dom.coords[wall], dom.periodic)
    return Setup(sim, mask, region, wall, normals)


def observe(setup: Setup) -> dict:
    """Region observables of the most recent macroscopic state (SI units)."""
    sim = setup.sim
    sc = sim.scales
    u = sim.macro.u
    out = {
        "t": sim.macro_time,
        "mean_speed": region_average(u, setup.region) * sc.velocity,
        "max_speed": float(np.sqrt(np.max(np.sum(u * u, axis=1)))) * sc.velocity,
        "total_mass": sim.total_mass() * sc.rho0 * sc.dx ** 3,
        "mean_wss": float("nan"),
        "max_wss": float("nan"),
    }
    if setup.wall_cells.size:
        sig = unpack_sym(sim.state.sigma[setup.wall_cells])
        ws = wall_shear_stress(sig, np.arange(len(setup.wall_cells)), setup.wall_normals)
        if len(ws):
            mag = ws.magnitude * sc.stress
            out["mean_wss"] = float(np.sum(mag) / mag.size)
            out["max_wss"] = float(np.max(mag))
    return out


def _atomic_checkpoint(sim, path):
    tmp = path + ".tmp"
    sim.save_checkpoint(tmp)
    os.replace(tmp, path)


def run(cfg: SimConfig, output_dir=None, checkpoint=None, resume=None, threads=None,
        setup: Setup | None = None, max_steps=None) -> RunReport:
    """Execute the ramp and the configured heartbeats (or up to ``stop_time``).

    ``checkpoint`` is the checkpoint file path (default ``<output_dir>/checkpoint.bin``
    when checkpointing is enabled); ``resume`` loads a checkpoint first.
    ``max_steps`` caps the number of steps executed by this call.
    """
    setup = setup or build(cfg, threads)
    sim = setup.sim
    rc = cfg.run
    if resume is not None:
        sim.load_checkpoint(resume)
    ramp = sim.waveform.ramp_steps if sim.waveform is not None else 0
    total = ramp + cfg.main_steps()
    if max_steps is not None:
        total = min(total, sim.step_index + int(max_steps))

    writer = None
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        writer = TimeSeriesWriter(os.path.join(output_dir, "series.csv"))
    if checkpoint is None and rc.checkpoint_every and output_dir is not None:
        checkpoint = os.path.join(output_dir, "checkpoint.bin")
    pending = sorted(float(t) for t in rc.snapshot_times)
    pending = [t for t in pending if t >= sim.time - 0.5 * sim.scales.dt]

    report = RunReport(checkpoint=checkpoint)
    mass0 = sim.total_mass()
    t0 = time.perf_counter()
    dt = sim.scales.dt

    def sample():
        obs = observe(setup)
        report.series.append([obs["t"], obs["mean_speed"], obs["mean_wss"], obs["total_mass"],
                              obs["max_speed"], obs["max_wss"]])
        report.peak_speed = max(report.peak_speed, obs["max_speed"])
        if writer is not None:
            writer.write(report.series[-1][:5])
        return obs

    try:
        while sim.step_index < total:
            try:
                sim.step()
            except BlowUp as exc:
                report.blew_up = True
                report.blowup_cell = exc.cell
                report.blowup_step = sim.step_index
                log.error("%s", exc)
                break
            report.steps += 1
            om = sim.state.omega
            report.omega_min = min(report.omega_min, float(om.min()))
            report.omega_max = max(report.omega_max, float(om.max()))
            if rc.output_every and sim.step_index % rc.output_every == 0:
                sample()
            if checkpoint and rc.checkpoint_every and sim.step_index % rc.checkpoint_every == 0:
                _atomic_checkpoint(sim, checkpoint)
            while pending and sim.macro_time >= pending[0] - 0.5 * dt:
                if output_dir is not None:
                    name = f"fields_t{pending[0]:.6f}.vtk"
                    export_fields(sim, sim.dom, os.path.join(output_dir, name), sim.macro_time,
                                  sim.scales)
                pending.pop(0)
    finally:
        if writer is not None:
            writer.close()

    report.wall_clock = time.perf_counter() - t0
    report.mass_drift = sim.total_mass() / mass0 - 1.0
    if not report.blew_up and report.steps:
        report.final = sample() if not (rc.output_every and sim.step_index % rc.output_every == 0) \
            else observe(setup)
    log.info("%s", report.summary())
    return report
