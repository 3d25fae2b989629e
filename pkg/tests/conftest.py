import numpy as np
import pytest

from vanslbm.boundaries import InflowWaveform
from vanslbm.domain import build_domain
from vanslbm.rheology import CarreauYasudaParams
from vanslbm.solver import Simulation, SolverOptions
from vanslbm.units import UnitScales


def periodic_box(shape, phi=None, spacing=1e-4):
    active = np.ones(shape, dtype=bool)
    return build_domain(active, phi, spacing, periodic=(True, True, True))


def tube(diameter, length, spacing=1e-4, inlet_radius=None):
    """Straight tube along x, cells whose centres lie within diameter/2 of the axis."""
    R = diameter / 2.0
    ny = diameter + 2
    x, y, z = np.indices((length, ny, ny)).astype(float)
    c = (ny - 1) / 2.0
    active = (y - c) ** 2 + (z - c) ** 2 <= R * R
    dom = build_domain(active, None, spacing, inlet=active & (x == 0),
                       outlet=active & (x == length - 1), inlet_radius=inlet_radius)
    return dom, c


def newtonian(mu):
    return CarreauYasudaParams(mu0=mu, mu_inf=mu, model="newtonian")


def constant_waveform(v, ramp_steps=200):
    return InflowWaveform(np.array([0.0, 0.5]), np.array([v, v]), 1.0, ramp_steps)


def lattice_newtonian(nu_lat, scales):
    """Newtonian parameters with the given lattice kinematic viscosity."""
    return newtonian(nu_lat * scales.dx ** 2 / scales.dt * scales.rho0)


@pytest.fixture
def scales():
    return UnitScales(1e-4, 1e-5, 1000.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_sim(dom, scales, rheology=None, waveform=None, **opts):
    rheology = rheology or CarreauYasudaParams()
    return Simulation(dom, scales, rheology, waveform=waveform, options=SolverOptions(**opts))


def write_tube_case(outdir, diameter=8, length=16, **run):
    """Straight-tube mask plus a YAML config on the demo scales; returns the config path."""
    import os

    import yaml

    from vanslbm.demo import demo_config
    from vanslbm.geometry import FLUID, INLET, OUTLET, SOLID, VoxelMask, write_mask

    ny = diameter + 2
    x, y, z = np.indices((length, ny, ny)).astype(float)
    c = (ny - 1) / 2
    inside = (y - c) ** 2 + (z - c) ** 2 <= (diameter / 2) ** 2
    data = np.where(inside, FLUID, SOLID).astype(np.uint8)
    data[0][inside[0]] = INLET
    data[-1][inside[-1]] = OUTLET
    write_mask(os.path.join(outdir, "tube.vmask"), VoxelMask(data, 1e-4, np.zeros(3)))
    raw = demo_config(mask="tube.vmask", region=None, waveform=None)
    raw["inflow"].update(ramp_steps=100)
    raw["run"].update(run)
    path = os.path.join(outdir, "tube.yaml")
    with open(path, "w") as fh:
        yaml.safe_dump(raw, fh)
    return path


@pytest.fixture
def tube_case(tmp_path):
    return write_tube_case(str(tmp_path))
