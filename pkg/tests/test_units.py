import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vanslbm.boundaries import InflowWaveform
from vanslbm.config import SimConfig, InflowConfig
from vanslbm.units import (UnitScales, stability_report, to_lattice_acceleration,
                           to_lattice_dynamic_viscosity, to_lattice_kinematic_viscosity,
                           to_lattice_length, to_lattice_time, to_lattice_velocity,
                           to_physical_dynamic_viscosity, to_physical_kinematic_viscosity,
                           to_physical_stress, to_physical_velocity)

TABLE = UnitScales()

# reference values evaluated independently in 30-digit arithmetic
U_ONE = 0.246013667425968109
NU_ZERO_SHEAR = 0.845880147594337420
NU_INF_SHEAR = 0.0185036282286261311


def test_defaults_are_reference_scales():
    assert (TABLE.dx, TABLE.dt, TABLE.rho0) == (43.9e-6, 10.8e-6, 1060.0)


@pytest.mark.parametrize("bad", [dict(dx=0), dict(dt=-1), dict(rho0=0)])
def test_scales_must_be_positive(bad):
    with pytest.raises(ValueError):
        UnitScales(**bad)


def test_velocity_example():
    assert to_lattice_velocity(1.0, TABLE) == pytest.approx(U_ONE, rel=1e-14)
    assert to_lattice_velocity(0.0, TABLE) == 0.0


def test_viscosity_examples():
    assert to_lattice_kinematic_viscosity(0.16 / 1060, TABLE) == pytest.approx(NU_ZERO_SHEAR, rel=1e-14)
    assert to_lattice_kinematic_viscosity(0.0035 / 1060, TABLE) == pytest.approx(NU_INF_SHEAR, rel=1e-14)
    with pytest.raises(ValueError):
        to_lattice_kinematic_viscosity(0.0, TABLE)


finite = st.floats(-1e3, 1e3, allow_nan=False)
pos = st.floats(1e-7, 1e-2)


@given(finite, pos, pos, st.floats(1.0, 2e3))
def test_round_trips(x, dx, dt, rho0):
    sc = UnitScales(dx, dt, rho0)
    assert to_physical_velocity(to_lattice_velocity(x, sc), sc) == pytest.approx(x, rel=1e-14, abs=1e-300)
    if x > 0:
        assert to_physical_kinematic_viscosity(to_lattice_kinematic_viscosity(x, sc), sc) == \
            pytest.approx(x, rel=1e-14)
    assert to_physical_dynamic_viscosity(to_lattice_dynamic_viscosity(x, sc), sc) == \
        pytest.approx(x, rel=1e-14, abs=1e-300)


def test_other_scalings():
    sc = UnitScales(2.0, 4.0, 10.0)
    assert to_lattice_length(6.0, sc) == 3.0
    assert to_lattice_time(8.0, sc) == 2.0
    assert to_lattice_acceleration(1.0, sc) == 8.0  # g dt^2 / dx
    assert to_physical_stress(1.0, sc) == 10.0 * (2.0 / 4.0) ** 2


def _config(v_peak):
    cfg = SimConfig(inflow=InflowConfig(scale=1.0))
    wf = InflowWaveform(np.array([0.0, 0.5]), np.array([v_peak, v_peak]), 1.0)
    cfg.waveform = lambda: wf
    cfg.peak_inflow_velocity = lambda: v_peak
    return cfg


def test_stability_warns_on_fast_inflow():
    rep = stability_report(_config(0.5))
    assert rep.peak_mean_velocity == pytest.approx(0.123006833712984, rel=1e-12)
    assert rep.warnings and not rep.ok
    assert any("exceeds" in w for w in rep.warnings)


def test_stability_omega_range_inside_open_interval():
    rep = stability_report(_config(0.0))
    lo, hi = rep.omega_range
    assert 0 < lo < hi < 2
    assert lo == pytest.approx(0.329202885870134, rel=1e-12)
    assert hi == pytest.approx(1.800144745256368, rel=1e-12)
    assert rep.mach == 0.0


def test_zero_flow_no_warnings():
    rep = stability_report(_config(0.0))
    assert rep.warnings == [] and rep.ok
    assert math.isfinite(rep.mach)
