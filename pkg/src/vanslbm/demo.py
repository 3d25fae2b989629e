"""Synthetic sphere-on-tube aneurysm case: masks, coils, waveform, configs."""
from __future__ import annotations

import os

import yaml

from .boundaries import synthetic_waveform, write_waveform_csv
from .config import SimConfig, dump_config
from .geometry import (DemoParams, demo_coil, demo_geometry, packing_density, write_coil_csv,
                       write_mask)
from .units import UnitScales

PACKINGS = (0.15, 0.20, 0.25)
# Coarse demo voxels cannot carry the full-scale Reynolds number with SRT:
# a longer step keeps the thinned-limit relaxation rate near 1.8 and the
# reduced inflow keeps the lattice Mach number small.
DEMO_DT = 5.0e-5
DEMO_INFLOW_SCALE = 0.2
# peak of the synthetic waveform, in seconds after the ramp
SYSTOLE = 0.2


def bundled_demo(case="uncoiled"):
    """Path of a config in the demo case shipped with the package (seed 0)."""
    path = os.path.join(os.path.dirname(__file__), "data", "demo", f"{case}.yaml")
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return path


def demo_config(mask="mask.vmask", region="sac.vmask", coil=None, mode="volume_averaged",
                waveform="waveform.csv", params: DemoParams = DemoParams(),
                stop_time=SYSTOLE) -> dict:
    cfg = SimConfig(scales=UnitScales(params.spacing, DEMO_DT, 1060.0))
    raw = dump_config(cfg)
    raw["geometry"].update(mask=mask, coil=coil, mode=mode, region=region,
                           wire_diameter=params.wire_diameter, window=params.window)
    raw["inflow"].update(waveform=waveform, radius="auto", scale=DEMO_INFLOW_SCALE)
    raw["run"].update(stop_time=stop_time, heartbeats=1, final_time=None, output_every=100)
    return raw


def write_demo(outdir, seed=0, packings=PACKINGS, params: DemoParams = DemoParams()):
    """Write the demo case to ``outdir``; returns the list of config paths.

    One uncoiled config, one volume-averaged config per packing density and
    one fully resolved config for the densest packing.
    """
    os.makedirs(outdir, exist_ok=True)
    mask, sac = demo_geometry(params)
    write_mask(os.path.join(outdir, "mask.vmask"), mask)
    write_mask(os.path.join(outdir, "sac.vmask"), sac)
    write_waveform_csv(os.path.join(outdir, "waveform.csv"), synthetic_waveform())

    cases = {"uncoiled": demo_config(params=params)}
    for k, pd in enumerate(packings):
        wire = demo_coil(params, sac, pd, seed=seed + k)
        name = f"coil_{round(pd * 100):02d}.csv"
        write_coil_csv(os.path.join(outdir, name), wire)
        assert abs(packing_density(wire, sac) - pd) < 1e-9
        cases[f"va_{round(pd * 100):02d}"] = demo_config(coil=name, params=params)
        if k == len(packings) - 1:
            cases[f"fr_{round(pd * 100):02d}"] = demo_config(coil=name, mode="fully_resolved",
                                                            params=params)
    paths = []
    for name, raw in cases.items():
        path = os.path.join(outdir, f"{name}.yaml")
        with open(path, "w") as fh:
            yaml.safe_dump(raw, fh, sort_keys=False)
        paths.append(path)
    return paths
