"""Command-line interface.

Exit codes: 0 success, 2 usage, 3 invalid configuration or input data,
4 runtime failure (numerical blow-up), 5 file I/O failure. Log verbosity is
read from ``VANSLBM_LOG`` (DEBUG, INFO, WARNING, ...; default INFO).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4, 5

log = logging.getLogger("vanslbm")


def _parser():
    p = argparse.ArgumentParser(prog="vanslbm",
                                description="Volume-averaged non-Newtonian lattice Boltzmann solver")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a simulation")
    r.add_argument("config_path", nargs="?", help="YAML run configuration")
    r.add_argument("--config", help="YAML run configuration (alternative to the positional)")
    r.add_argument("--threads", type=int, help="worker threads for the kernel")
    r.add_argument("--output-dir", default="output", help="directory for series, fields, checkpoints")
    r.add_argument("--checkpoint", help="checkpoint file to write at the configured cadence")
    r.add_argument("--resume", help="checkpoint file to resume from")

    v = sub.add_parser("validate", help="pre-flight checks and stability report")
    v.add_argument("config_path", nargs="?")
    v.add_argument("--config")

    x = sub.add_parser("voxelize", help="burn a coil centreline into a mask")
    x.add_argument("coil", help="coil centreline CSV (x_m,y_m,z_m)")
    x.add_argument("mask", help="input mask file")
    x.add_argument("-o", "--output", help="output mask (default: <mask>.coil.vmask)")
    x.add_argument("--wire-diameter", type=float, default=0.2e-3)

    q = sub.add_parser("porosity", help="porosity field of a coiled mask")
    q.add_argument("mask", help="mask file containing coil-wire voxels")
    q.add_argument("-o", "--output", help="output .npy file (default: <mask>.phi.npy)")
    q.add_argument("--window", type=float, help="window edge length in metres (default 3 wire diameters)")
    q.add_argument("--wire-diameter", type=float, default=0.2e-3)
    q.add_argument("--phi-min", type=float, default=0.05)

    d = sub.add_parser("demo-geometry", help="write the synthetic aneurysm demo case")
    d.add_argument("outdir", help="output directory")
    d.add_argument("--seed", type=int, default=0, help="coil random walk seed")
    d.add_argument("--packings", type=float, nargs="+", default=[0.15, 0.20, 0.25])
    return p


def _config_arg(args):
    path = args.config or args.config_path
    if path is None:
        raise _Usage("a configuration file is required")
    return path


class _Usage(Exception):
    pass


def _cmd_run(args):
    from .config import load_config
    from .driver import build, run
    from .units import stability_report

    cfg = load_config(_config_arg(args))
    stability_report(cfg)
    setup = build(cfg, args.threads)
    report = run(cfg, output_dir=args.output_dir, checkpoint=args.checkpoint, resume=args.resume,
                 setup=setup)
    print(report.summary())
    if report.blew_up:
        if report.checkpoint and os.path.exists(report.checkpoint):
            print(f"last checkpoint kept at {report.checkpoint}")
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_validate(args):
    from .config import load_config
    from .driver import build
    from .units import stability_report

    cfg = load_config(_config_arg(args))
    setup = build(cfg)
    rep = stability_report(cfg)
    dom = setup.sim.dom
    print(f"domain {dom.shape} active cells {dom.n} inlets {len(dom.inlets)} "
          f"outlets {len(dom.outlets)} region cells {setup.region.size}")
    print(f"peak lattice velocity {rep.peak_centerline_velocity:.4g} (Mach {rep.mach:.3g}), "
          f"omega range [{rep.omega_range[0]:.4g}, {rep.omega_range[1]:.4g}]")
    for w in rep.warnings:
        print(f"warning: {w}")
    print("ok" if rep.ok else "ok with warnings")
    return EXIT_OK


def _cmd_voxelize(args):
    from .geometry import COIL, read_coil_csv, read_mask, voxelize_coil, write_mask

    wire = read_coil_csv(args.coil, args.wire_diameter)
    mask = voxelize_coil(wire, read_mask(args.mask))
    out = args.output or os.path.splitext(args.mask)[0] + ".coil.vmask"
    write_mask(out, mask)
    print(f"{int(np.count_nonzero(mask.data == COIL))} coil voxels written to {out}")
    return EXIT_OK


def _cmd_porosity(args):
    from .geometry import porosity_by_convolution, read_mask

    mask = read_mask(args.mask)
    window = args.window if args.window is not None else 3.0 * args.wire_diameter
    phi = porosity_by_convolution(mask, window, args.phi_min).phi
    out = args.output or os.path.splitext(args.mask)[0] + ".phi.npy"
    np.save(out, phi)
    fluid = mask.data != 0
    print(f"porosity written to {out}; min {phi[fluid].min():.4f} "
          f"mean over fluid {phi[fluid].mean():.4f}")
    return EXIT_OK


def _cmd_demo(args):
    from .demo import write_demo

    paths = write_demo(args.outdir, seed=args.seed, packings=tuple(args.packings))
    for p in paths:
        print(p)
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "validate": _cmd_validate, "voxelize": _cmd_voxelize,
             "porosity": _cmd_porosity, "demo-geometry": _cmd_demo}


def main(argv=None) -> int:
    from .boundaries import BoundaryConfigError
    from .config import ConfigError
    from .core import BlowUp
    from .domain import GeometryError

    logging.basicConfig(level=os.environ.get("VANSLBM_LOG", "INFO").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, GeometryError, BoundaryConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUp as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
