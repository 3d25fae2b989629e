"""Throughput of the compiled and NumPy kernels, in million lattice updates per second.

    python3 benchmarks/bench_kernels.py [--size 32] [--steps 5] [--threads 1]

Cases: pure fluid Newtonian, pure fluid Carreau-Yasuda, and a porous box
(phi = 0.6) with Carreau-Yasuda, all in a periodic cube.
"""
import argparse
import time

import numpy as np

from vanslbm.domain import build_domain
from vanslbm.kernels import available
from vanslbm.porous import PorousClosure
from vanslbm.rheology import CarreauYasudaParams
from vanslbm.solver import Simulation, SolverOptions
from vanslbm.units import UnitScales

CASES = {
    "newtonian": ("newtonian", 1.0),
    "carreau_yasuda": ("carreau_yasuda", 1.0),
    "porous_cy": ("carreau_yasuda", 0.6),
}


def mlups(backend, model, phi, size, steps, threads):
    shape = (size,) * 3
    dom = build_domain(np.ones(shape, bool), np.full(shape, phi), 1e-4, periodic=(True,) * 3)
    sim = Simulation(dom, UnitScales(1e-4, 2e-5, 1060.0), CarreauYasudaParams(model=model),
                     PorousClosure(d_p=1e-3),
                     options=SolverOptions(backend=backend, threads=threads))
    rng = np.random.default_rng(0)
    sim.initialize(u=0.01 * rng.normal(size=(dom.n, 3)))
    sim.step(1)  # warm-up
    t = time.perf_counter()
    sim.step(steps)
    return dom.n * steps / (time.perf_counter() - t) / 1e6


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--steps", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    backends = [b for b in ("cython", "numpy") if b in available()]
    print(f"{args.size}^3 cells, {args.steps} steps, {args.threads} thread(s)")
    print(f"{'case':16s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup")
    for name, (model, phi) in CASES.items():
        rates = [mlups(b, model, phi, args.size, args.steps, args.threads) for b in backends]
        speed = f"{rates[0] / rates[-1]:10.1f}x" if len(rates) > 1 else ""
        print(f"{name:16s}" + "".join(f"{r:12.3f}" for r in rates) + speed)


if __name__ == "__main__":
    main()
