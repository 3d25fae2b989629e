"""Wall shear stress, region averages and field output."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .lattice import CI, CS2
from .units import UnitScales

log = logging.getLogger(__name__)

SERIES_HEADER = ["t_s", "mean_speed_m_s", "mean_wss_pa", "total_mass", "max_speed_m_s"]


@dataclass
class WallSample:
    cell: int
    normal: np.ndarray
    tau: np.ndarray


@dataclass
class WallSamples:
    """Struct-of-arrays wall shear stress samples (``tau`` in the stress
    units of the input)."""

    cells: np.ndarray
    normals: np.ndarray
    tau: np.ndarray
    skipped: int = 0

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        for c, n, t in zip(self.cells, self.normals, self.tau):
            yield WallSample(int(c), n, t)

    @property
    def magnitude(self):
        return np.linalg.norm(self.tau, axis=1)


def wall_adjacent(dom, wall_solid) -> np.ndarray:
    """Active cells with a wall voxel among their 26 neighbours."""
    wall_solid = np.asarray(wall_solid, dtype=bool)
    shape = np.array(dom.shape)
    hit = np.zeros(dom.n, dtype=bool)
    for c in CI[1:]:
        y = dom.coords + c
        for ax in range(3):
            if dom.periodic[ax]:
                y[:, ax] %= shape[ax]
        ok = np.all((y >= 0) & (y < shape), axis=1)
        hit[ok] |= wall_solid[tuple(y[ok].T)]
    return np.flatnonzero(hit)


def estimate_normals(solid, coords, periodic=(False, False, False), smoothing=2.0):
    """Unit normals pointing from fluid into solid at grid points ``coords``.

    The normal is the normalised gradient of the Gaussian-smoothed solid
    indicator. Rows with a vanishing gradient are NaN.
    """
    mode = ["wrap" if p else "nearest" for p in periodic]
    smooth = ndimage.gaussian_filter(np.asarray(solid, dtype=float), smoothing, mode=mode)
    grads = []
    for ax in range(3):
        if periodic[ax]:
            g = 0.5 * (np.roll(smooth, -1, ax) - np.roll(smooth, 1, ax))
        elif smooth.shape[ax] > 1:
            g = np.gradient(smooth, axis=ax)
        else:
            g = np.zeros_like(smooth)
        grads.append(g[tuple(np.asarray(coords).T)])
    g = np.stack(grads, axis=1)
    norm = np.linalg.norm(g, axis=1)
    out = np.full_like(g, np.nan)
    ok = norm > 1e-12
    out[ok] = g[ok] / norm[ok, None]
    return out


def wall_shear_stress(sigma, cells, normals) -> WallSamples:
    """Tangential traction ``sigma n - (n . sigma n) n`` per wall cell.

    ``sigma`` is ``(n_cells, 3, 3)`` over all active cells; cells whose normal
    is undefined are skipped and counted.
    """
    normals = np.asarray(normals, dtype=float)
    ok = np.all(np.isfinite(normals), axis=1)
    skipped = int(np.count_nonzero(~ok))
    if skipped:
        log.warning("skipped %d wall cells with degenerate normals", skipped)
    cells = np.asarray(cells)[ok]
    n = normals[ok]
    s = np.asarray(sigma)[cells]
    t = np.einsum("kab,kb->ka", s, n)
    tau = t - np.sum(n * t, axis=1, keepdims=True) * n
    # remove the round-off normal component left by |n| != 1 exactly
    tau -= np.sum(tau * n, axis=1, keepdims=True) * n
    return WallSamples(cells, n, tau, skipped)


def region_average(field, region) -> float:
    """Mean magnitude of a per-cell scalar or vector field over ``region``."""
    region = np.asarray(region)
    if region.size == 0:
        raise ValueError("empty region")
    vals = np.asarray(field, dtype=float)[region]
    if vals.ndim > 1:
        vals = np.sqrt(np.sum(vals * vals, axis=1))
    else:
        vals = np.abs(vals)
    return float(np.sum(vals) / vals.size)


class TimeSeriesWriter:
    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(SERIES_HEADER)

    def write(self, row):
        self._w.writerow([f"{float(v):.10e}" for v in row])
        self._fh.flush()

    def close(self):
        self._fh.close()


def _be(a):
    return np.ascontiguousarray(a, dtype=">f8").tobytes()


def export_fields(sim_or_state, dom, path, t, scales: UnitScales, mu=None):
    """Write a legacy VTK structured-points file with physical fields.

    Arrays, in order: phi, rho [kg/m^3], p [Pa], u [m/s] (vector),
    mu [Pa s], sigma_norm [Pa]. Inactive voxels hold zeros. ``sim_or_state``
    is a MacroState (``mu`` then given separately) or anything with
    ``.macro`` and ``.mu``.
    """
    state = getattr(sim_or_state, "macro", sim_or_state)
    if mu is None:
        mu = sim_or_state.mu
    sig = state.sigma
    snorm = np.sqrt(np.sum(sig[:, :3] ** 2, axis=1) + 2 * np.sum(sig[:, 3:] ** 2, axis=1))
    fields = [
        ("phi", dom.phi),
        ("rho", state.rho * scales.rho0),
        ("p", CS2 * state.rho * scales.stress),
        ("mu", mu * scales.dynamic_viscosity),
        ("sigma_norm", snorm * scales.stress),
    ]
    nx, ny, nz = dom.shape
    npts = nx * ny * nz
    head = [
        "# vtk DataFile Version 3.0",
        f"vanslbm t={t:.9e}",
        "BINARY",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} {nz}",
        "ORIGIN {:.9e} {:.9e} {:.9e}".format(*dom.origin),
        f"SPACING {dom.spacing:.9e} {dom.spacing:.9e} {dom.spacing:.9e}",
        f"POINT_DATA {npts}",
    ]
    try:
        with open(path, "wb") as fh:
            fh.write(("\n".join(head) + "\n").encode())
            for name, vals in fields[:3]:
                _scalar(fh, name, dom.to_grid(np.asarray(vals, dtype=float)))
            ug = dom.to_grid(state.u * scales.velocity)
            fh.write(b"VECTORS u double\n")
            fh.write(_be(ug.transpose(2, 1, 0, 3).reshape(-1, 3)))
            fh.write(b"\n")
            for name, vals in fields[3:]:
                _scalar(fh, name, dom.to_grid(np.asarray(vals, dtype=float)))
    except OSError as exc:
        raise OSError(f"failed to write fields to {path}: {exc}") from exc


def _scalar(fh, name, grid):
    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n".encode())
    fh.write(_be(grid.ravel(order="F")))
    fh.write(b"\n")
