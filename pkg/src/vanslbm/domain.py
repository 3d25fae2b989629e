"""Simulation domain: active cells, porosity and the streaming link tables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .lattice import CI, OPP, Q

FLAG_FLUID = 1
FLAG_POROUS = 2
FLAG_WALL_ADJACENT = 4
FLAG_INLET = 8
FLAG_OUTLET = 16


class GeometryError(ValueError):
    pass


@dataclass
class BoundaryPatch:
    kind: str  # "inlet" | "outlet"
    cells: np.ndarray  # active-cell indices
    normal: tuple[int, int, int]  # outward unit normal (lattice axis)
    center: np.ndarray | None = None  # physical coordinates
    radius: float | None = None  # physical
    # outlet only: interior neighbours one and two cells upstream (-1 if absent)
    upstream1: np.ndarray | None = None
    upstream2: np.ndarray | None = None

    @property
    def axis(self) -> int:
        return int(np.flatnonzero(self.normal)[0])

    def unknown_directions(self) -> np.ndarray:
        """Directions whose populations arrive from outside the domain."""
        return np.flatnonzero(CI @ np.asarray(self.normal) < 0)


@dataclass
class SimulationDomain:
    shape: tuple[int, int, int]
    spacing: float
    origin: np.ndarray
    periodic: tuple[bool, bool, bool]
    active: np.ndarray  # bool grid
    index: np.ndarray  # int grid, -1 where inactive
    coords: np.ndarray  # (n, 3) grid indices of active cells, C order
    phi: np.ndarray  # (n,)
    flags: np.ndarray  # (n,) bit flags
    inlets: list[BoundaryPatch] = field(default_factory=list)
    outlets: list[BoundaryPatch] = field(default_factory=list)
    mode: str = "volume_averaged"
    nb: np.ndarray | None = None
    dest: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def solid(self) -> np.ndarray:
        return ~self.active

    def positions(self) -> np.ndarray:
        """Physical cell-centre coordinates of active cells."""
        return self.origin + self.coords * self.spacing

    def to_grid(self, values, fill=0.0):
        values = np.asarray(values)
        out = np.full(self.shape + values.shape[1:], fill, dtype=values.dtype)
        out[tuple(self.coords.T)] = values
        return out

    def from_grid(self, grid):
        return np.asarray(grid)[tuple(self.coords.T)]

    def cells_in(self, region) -> np.ndarray:
        """Active-cell indices inside a boolean grid region."""
        return np.flatnonzero(self.from_grid(region))

    def wall_cells(self) -> np.ndarray:
        return np.flatnonzero(self.flags & FLAG_WALL_ADJACENT)


def build_domain(active, phi_grid, spacing, origin=(0.0, 0.0, 0.0), periodic=(False,) * 3,
                 inlet=None, outlet=None, inlet_radius=None, mode="volume_averaged",
                 porous_threshold=1.0 - 1e-9):
    """Assemble a domain from an active-cell grid and optional patch masks.

    ``inlet``/``outlet`` are boolean grids marking patch cells; each connected
    patch must lie on one face of the box on a non-periodic axis.
    """
    active = np.asarray(active, dtype=bool)
    shape = active.shape
    index = np.full(shape, -1, dtype=np.int64)
    coords = np.argwhere(active)
    index[tuple(coords.T)] = np.arange(len(coords))
    phi = np.asarray(phi_grid, dtype=float)[tuple(coords.T)] if phi_grid is not None \
        else np.ones(len(coords))
    flags = np.full(len(coords), FLAG_FLUID, dtype=np.int64)
    flags[phi < porous_threshold] |= FLAG_POROUS
    dom = SimulationDomain(shape, float(spacing), np.asarray(origin, dtype=float),
                           tuple(bool(p) for p in periodic), active, index, coords, phi,
                           flags, mode=mode)
    for kind, grid in (("inlet", inlet), ("outlet", outlet)):
        if grid is None:
            continue
        for patch in _patches(dom, np.asarray(grid, dtype=bool) & active, kind):
            if kind == "inlet":
                patch.radius = inlet_radius if inlet_radius is not None else \
                    float(np.sqrt(len(patch.cells) / np.pi)) * dom.spacing
                dom.inlets.append(patch)
                dom.flags[patch.cells] |= FLAG_INLET
            else:
                dom.outlets.append(patch)
                dom.flags[patch.cells] |= FLAG_OUTLET
    _build_links(dom)
    _check_connected(dom)
    return dom


def _patches(dom, grid, kind):
    labels, count = ndimage.label(grid)
    shape = np.array(dom.shape)
    for lab in range(1, count + 1):
        pts = np.argwhere(labels == lab)
        normal = None
        for ax in range(3):
            if dom.periodic[ax]:
                continue
            if np.all(pts[:, ax] == 0):
                normal = tuple(-1 if a == ax else 0 for a in range(3))
            elif np.all(pts[:, ax] == shape[ax] - 1):
                normal = tuple(1 if a == ax else 0 for a in range(3))
            if normal is not None:
                break
        if normal is None:
            raise GeometryError(f"{kind} patch {lab} is not a plane on a non-periodic box face")
        cells = dom.index[tuple(pts.T)]
        center = dom.origin + pts.mean(axis=0) * dom.spacing
        patch = BoundaryPatch(kind, cells, normal, center=center)
        if kind == "outlet":
            ax = patch.axis
            if shape[ax] < 3:
                raise GeometryError("domain thinner than 3 cells along outlet normal")
            n = np.asarray(normal)
            patch.upstream1 = _lookup(dom, pts - n)
            patch.upstream2 = _lookup(dom, pts - 2 * n)
        yield patch


def _lookup(dom, pts):
    pts = np.asarray(pts)
    ok = np.all((pts >= 0) & (pts < np.array(dom.shape)), axis=1)
    out = np.full(len(pts), -1, dtype=np.int64)
    out[ok] = dom.index[tuple(pts[ok].T)]
    return out


def _build_links(dom):
    n = dom.n
    shape = np.array(dom.shape)
    nb = np.empty((n, Q), dtype=np.int64)
    dest = np.empty((n, Q), dtype=np.int64)
    cells = np.arange(n)
    patch_normal = np.zeros((n, 3), dtype=np.int64)
    for patch in dom.inlets + dom.outlets:
        patch_normal[patch.cells] = patch.normal
    wall = np.zeros(n, dtype=bool)
    for i in range(Q):
        y = dom.coords + CI[i]
        for ax in range(3):
            if dom.periodic[ax]:
                y[:, ax] %= shape[ax]
        inbox = np.all((y >= 0) & (y < shape), axis=1)
        target = np.full(n, -1, dtype=np.int64)
        target[inbox] = dom.index[tuple(y[inbox].T)]
        stream = target >= 0
        # leaving through an open patch face: value is discarded
        crossing = ~inbox & (patch_normal @ CI[i] > 0)
        bounce = ~stream & ~crossing
        nb[:, i] = np.where(stream, target, cells)
        dest[:, i] = np.where(stream, target * Q + i,
                              np.where(bounce, cells * Q + OPP[i], n * Q + i))
        wall |= bounce
    dom.nb = nb
    dom.dest = dest
    dom.flags[wall] |= FLAG_WALL_ADJACENT


def slot_coverage(dom) -> np.ndarray:
    """Number of writers for every (cell, direction) slot after one full step.

    Streaming and bounce-back writers come from the link table; boundary
    patches supply their unknown directions.
    """
    n = dom.n
    counts = np.bincount(dom.dest.ravel(), minlength=(n + 1) * Q)[: n * Q].reshape(n, Q)
    for patch in dom.inlets + dom.outlets:
        unknown = patch.unknown_directions()
        counts[np.ix_(patch.cells, unknown)] += 1
    return counts


def _check_connected(dom):
    if not dom.inlets or not dom.outlets:
        return
    struct = ndimage.generate_binary_structure(3, 1)
    labels, _ = ndimage.label(dom.active, structure=struct)
    lab = labels[tuple(dom.coords.T)]
    inlet_labels = {int(v) for p in dom.inlets for v in np.unique(lab[p.cells])}
    outlet_labels = {int(v) for p in dom.outlets for v in np.unique(lab[p.cells])}
    if not inlet_labels & outlet_labels:
        raise GeometryError("fluid region is not 6-connected between inlet and outlet")
