"""Voxel geometry: vessel masks, coil centrelines, porosity fields.

Mask file layout: one line of JSON (``dims``, ``spacing``, ``origin``,
``labels``, ``endianness``, ``order``) terminated by ``\\n``, followed by
``prod(dims)`` unsigned 8-bit labels in C order over ``(x, y, z)``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .domain import GeometryError, build_domain

log = logging.getLogger(__name__)

SOLID, FLUID, INLET, OUTLET, COIL = 0, 1, 2, 3, 4
LABEL_NAMES = {SOLID: "solid", FLUID: "fluid", INLET: "inlet", OUTLET: "outlet", COIL: "coil-wire"}
MASK_MAGIC = "vanslbm-mask-v1"


@dataclass
class VoxelMask:
    data: np.ndarray  # uint8 labels, shape dims, indexed [x, y, z]
    spacing: float
    origin: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.uint8)
        self.origin = np.asarray(self.origin, dtype=float)
        if self.data.ndim != 3 or min(self.data.shape) < 1:
            raise GeometryError("mask must be a non-empty 3-D array")
        if not self.spacing > 0:
            raise GeometryError("spacing must be positive")
        bad = set(np.unique(self.data).tolist()) - set(LABEL_NAMES)
        if bad:
            raise GeometryError(f"unknown labels {sorted(bad)}")

    @property
    def dims(self):
        return self.data.shape

    @property
    def fluid(self):
        """Voxels that carry fluid (including coil voxels in averaged mode)."""
        return self.data != SOLID

    def centers(self):
        idx = np.indices(self.dims).reshape(3, -1).T
        return self.origin + idx * self.spacing


@dataclass
class CoilWire:
    centerline: np.ndarray  # (m, 3) metres
    wire_diameter: float = 0.2e-3

    def __post_init__(self):
        self.centerline = np.atleast_2d(np.asarray(self.centerline, dtype=float))
        if self.centerline.shape[0] < 2 or self.centerline.shape[1] != 3:
            raise GeometryError("coil centreline needs at least two 3-D points")
        if not self.wire_diameter > 0:
            raise GeometryError("wire diameter must be positive")

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.centerline, axis=0), axis=1)))

    @property
    def volume(self) -> float:
        return self.length * math.pi * self.wire_diameter ** 2 / 4.0


@dataclass
class PorosityField:
    phi: np.ndarray
    window: float


# -- file formats -----------------------------------------------------------

def write_mask(path, mask: VoxelMask):
    header = {
        "format": MASK_MAGIC,
        "dims": [int(d) for d in mask.dims],
        "spacing": float(mask.spacing),
        "origin": [float(o) for o in mask.origin],
        "labels": {str(k): v for k, v in LABEL_NAMES.items()},
        "endianness": "little",
        "order": "C",
        "dtype": "uint8",
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(mask.data, dtype="<u1").tobytes())


def read_mask(path) -> VoxelMask:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        raw = fh.read()
    if header.get("format") != MASK_MAGIC:
        raise GeometryError(f"{path}: not a {MASK_MAGIC} file")
    dims = tuple(header["dims"])
    data = np.frombuffer(raw, dtype="<u1")
    if data.size != int(np.prod(dims)):
        raise GeometryError(f"{path}: expected {np.prod(dims)} voxels, found {data.size}")
    return VoxelMask(data.reshape(dims).copy(), header["spacing"], header["origin"])


def read_coil_csv(path, wire_diameter=0.2e-3) -> CoilWire:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["x_m", "y_m", "z_m"]:
            raise GeometryError(f"{path}: expected header x_m,y_m,z_m, got {header}")
        pts = [[float(v) for v in row] for row in reader if row]
    return CoilWire(np.array(pts), wire_diameter)


def write_coil_csv(path, wire: CoilWire):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_m", "y_m", "z_m"])
        for p in wire.centerline:
            w.writerow([repr(float(v)) for v in p])


# -- coil and porosity ------------------------------------------------------

def _segment_distance(points, a, b):
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return np.linalg.norm(points - a, axis=1)
    s = np.clip((points - a) @ ab / L2, 0.0, 1.0)
    return np.linalg.norm(points - (a + s[:, None] * ab), axis=1)


def coil_occupancy(wire: CoilWire, dims, spacing, origin) -> np.ndarray:
    """Boolean grid of voxels whose centres lie within d/2 of the centreline."""
    occ = np.zeros(dims, dtype=bool)
    r = wire.wire_diameter / 2.0
    origin = np.asarray(origin, dtype=float)
    pts = wire.centerline
    dims_a = np.array(dims)
    for a, b in zip(pts[:-1], pts[1:]):
        lo = np.floor((np.minimum(a, b) - r - origin) / spacing).astype(int)
        hi = np.ceil((np.maximum(a, b) + r - origin) / spacing).astype(int) + 1
        lo = np.clip(lo, 0, dims_a)
        hi = np.clip(hi, 0, dims_a)
        if np.any(hi <= lo):
            continue
        idx = np.indices(hi - lo).reshape(3, -1).T + lo
        near = _segment_distance(origin + idx * spacing, a, b) <= r
        occ[tuple(idx[near].T)] = True
    return occ


def voxelize_coil(wire: CoilWire, mask: VoxelMask) -> VoxelMask:
    """Label fluid voxels covered by the wire as coil-wire.

    Wire voxels that land outside the fluid are not labelled; their count is
    logged as a warning.
    """
    occ = coil_occupancy(wire, mask.dims, mask.spacing, mask.origin)
    inside = occ & (mask.data == FLUID)
    escaped = int(np.count_nonzero(occ & (mask.data == SOLID)))
    if escaped or not inside.any():
        log.warning("coil wire leaves the fluid region in %d voxels", escaped)
    data = mask.data.copy()
    data[inside] = COIL
    return replace(mask, data=data)


def window_voxels(window, spacing) -> int:
    """Odd voxel width of a cubic averaging window of physical size ``window``."""
    if window < spacing * (1 - 1e-9):
        raise GeometryError("averaging window must be at least one voxel")
    half = int(round((window / spacing - 1.0) / 2.0))
    return 2 * max(half, 0) + 1


def box_sum(a, width):
    """Sum of ``a`` over a centred cubic window via a summed-area table
    (zero outside the array)."""
    h = width // 2
    p = np.pad(np.asarray(a, dtype=np.float64), h)
    s = np.zeros(tuple(d + 1 for d in p.shape))
    s[1:, 1:, 1:] = p.cumsum(0).cumsum(1).cumsum(2)
    nx, ny, nz = a.shape
    w = width
    return (s[w:w + nx, w:w + ny, w:w + nz]
            - s[:nx, w:w + ny, w:w + nz] - s[w:w + nx, :ny, w:w + nz] - s[w:w + nx, w:w + ny, :nz]
            + s[:nx, :ny, w:w + nz] + s[:nx, w:w + ny, :nz] + s[w:w + nx, :ny, :nz]
            - s[:nx, :ny, :nz])


def porosity_by_convolution(mask: VoxelMask, window, phi_min=0.05) -> PorosityField:
    """One minus the coil-voxel fraction in a cubic window centred on each voxel."""
    w = window_voxels(window, mask.spacing)
    frac = box_sum(mask.data == COIL, w) / float(w ** 3)
    phi = np.clip(1.0 - frac, phi_min, 1.0)
    # exact ones away from the coil, free of summed-area round-off
    phi[frac < 0.5 / w ** 3] = 1.0
    return PorosityField(phi, window)


def classify_cells(mask: VoxelMask, phi: PorosityField | None = None,
                   mode="volume_averaged", periodic=(False, False, False),
                   inlet_radius=None):
    """Build the simulation domain from labels and porosity.

    ``fully_resolved``: coil voxels are solid and porosity is one everywhere.
    ``volume_averaged``: coil voxels are fluid and carry the porosity field.
    """
    if mode not in ("fully_resolved", "volume_averaged"):
        raise GeometryError(f"unknown mode {mode!r}")
    data = mask.data
    if phi is not None and phi.phi.shape != data.shape:
        raise GeometryError("porosity and mask dimensions differ")
    if mode == "fully_resolved":
        active = (data != SOLID) & (data != COIL)
        phi_grid = None
    else:
        active = data != SOLID
        phi_grid = phi.phi if phi is not None else None
    return build_domain(active, phi_grid, mask.spacing, mask.origin, periodic,
                        inlet=data == INLET, outlet=data == OUTLET,
                        inlet_radius=inlet_radius, mode=mode)


def packing_density(wire: CoilWire | None, sac) -> float:
    """Wire volume (length x cross-section) over the sac fluid volume.

    ``sac`` is a VoxelMask whose non-solid voxels form the sac.
    """
    n = int(np.count_nonzero(sac.data != SOLID))
    if n == 0:
        raise GeometryError("empty sac region")
    if wire is None:
        return 0.0
    return wire.volume / (n * sac.spacing ** 3)


# -- synthetic demo geometry -------------------------------------------------

@dataclass(frozen=True)
class DemoParams:
    """Sphere-on-tube aneurysm, in voxels unless noted."""

    nx: int = 48
    ny: int = 40
    nz: int = 26
    tube_radius: float = 6.0
    sac_radius: float = 10.5
    sac_offset: float = 12.5  # sac centre above the tube axis
    spacing: float = 1.0e-4  # metres
    wire_diameter: float = 2.0e-4
    window: float = 6.0e-4

    @property
    def tube_axis(self):
        return np.array([self.tube_radius + 1.5, self.nz / 2.0 - 0.5])  # (y, z)

    @property
    def sac_center(self):
        y0, z0 = self.tube_axis
        return np.array([(self.nx - 1) / 2.0, y0 + self.sac_offset, z0])


def demo_geometry(p: DemoParams = DemoParams()):
    """Return ``(mask, sac_mask)`` for the synthetic aneurysm.

    Inlet at ``x = 0``, outlet at ``x = nx - 1``; the sac mask holds the
    sphere voxels beyond the neck plane tangent to the top of the tube.
    """
    x, y, z = np.indices((p.nx, p.ny, p.nz)).astype(float)
    y0, z0 = p.tube_axis
    tube = (y - y0) ** 2 + (z - z0) ** 2 <= p.tube_radius ** 2
    c = p.sac_center
    sphere = (x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2 <= p.sac_radius ** 2
    data = np.zeros((p.nx, p.ny, p.nz), dtype=np.uint8)
    data[tube | sphere] = FLUID
    data[0][tube[0]] = INLET
    data[-1][tube[-1]] = OUTLET
    mask = VoxelMask(data, p.spacing, np.zeros(3))
    beyond_neck = y - y0 > p.tube_radius
    sac = np.where(sphere & beyond_neck & ~tube, FLUID, SOLID).astype(np.uint8)
    return mask, VoxelMask(sac, p.spacing, np.zeros(3))


def random_coil(center, radius, wire_diameter, length, seed=0, step=None, persistence=0.9,
                allowed=None):
    """Smooth random walk of total ``length`` confined to a sphere.

    Steps of ``wire_diameter/2`` with directional persistence; moves that
    would leave the sphere (shrunk by the wire radius) are redirected toward
    the centre. ``allowed`` optionally restricts points further (callable on
    a point in metres).
    """
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float)
    step = wire_diameter / 2.0 if step is None else step
    limit = radius - wire_diameter / 2.0
    pos = center + rng.uniform(-0.3, 0.3, 3) * limit
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    pts = [pos.copy()]
    walked = 0.0
    while walked < length:
        d = persistence * d + (1 - persistence) * rng.normal(size=3) * 2.0
        d /= np.linalg.norm(d)
        nxt = pos + step * d
        tries = 0
        while np.linalg.norm(nxt - center) > limit or (allowed is not None and not allowed(nxt)):
            inward = (center - pos) / max(np.linalg.norm(center - pos), 1e-30)
            d = inward + rng.normal(size=3) * 0.8
            d /= np.linalg.norm(d)
            nxt = pos + step * d
            tries += 1
            if tries > 100:
                nxt = pos + step * inward
                break
        pos = nxt
        pts.append(pos.copy())
        walked += step
    return np.array(pts)


def demo_coil(p: DemoParams, sac: VoxelMask, packing, seed=0) -> CoilWire:
    """Coil in the demo sac whose analytic packing density equals ``packing``."""
    n = int(np.count_nonzero(sac.data != SOLID))
    length = packing * n * p.spacing ** 3 / (math.pi * p.wire_diameter ** 2 / 4.0)
    center = p.sac_center * p.spacing
    neck = (p.tube_axis[0] + p.tube_radius) * p.spacing + p.wire_diameter / 2.0

    def in_sac(q):
        # keep the wire beyond the neck plane, out of the parent vessel
        return q[1] > neck

    pts = random_coil(center, p.sac_radius * p.spacing, p.wire_diameter, length, seed=seed,
                      allowed=in_sac)
    # trim the final step so the polyline length matches exactly
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    excess = seg.sum() - length
    if excess > 0:
        last = pts[-1] - pts[-2]
        pts[-1] = pts[-2] + last * (1 - excess / seg[-1])
    return CoilWire(pts, p.wire_diameter)
