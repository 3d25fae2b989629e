"""Wall, inlet and outlet treatments.

Bounce-back is folded into the streaming link table (see
:mod:`vanslbm.domain`); the functions here act on the write buffer after the
push and fill the slots that streaming leaves open at inlet and outlet cells.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .core import equilibrium
from .lattice import C, CI, CS2, OPP, Q

CS = math.sqrt(CS2)


class BoundaryConfigError(ValueError):
    pass


@dataclass
class InflowWaveform:
    """Periodic mean inflow velocity ``v(t)`` (m/s) with a start-up ramp.

    ``dt`` is the time-step size used to convert ``ramp_steps`` to seconds;
    samples need not include ``t = period`` (the series wraps).
    """

    t: np.ndarray
    v: np.ndarray
    period: float
    ramp_steps: int = 1500
    ramp_shape: str = "linear"
    dt: float | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.t.size == 0:
            raise BoundaryConfigError("empty waveform")
        if self.t.shape != self.v.shape:
            raise BoundaryConfigError("waveform t and v lengths differ")
        if not self.period > 0:
            raise BoundaryConfigError("waveform period must be positive")
        if np.any(np.diff(self.t) <= 0):
            raise BoundaryConfigError("waveform times must be strictly increasing")
        if not np.all(np.isfinite(self.v)):
            raise BoundaryConfigError("waveform velocities must be finite")
        if self.ramp_shape not in ("linear", "smoothstep"):
            raise BoundaryConfigError(f"unknown ramp shape {self.ramp_shape!r}")

    @property
    def ramp_duration(self) -> float:
        if self.ramp_steps == 0:
            return 0.0
        if self.dt is None:
            raise BoundaryConfigError("waveform needs dt to place the ramp")
        return self.ramp_steps * self.dt

    def peak(self) -> float:
        return float(np.max(np.abs(self.v)))

    def peak_time(self) -> float:
        return float(self.t[np.argmax(self.v)])

    def scaled(self, factor):
        return InflowWaveform(self.t, self.v * factor, self.period, self.ramp_steps,
                              self.ramp_shape, self.dt)


def waveform_sample(waveform: InflowWaveform, t: float) -> float:
    """Mean inflow velocity at time ``t``; ``t < 0`` is the pre-run ramp."""
    base = float(np.interp(t % waveform.period if t >= 0 else 0.0, waveform.t, waveform.v,
                           period=waveform.period))
    if t >= 0:
        return base
    dur = waveform.ramp_duration
    if t < -dur * (1 + 1e-12):
        raise BoundaryConfigError(f"t={t} precedes the ramp start {-dur}")
    s = min(max(1.0 + t / dur, 0.0), 1.0) if dur > 0 else 1.0
    if waveform.ramp_shape == "smoothstep":
        s = s * s * (3.0 - 2.0 * s)
    return s * base


def synthetic_waveform(mean=0.25, first=0.12, second=0.05, period=1.0, systole=0.2,
                       samples=200, ramp_steps=1500):
    """Two-harmonic heartbeat-like waveform peaking at ``t = systole``."""
    t = np.arange(samples) * period / samples
    ph = 2 * np.pi * (t - systole) / period
    v = mean + first * np.cos(ph) + second * np.cos(2 * ph)
    return InflowWaveform(t, v, period, ramp_steps)


def read_waveform_csv(path, period=None, ramp_steps=1500, ramp_shape="linear"):
    """Read ``t_seconds,v_m_per_s`` rows. The period defaults to the last time
    plus the final sample spacing."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["t_seconds", "v_m_per_s"]:
            raise BoundaryConfigError(f"{path}: expected header t_seconds,v_m_per_s, got {header}")
        rows = [(float(a), float(b)) for a, b in reader if a.strip()]
    if len(rows) < 2:
        raise BoundaryConfigError(f"{path}: need at least two samples")
    t, v = map(np.array, zip(*rows))
    if period is None:
        period = t[-1] + (t[-1] - t[-2])
    return InflowWaveform(t, v, period, ramp_steps, ramp_shape)


def write_waveform_csv(path, waveform: InflowWaveform):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_seconds", "v_m_per_s"])
        for a, b in zip(waveform.t, waveform.v):
            w.writerow([repr(float(a)), repr(float(b))])


OUTLET_SCHEMES = ("characteristic", "nonequilibrium", "linear", "zero_gradient")


def poiseuille_profile(r, R, v_mean):
    """Hagen-Poiseuille axial velocity ``2 v (1 - r^2/R^2)``, zero outside R."""
    if not R > 0:
        raise ValueError("radius must be positive")
    r = np.asarray(r, dtype=float)
    out = np.where(r <= R, 2.0 * v_mean * (1.0 - (r / R) ** 2), 0.0)
    return out if out.ndim else float(out)


def bounce_back(post, dom, write):
    """Apply only the reflected links of the push: a population heading into a
    wall returns to its origin cell in the opposite direction."""
    n = dom.n
    cells = np.arange(n)[:, None]
    reflected = dom.dest == cells * Q + OPP[None, :]
    reflected[:, 0] = False
    write.reshape(-1)[dom.dest[reflected]] = np.asarray(post)[reflected]


def zou_he_velocity(f, cells, normal, u, phi):
    """Close the unknown populations of ``cells`` so that the cell density
    follows from the known populations and the first moment equals
    ``phi rho u``.

    Non-equilibrium bounce-back for the unknown set plus a transverse
    momentum correction spread over that set.
    """
    normal = np.asarray(normal)
    n_in = -normal
    cn = CI @ n_in
    unknown = np.flatnonzero(cn > 0)
    outgoing = np.flatnonzero(cn < 0)
    tangential = np.flatnonzero(cn == 0)
    u = np.asarray(u, dtype=float)
    phi = np.asarray(phi, dtype=float)
    fk = f[cells]
    un = u @ n_in
    if np.any(un >= 1.0):
        raise BoundaryConfigError("inlet normal velocity must stay below one lattice unit")
    rho = (fk[:, tangential].sum(1) + 2.0 * fk[:, outgoing].sum(1)) / (phi * (1.0 - un))
    feq = equilibrium(phi, rho, u)
    fk[:, unknown] = fk[:, OPP[unknown]] + feq[:, unknown] - feq[:, OPP[unknown]]
    dj = (phi * rho)[:, None] * u - fk @ C
    tang_axes = np.flatnonzero(n_in == 0)
    cu = C[unknown]
    for ax in tang_axes:
        denom = np.sum(cu[:, ax] ** 2)
        fk[:, unknown] += (dj[:, ax] / denom)[:, None] * cu[None, :, ax]
    f[cells] = fk
    return rho


def inlet_velocity(patch, positions, v_mean_lattice):
    """Lattice velocity vectors on an inlet patch for mean speed ``v``."""
    rel = positions - patch.center
    axis = patch.axis
    rel[:, axis] = 0.0
    r = np.linalg.norm(rel, axis=1)
    un = poiseuille_profile(r, patch.radius, v_mean_lattice)
    return -np.asarray(patch.normal, dtype=float)[None, :] * np.asarray(un)[:, None]


def zou_he_inlet(f, patch, dom, v_mean_lattice, max_velocity=math.sqrt(1 / 3)):
    """Impose the Poiseuille profile with mean ``v_mean_lattice`` on ``patch``."""
    if 2.0 * abs(v_mean_lattice) >= max_velocity:
        raise BoundaryConfigError(
            f"inlet centreline lattice velocity {2 * v_mean_lattice:.3g} reaches c_s")
    u = inlet_velocity(patch, dom.positions()[patch.cells], v_mean_lattice)
    return zou_he_velocity(f, patch.cells, patch.normal, u, dom.phi[patch.cells])


def outlet_invariant(rho, u, normal, rho_out=1.0):
    """Incoming acoustic amplitude ``rho - rho_out (u.n)/c_s`` of each cell."""
    return rho - rho_out * (np.asarray(u) @ np.asarray(normal, dtype=float)) / CS


def extrapolation_outlet(f, patch, scheme="characteristic", phi=None, rho_out=1.0,
                         invariant=None, relax=1e-3, anchor=1.0):
    """Fill unknown outlet populations from upstream cells along the normal.

    ``characteristic``: equilibrium with the first upstream cell's velocity and
    a boundary density ``W + rho_out (u.n)/c_s`` that lets outgoing sound
    waves leave; ``invariant`` holds the per-cell incoming amplitude ``W``
    and is relaxed in place toward the value that gives ``rho_out``, at rate
    ``relax`` per step. The upstream non-equilibrium part is added.
    ``nonequilibrium``: same construction with the density pinned at
    ``rho_out`` (``anchor=1``) or blended with the upstream density.
    ``linear``: ``2 f(x-n) - f(x-2n)``; ``zero_gradient``: ``f(x-n)``.
    Cells lacking upstream neighbours fall back to the lower-order rule, and
    to reflection when none exist.
    """
    if scheme not in OUTLET_SCHEMES:
        raise BoundaryConfigError(f"unknown outlet scheme {scheme!r}")
    unknown = patch.unknown_directions()
    cells = patch.cells
    u1, u2 = patch.upstream1, patch.upstream2
    has1 = u1 >= 0
    vals = f[np.ix_(cells, OPP[unknown])]
    if scheme in ("characteristic", "nonequilibrium"):
        if phi is None:
            raise BoundaryConfigError(f"{scheme} outlet needs the porosity field")
        if scheme == "characteristic" and invariant is None:
            raise BoundaryConfigError("characteristic outlet needs its invariant state")
        if np.any(has1):
            up = u1[has1]
            fu = f[up]
            m0 = fu.sum(axis=1)
            u = (fu @ C) / m0[:, None]
            neq = fu - equilibrium(phi[up], m0 / phi[up], u)
            if scheme == "characteristic":
                un = u @ np.asarray(patch.normal, dtype=float)
                w = invariant[has1]
                rho_b = w + rho_out * un / CS
                invariant[has1] = w + relax * (rho_out - rho_b)
            else:
                rho_b = (1.0 - anchor) * m0 / phi[up] + anchor * rho_out
            feq = equilibrium(phi[cells[has1]], rho_b, u)
            vals[has1] = feq[:, unknown] + neq[:, unknown]
    else:
        has2 = has1 & (u2 >= 0) & (scheme == "linear")
        if np.any(has1):
            vals[has1] = f[np.ix_(u1[has1], unknown)]
        if np.any(has2):
            vals[has2] = 2.0 * f[np.ix_(u1[has2], unknown)] - f[np.ix_(u2[has2], unknown)]
    f[np.ix_(cells, unknown)] = vals
