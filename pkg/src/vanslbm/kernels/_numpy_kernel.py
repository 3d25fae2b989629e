"""Vectorised NumPy implementation of the fused collide-stream step.

Used when the compiled extension is unavailable or when
``VANSLBM_BACKEND=python`` is set. Cells are processed in contiguous blocks;
blocks write disjoint slots so any worker count gives identical results.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..lattice import C, CS2, W

NAME = "numpy"

_CC = np.stack([C[:, a] * C[:, b] for a, b in
                ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))], axis=1)
_OFFDIAG = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])
_BLOCK = 16384


def _solve_anisotropic(v, phi, darcy, forch, u0, p):
    lin = np.eye(3) + (darcy / (2 * phi))[:, None, None] * p.a_inv
    quad = (forch / (2 * phi))[:, None, None] * p.a_inv_sqrt
    u = u0.copy()
    for _ in range(p.fp_max_iter):
        speed = np.sqrt(np.sum(u * u, axis=1))
        X = lin + speed[:, None, None] * quad
        u_new = np.linalg.solve(X, v[..., None])[..., 0]
        inc = np.sqrt(np.sum((u_new - u) ** 2, axis=1))
        u = u_new
        if not np.any(inc > p.fp_tol):
            return u, 0
    return u, int(np.count_nonzero(inc > p.fp_tol))


def _block(a, b, fr, fw_flat, geo, st, p, use_prev_u, trace):
    f = fr[a:b]
    phi = geo.phi[a:b]
    darcy = geo.darcy[a:b]
    forch = geo.forch[a:b]
    g = np.asarray(p.body_accel, dtype=float)

    if trace is not None:
        trace.append("moments")
    m0 = f.sum(axis=1)
    bad = ~(m0 > 1e-12)
    m0s = np.where(bad, 1.0, m0)
    rho = m0s / phi
    v = (f @ C) / m0s[:, None] + g / (2 * phi[:, None])

    if trace is not None:
        trace.append("velocity")
    unconverged = 0
    if p.anisotropic:
        u0 = st.u[a:b] if use_prev_u else v
        u, unconverged = _solve_anisotropic(v, phi, darcy, forch, u0, p)
        speed = np.sqrt(np.sum(u * u, axis=1))
        force = g - darcy[:, None] * (u @ p.a_inv.T) - (forch * speed)[:, None] * (u @ p.a_inv_sqrt.T)
    else:
        c0 = 0.5 + darcy / (4 * phi)
        c1 = forch / (2 * phi)
        vn = np.sqrt(np.sum(v * v, axis=1))
        u = v / (c0 + np.sqrt(c0 * c0 + c1 * vn))[:, None]
        speed = np.sqrt(np.sum(u * u, axis=1))
        force = g - ((darcy + forch * speed)[:, None]) * u

    cu = u @ C.T
    uu = np.sum(u * u, axis=1)
    feq = W * (phi * rho)[:, None] * (1.0 + cu / CS2 + cu * cu / (2 * CS2 * CS2)
                                      - uu[:, None] / (2 * CS2))

    if trace is not None:
        trace.append("stress")
    omega_prev = st.omega[a:b]
    fneq = f - feq
    sig = fneq @ _CC
    fu = np.stack([force[:, i] * u[:, j] for i, j in
                   ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))], axis=1)
    uf = np.stack([u[:, i] * force[:, j] for i, j in
                   ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))], axis=1)
    sig = (0.5 * omega_prev - 1.0)[:, None] * (sig + 0.5 * rho[:, None] * (fu + uf))

    if trace is not None:
        trace.append("rheology")
    rh = p.rheology
    r = rho * CS2
    if rh.newtonian:
        mu = np.full_like(rho, rh.mu0)
    else:
        gamma = np.sqrt(np.sum(sig * sig * _OFFDIAG, axis=1)) / st.mu[a:b]
        mu = rh.mu_inf + (rh.mu0 - rh.mu_inf) * (1.0 + (rh.lam * gamma) ** rh.a) ** ((rh.n - 1.0) / rh.a)
    omega = 2.0 * r / (2.0 * mu + r)
    clamped = (omega < rh.omega_min) | (omega > rh.omega_max)
    if np.any(clamped):
        omega = np.clip(omega, rh.omega_min, rh.omega_max)
        mu = np.where(clamped, r * (1.0 / omega - 0.5), mu)

    if trace is not None:
        trace.append("collide")
    cf = force @ C.T
    uf_dot = np.sum(u * force, axis=1)
    guo = W * (rho * (1.0 - 0.5 * omega))[:, None] * ((cf - uf_dot[:, None]) / CS2
                                                       + cu * cf / (CS2 * CS2))
    dphi = geo.phi[geo.nb[a:b]] - phi[:, None]
    fpost = f + W * rho[:, None] * dphi + guo - omega[:, None] * fneq
    bad |= ~np.isfinite(fpost.sum(axis=1))

    if trace is not None:
        trace.append("stream")
    fw_flat[geo.dest[a:b].ravel()] = fpost.ravel()

    st.rho[a:b] = rho
    st.u[a:b] = u
    st.sigma[a:b] = sig
    st.mu[a:b] = mu
    st.omega[a:b] = omega
    idx = np.flatnonzero(bad)
    first = int(a + idx[0]) if idx.size else -1
    return int(idx.size), first, unconverged


def step(fr, fw, geo, st, p, threads=1, use_prev_u=True, trace=None):
    """One fused step. Returns ``(n_bad, first_bad_cell, n_unconverged)``."""
    n = geo.n
    fw_flat = fw.reshape(-1)
    bounds = [(a, min(a + _BLOCK, n)) for a in range(0, n, _BLOCK)] or [(0, 0)]
    if threads <= 1 or len(bounds) == 1:
        results = [_block(a, b, fr, fw_flat, geo, st, p, use_prev_u, trace) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda ab: _block(ab[0], ab[1], fr, fw_flat, geo, st, p, use_prev_u, None),
                bounds))
    n_bad = sum(r[0] for r in results)
    firsts = [r[1] for r in results if r[1] >= 0]
    return n_bad, (firsts[0] if firsts else -1), sum(r[2] for r in results)
