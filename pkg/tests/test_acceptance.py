"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 6-8 share one set of demo runs (bundled synthetic aneurysm, seed 0),
each stopped at peak systole of the synthetic waveform.
"""
import logging

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from vanslbm.boundaries import InflowWaveform
from vanslbm.config import load_config
from vanslbm.core import collide, equilibrium, guo_term, unpack_sym
from vanslbm.demo import bundled_demo
from vanslbm.domain import build_domain
from vanslbm.driver import build, run
from vanslbm.lattice import C, Q
from vanslbm.observables import wall_shear_stress
from vanslbm.porous import PorousClosure, solve_velocity_anisotropic
from vanslbm.rheology import CarreauYasudaParams
from vanslbm.solver import Simulation, SolverOptions
from vanslbm.units import UnitScales

pytestmark = pytest.mark.slow


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def run_to_steady(sim, field, tol, chunk=200, max_steps=500000):
    prev = None
    while sim.step_index < max_steps:
        sim.step(chunk)
        cur = field(sim).copy()
        if prev is not None and np.abs(cur - prev).max() <= tol * max(np.abs(cur).max(), 1e-300):
            return cur
        prev = cur
    raise AssertionError("no steady state")


# -- 1: Newtonian Poiseuille -------------------------------------------------------

def _poiseuille_error(D):
    """L2 error of the mid-length axial profile against Hagen-Poiseuille at the
    imposed mean velocity; tube of D cells across, lattice viscosity giving
    tau = 1/2 + sqrt(3/16)."""
    nu = (np.sqrt(3 / 16)) / 3
    u_mean = 0.32 / D
    dx, dt, rho0 = 1e-4, 1e-5, 1000.0
    R, n = D / 2, D + 2
    L = max(D, 12)
    x, y, z = np.indices((L, n, n)).astype(float)
    c = (n - 1) / 2
    active = (y - c) ** 2 + (z - c) ** 2 <= R * R
    dom = build_domain(active, None, dx, inlet=active & (x == 0), outlet=active & (x == L - 1),
                       inlet_radius=R * dx)
    mu = nu * dx * dx / dt * rho0
    wf = InflowWaveform(np.array([0.0, 0.5]), np.full(2, u_mean * dx / dt), 1.0, ramp_steps=200)
    sim = Simulation(dom, UnitScales(dx, dt, rho0),
                     CarreauYasudaParams(mu0=mu, mu_inf=mu, model="newtonian"), waveform=wf)
    ux = run_to_steady(sim, lambda s: s.state.u[:, 0], 1e-12 * 200 / (0.32 / D))
    mid = dom.coords[:, 0] == L // 2
    r2 = ((dom.coords[mid, 1:] - c) ** 2).sum(1)
    exact = 2 * u_mean * (1 - r2 / (R * R))
    return np.sqrt(np.sum((ux[mid] - exact) ** 2) / np.sum(exact ** 2))


def test_criterion_1_poiseuille(capsys):
    e16, e32 = _poiseuille_error(16), _poiseuille_error(32)
    ratio = e16 / e32
    verdict(capsys, 1, e32 < 0.02 and 3 <= ratio <= 5,
            f"L2 at D=32 {e32:.4%}, D=16 {e16:.4%}, ratio {ratio:.2f}")


# -- 2: porous plug ----------------------------------------------------------------

def test_criterion_2_porous_plug(capsys):
    phi, d_p = 0.6, 1.25e-3
    dx, dt, rho0 = 43.9e-6, 0.3e-6, 1060.0
    rh = CarreauYasudaParams()
    nu = rh.mu0 / rho0
    # independent closure values
    k = phi ** 3 * d_p ** 2 / (150 * (1 - phi) ** 2)
    cf = 1.75 / np.sqrt(150 * phi ** 3)
    a, b = phi ** 2 * nu / k, phi ** 3 * cf / np.sqrt(k)
    details, ok = [], True
    for u_lat in (0.005, 0.1):
        u_target = u_lat * dx / dt
        g = a * u_target + b * u_target ** 2
        oracle = brentq(lambda u: a * u + b * u * u - g, 0.0, 10 * u_target, xtol=1e-15)
        dom = build_domain(np.ones((4, 4, 4), bool), np.full((4, 4, 4), phi), dx,
                           periodic=(True,) * 3)
        sim = Simulation(dom, UnitScales(dx, dt, rho0), rh, PorousClosure(d_p=d_p),
                         options=SolverOptions(body_accel=(g, 0, 0)))
        u = run_to_steady(sim, lambda s: s.state.u[:, 0], 1e-12, chunk=100)
        err = np.abs(u * dx / dt / oracle - 1).max()
        regime = b * oracle / a
        ok &= err < 0.01
        details.append(f"forchheimer/darcy {regime:.3g}: rel err {err:.2e}")
    verdict(capsys, 2, ok, "; ".join(details))


# -- 3: shear-thinning channel -------------------------------------------------------

def test_criterion_3_shear_thinning_channel(capsys):
    p = CarreauYasudaParams()
    dx, dt, rho0, ny, g = 1e-4, 2e-5, 1060.0, 32, 0.3
    H = ny * dx
    h = H / 2

    def mu(gd):
        return p.mu_inf + (p.mu0 - p.mu_inf) * (1 + (p.lam * gd) ** p.a) ** ((p.n - 1) / p.a)

    def dudy(y):
        # |tau| = mu(gamma_dot) |u'| with gamma_dot = sqrt(2) |u'| in simple shear
        tau = rho0 * g * (h - y)
        if tau == 0:
            return 0.0
        up = brentq(lambda s: mu(np.sqrt(2) * s) * s - abs(tau), 0, 2 * abs(tau) / p.mu_inf,
                    xtol=1e-16)
        return np.sign(tau) * up

    sol = solve_ivp(lambda y, u: [dudy(y)], (0, h), [0.0], dense_output=True, rtol=1e-11,
                    atol=1e-14, max_step=dx / 20)
    ys = (np.arange(ny) + 0.5) * dx
    oracle = np.array([sol.sol(min(y, H - y))[0] for y in ys])

    dom = build_domain(np.ones((1, ny, 1), bool), None, dx, periodic=(True, False, True))
    sim = Simulation(dom, UnitScales(dx, dt, rho0), p, options=SolverOptions(body_accel=(g, 0, 0)))
    u = run_to_steady(sim, lambda s: s.state.u[:, 0], 1e-10, chunk=500) * dx / dt
    err = np.sqrt(np.sum((u - oracle) ** 2) / np.sum(oracle ** 2))
    verdict(capsys, 3, err < 0.03,
            f"L2 {err:.3%}, omega in [{sim.state.omega.min():.3f}, {sim.state.omega.max():.3f}]")


# -- 4: fixed point vs explicit formula ----------------------------------------------

def test_criterion_4_fixed_point_matches_explicit(capsys):
    rng = np.random.default_rng(2024)
    n, nu = 10_000, 0.05
    v = rng.normal(size=(n, 3)) * 10 ** rng.uniform(-4, -1, (n, 1))
    phi = rng.uniform(0.1, 0.99, n)
    k = 10 ** rng.uniform(-2, 3, n)
    cf = 1.75 / np.sqrt(150 * phi ** 3)
    hist = []
    u_fp = solve_velocity_anisotropic(v, k[:, None, None] * np.eye(3), phi, nu, cf,
                                      u_init=np.zeros((n, 3)), history=hist)
    c0 = 0.5 + phi * nu / (4 * k)
    c1 = phi ** 2 * cf / (2 * np.sqrt(k))
    vn = np.linalg.norm(v, axis=1)
    u_ex = v / (c0 + np.sqrt(c0 ** 2 + c1 * vn))[:, None]
    rel = np.linalg.norm(u_fp - u_ex, axis=1) / np.linalg.norm(u_ex, axis=1)
    worst = max(float(np.max(norms / vn)) for norms, _ in hist)
    verdict(capsys, 4, rel.max() <= 1e-10 and worst <= 1.0,
            f"max rel diff {rel.max():.2e} over {n} samples, "
            f"max |u_m+1|/|v_pre| {worst:.15f} over {len(hist)} iterations")


# -- 5: conservation and equilibrium invariants --------------------------------------

def test_criterion_5_invariants(capsys):
    rng = np.random.default_rng(5)
    sc = UnitScales(1e-4, 1e-5, 1060.0)
    shape = (8, 8, 8)
    dom = build_domain(np.ones(shape, bool), np.full(shape, 0.6), sc.dx, periodic=(True,) * 3)
    sim = Simulation(dom, sc, CarreauYasudaParams(), PorousClosure(d_p=1e-3))
    sim.initialize(rho=1 + 1e-3 * rng.normal(size=dom.n), u=0.02 * rng.normal(size=(dom.n, 3)))
    m0 = sim.total_mass()
    sim.step(1000)
    drift = abs(sim.total_mass() / m0 - 1)

    phi = rng.uniform(0.1, 1.0, 200)
    rho = rng.uniform(0.9, 1.1, 200)
    u = 0.03 * rng.normal(size=(200, 3))
    omega = rng.uniform(0.2, 1.95, 200)
    feq = equilibrium(phi, rho, u)
    post = collide(feq, feq, rho, phi, np.repeat(phi[:, None], Q, 1), u, np.zeros_like(u), omega)
    eq_err = np.abs(post - feq).max()

    force = 1e-3 * rng.normal(size=(200, 3))
    g = guo_term(rho, u, force, omega)
    guo_err = np.abs(g @ C - ((1 - omega / 2) * rho)[:, None] * force).max()
    ok = drift < 1e-12 and eq_err < 1e-14 and guo_err < 1e-13
    verdict(capsys, 5, ok, f"mass drift {drift:.1e}, collide(feq) {eq_err:.1e}, "
                           f"Guo moment {guo_err:.1e}")


# -- 6-8: demo aneurysm --------------------------------------------------------------

CASES = ("uncoiled", "va_15", "va_20", "va_25", "fr_25")


@pytest.fixture(scope="module")
def demo_runs():
    logging.getLogger("vanslbm").setLevel(logging.WARNING)
    out = {}
    for case in CASES:
        cfg = load_config(bundled_demo(case))
        setup = build(cfg)
        rep = run(cfg, setup=setup)
        assert not rep.blew_up, case
        sig = unpack_sym(setup.sim.state.sigma[setup.wall_cells])
        ws = wall_shear_stress(sig, np.arange(len(setup.wall_cells)), setup.wall_normals)
        tau_n = np.abs(np.sum(ws.tau * ws.normals, axis=1)).max() * cfg.scales.stress
        out[case] = dict(speed=rep.final["mean_speed"], max_wss=rep.final["max_wss"],
                         t=rep.final["t"], tau_n=tau_n)
    return out


def test_criterion_6_coiling_reduces_sac_speed(demo_runs, capsys):
    s = [demo_runs[c]["speed"] for c in ("uncoiled", "va_15", "va_20", "va_25")]
    reduction = 1 - s[3] / s[0]
    ok = all(a > b for a, b in zip(s, s[1:])) and reduction >= 0.30
    verdict(capsys, 6, ok, "sac mean speed [m/s] 0/15/20/25%: "
            + ", ".join(f"{x:.4e}" for x in s) + f"; reduction at 25% {reduction:.1%}")


def test_criterion_7_coiling_lowers_peak_wss(demo_runs, capsys):
    base = demo_runs["uncoiled"]["max_wss"]
    coiled = {c: demo_runs[c]["max_wss"] for c in CASES[1:]}
    tau_n = max(r["tau_n"] for r in demo_runs.values())
    ok = all(v < base for v in coiled.values()) and tau_n <= 1e-12
    verdict(capsys, 7, ok, f"peak sac-wall |tau| uncoiled {base:.4f} Pa, "
            + ", ".join(f"{c} {v:.4f}" for c, v in coiled.items())
            + f"; max |tau.n| {tau_n:.1e} Pa")


def test_criterion_8_modes_agree(demo_runs, capsys):
    fr, va = demo_runs["fr_25"]["speed"], demo_runs["va_25"]["speed"]
    diff = abs(va - fr) / fr
    verdict(capsys, 8, diff <= 0.25, f"sac mean speed FR {fr:.4e}, VA {va:.4e}, "
                                     f"relative difference {diff:.1%}")


# -- 9: determinism and restart ------------------------------------------------------

def test_criterion_9_restart_and_thread_count(tmp_path, capsys):
    logging.getLogger("vanslbm").setLevel(logging.WARNING)
    cfg = load_config(bundled_demo("va_25"))
    ref = build(cfg, threads=1)
    run(cfg, setup=ref, max_steps=400)

    half = build(cfg, threads=1)
    run(cfg, setup=half, max_steps=200)
    ck = str(tmp_path / "mid.ckpt")
    half.sim.save_checkpoint(ck)
    resumed = build(cfg, threads=1)
    run(cfg, setup=resumed, resume=ck, max_steps=200)
    restart_ok = np.array_equal(resumed.sim.f, ref.sim.f)

    threaded = build(cfg, threads=4)
    run(cfg, setup=threaded, max_steps=400)
    threads_ok = np.array_equal(threaded.sim.f, ref.sim.f) and \
        np.array_equal(threaded.sim.mu, ref.sim.mu)
    verdict(capsys, 9, restart_ok and threads_ok,
            f"restart bit-identical: {restart_ok}; 1 vs 4 workers bit-identical: {threads_ok}")
