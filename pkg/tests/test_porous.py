import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from vanslbm.porous import (CellDrag, NonConvergence, PorousClosure, PureFluidCell, cell_drag,
                            drag_force, ergun_cf, implicit_residual, kozeny_carman_k,
                            solve_velocity_anisotropic, solve_velocity_isotropic,
                            spd_inverse_sqrt)

D_P = 1.25e-3


def test_kozeny_carman_reference_value():
    assert kozeny_carman_k(0.5, D_P) == pytest.approx(5.208333333333333e-9, rel=1e-14)


def test_kozeny_carman_vanishes_at_zero_porosity():
    phis = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    k = kozeny_carman_k(phis, D_P)
    assert np.all(np.diff(k) < 0) and np.all(k > 0)


def test_kozeny_carman_pure_fluid_signalled():
    with pytest.raises(PureFluidCell):
        kozeny_carman_k(1.0, D_P)


def test_pure_fluid_bypass_threshold():
    cl = PorousClosure()
    drag = cell_drag(np.array([0.999999, 1.0 - 1e-10, 1.0]), cl)
    assert np.isfinite(drag.k[0])
    assert np.all(np.isinf(drag.k[1:]))
    f = drag_force(np.ones((3, 3)), drag, nu=1.0)
    assert np.all(f[1:] == 0.0)


def test_ergun_reference_values():
    assert ergun_cf(1.0) == pytest.approx(0.142886901662352056, rel=1e-14)
    assert ergun_cf(0.5) == pytest.approx(0.404145188432738035, rel=1e-14)
    with pytest.raises(ValueError):
        ergun_cf(0.0)


def test_closures_monotone_on_grid():
    phi = np.linspace(0.01, 0.99, 200)
    assert np.all(np.diff(kozeny_carman_k(phi, D_P)) > 0)
    assert np.all(np.diff(ergun_cf(phi)) < 0)


def test_closure_validation():
    with pytest.raises(ValueError):
        PorousClosure(d_p=0)
    with pytest.raises(ValueError):
        PorousClosure(phi_min=0.5, phi_pure_fluid_threshold=0.4)


def test_cell_drag_clamps_floor():
    drag = cell_drag(np.array([0.0, 0.01]), PorousClosure(phi_min=0.05))
    assert np.all(drag.phi == 0.05)


vec = st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3).map(np.array)
phis = st.floats(0.05, 0.99)
perms = st.floats(1e-3, 1e3)


def _cell(phi, k):
    return CellDrag(k=np.array(k), c_f=np.array(ergun_cf(phi)), phi=np.array(phi))


@given(vec, phis, perms, st.floats(1e-4, 1.0))
def test_drag_is_dissipative(u, phi, k, nu):
    f = drag_force(u, _cell(phi, k), nu)
    assert f @ u <= 1e-15


def test_drag_zero_velocity():
    assert np.all(drag_force(np.zeros(3), _cell(0.5, 1.0), 0.1) == 0)


@given(vec, phis, perms, st.floats(1e-4, 1.0))
def test_isotropic_solve_residual(v, phi, k, nu):
    cell = _cell(phi, k)
    u = solve_velocity_isotropic(v, cell, nu)
    r = implicit_residual(u, v, cell, nu)
    scale = max(np.linalg.norm(v), 1e-300)
    assert np.linalg.norm(r) <= 1e-12 * scale
    # parallel to v and never faster
    assert np.linalg.norm(np.cross(u, v)) <= 1e-13 * scale * scale + 1e-300
    assert np.linalg.norm(u) <= np.linalg.norm(v) * (1 + 1e-15)


def test_isotropic_trivial_cases():
    assert np.all(solve_velocity_isotropic(np.zeros(3), _cell(0.5, 1.0), 0.1) == 0)
    pure = CellDrag(k=np.array(np.inf), c_f=np.array(ergun_cf(1.0)), phi=np.array(1.0))
    v = np.array([0.01, -0.02, 0.03])
    assert np.array_equal(solve_velocity_isotropic(v, pure, 0.1), v)


@settings(max_examples=50)
@given(vec, phis, perms, st.integers(0, 2 ** 31))
def test_isotropic_rotation_equivariant(v, phi, k, seed):
    R = Rotation.random(random_state=seed).as_matrix()
    cell = _cell(phi, k)
    a = solve_velocity_isotropic(R @ v, cell, 0.05)
    b = R @ solve_velocity_isotropic(v, cell, 0.05)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-15)


def test_anisotropic_matches_isotropic_scalar_tensor(rng):
    n = 500
    v = rng.normal(size=(n, 3)) * 0.05
    phi = rng.uniform(0.1, 0.99, n)
    k = 10 ** rng.uniform(-1, 2, n)
    nu = 0.05
    cf = ergun_cf(phi)
    K = k[:, None, None] * np.eye(3)
    ua = solve_velocity_anisotropic(v, K, phi, nu, cf)
    ui = solve_velocity_isotropic(v, _cell(phi, k), nu)
    rel = np.linalg.norm(ua - ui, axis=1) / np.linalg.norm(ui, axis=1)
    assert rel.max() < 1e-10


def test_anisotropic_zero_input_one_iteration():
    hist = []
    u = solve_velocity_anisotropic(np.zeros(3), np.eye(3), 0.5, 0.1, 0.4, history=hist)
    assert np.all(u == 0) and len(hist) == 1


def _random_spd(rng):
    A = rng.normal(size=(3, 3))
    return A @ A.T + 0.2 * np.eye(3)


def test_anisotropic_contraction_on_random_spd(rng):
    for _ in range(50):
        K = _random_spd(rng)
        v = rng.normal(size=3) * 0.1
        hist = []
        solve_velocity_anisotropic(v, K, rng.uniform(0.1, 0.99), 0.1, 0.4, u_init=np.zeros(3),
                                   history=hist)
        norms = np.array([h[0] for h in hist]).ravel()
        incs = np.array([h[1] for h in hist]).ravel()
        assert np.all(norms <= np.linalg.norm(v) * (1 + 1e-14))
        nz = incs[incs > 1e-15]
        assert np.all(np.diff(nz) < 0)


def test_anisotropic_errors():
    with pytest.raises(ValueError):
        spd_inverse_sqrt(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        spd_inverse_sqrt(np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(NonConvergence) as exc:
        solve_velocity_anisotropic(np.array([1.0, 0, 0]), np.eye(3) * 1e-4, 0.5, 1.0, 0.4,
                                   tol=1e-300, max_iter=3)
    assert exc.value.iterations == 3 and exc.value.residual > 0


def test_inverse_sqrt_consistency(rng):
    K = _random_spd(rng)
    kinv, kmh = spd_inverse_sqrt(K)
    assert np.allclose(kinv @ K, np.eye(3), atol=1e-12)
    assert np.allclose(kmh @ kmh, kinv, atol=1e-12)
    assert np.allclose(kmh, kmh.T, atol=1e-14)
