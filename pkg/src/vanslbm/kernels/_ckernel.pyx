# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fused collide-stream step, OpenMP-parallel over cells.

The per-cell body is generated (see ``tools/gen_ckernel.py``) with lattice
components folded into signed sums. Every cell writes only its own 27
destination slots, so results do not depend on the thread count.
"""
import numpy as np

from cython.parallel cimport prange
from libc.math cimport sqrt, pow, isfinite

NAME = "cython"


cdef struct Par:
    double gx, gy, gz
    double mu0, mu_inf, lam, n, a
    int newtonian
    double omega_min, omega_max
    int anisotropic
    double ai[9]
    double ah[9]
    double fp_tol
    int fp_max_iter
    int use_prev_u


def _init_lattice(c, w):
    # ordering is baked into the generated body; check it matches
    from ..lattice import ORDERING_TAG
    assert ORDERING_TAG == "D3Q27-rfec-v1"


cdef inline void _solve3(double* X, double* b, double* x) noexcept nogil:
    cdef double det = (X[0] * (X[4] * X[8] - X[5] * X[7])
                       - X[1] * (X[3] * X[8] - X[5] * X[6])
                       + X[2] * (X[3] * X[7] - X[4] * X[6]))
    cdef double inv = 1.0 / det
    x[0] = inv * (b[0] * (X[4] * X[8] - X[5] * X[7]) - X[1] * (b[1] * X[8] - X[5] * b[2]) + X[2] * (b[1] * X[7] - X[4] * b[2]))
    x[1] = inv * (X[0] * (b[1] * X[8] - X[5] * b[2]) - b[0] * (X[3] * X[8] - X[5] * X[6]) + X[2] * (X[3] * b[2] - b[1] * X[6]))
    x[2] = inv * (X[0] * (X[4] * b[2] - b[1] * X[7]) - X[1] * (X[3] * b[2] - b[1] * X[6]) + b[0] * (X[3] * X[7] - X[4] * X[6]))


cdef inline void _velocity(double vx, double vy, double vz, double phi, double darcy,
                           double forch, double* uprev, Par* p,
                           double* ux, double* uy, double* uz,
                           double* fx, double* fy, double* fz) noexcept nogil:
    cdef double c0, c1, vn, s, speed, inc
    cdef double X[9]
    cdef double bv[3]
    cdef double xn[3]
    cdef double x, y, z
    cdef int i, it
    if darcy == 0.0 and forch == 0.0:
        ux[0] = vx; uy[0] = vy; uz[0] = vz
        fx[0] = p.gx; fy[0] = p.gy; fz[0] = p.gz
        return
    if not p.anisotropic:
        c0 = 0.5 + darcy / (4 * phi)
        c1 = forch / (2 * phi)
        vn = sqrt(vx * vx + vy * vy + vz * vz)
        s = 1.0 / (c0 + sqrt(c0 * c0 + c1 * vn))
        x = vx * s; y = vy * s; z = vz * s
        speed = sqrt(x * x + y * y + z * z)
        ux[0] = x; uy[0] = y; uz[0] = z
        fx[0] = p.gx - (darcy + forch * speed) * x
        fy[0] = p.gy - (darcy + forch * speed) * y
        fz[0] = p.gz - (darcy + forch * speed) * z
        return
    if p.use_prev_u:
        x = uprev[0]; y = uprev[1]; z = uprev[2]
    else:
        x = vx; y = vy; z = vz
    bv[0] = vx; bv[1] = vy; bv[2] = vz
    for it in range(p.fp_max_iter):
        speed = sqrt(x * x + y * y + z * z)
        for i in range(9):
            X[i] = darcy / (2 * phi) * p.ai[i] + forch / (2 * phi) * speed * p.ah[i]
        X[0] += 1.0
        X[4] += 1.0
        X[8] += 1.0
        _solve3(X, bv, xn)
        inc = sqrt((xn[0] - x) ** 2 + (xn[1] - y) ** 2 + (xn[2] - z) ** 2)
        x = xn[0]; y = xn[1]; z = xn[2]
        if inc <= p.fp_tol:
            break
    speed = sqrt(x * x + y * y + z * z)
    ux[0] = x; uy[0] = y; uz[0] = z
    fx[0] = p.gx - darcy * (p.ai[0] * x + p.ai[1] * y + p.ai[2] * z) - forch * speed * (p.ah[0] * x + p.ah[1] * y + p.ah[2] * z)
    fy[0] = p.gy - darcy * (p.ai[3] * x + p.ai[4] * y + p.ai[5] * z) - forch * speed * (p.ah[3] * x + p.ah[4] * y + p.ah[5] * z)
    fz[0] = p.gz - darcy * (p.ai[6] * x + p.ai[7] * y + p.ai[8] * z) - forch * speed * (p.ah[6] * x + p.ah[7] * y + p.ah[8] * z)


cdef inline double _relax(double rho, double sxx, double syy, double szz, double sxy,
                          double sxz, double syz, double* mu, Par* p) noexcept nogil:
    """Update the cell viscosity in place and return the new relaxation rate."""
    cdef double r = rho / 3.0, m, gamma, omega
    if p.newtonian:
        m = p.mu0
    else:
        gamma = sqrt(sxx * sxx + syy * syy + szz * szz
                     + 2.0 * (sxy * sxy + sxz * sxz + syz * syz)) / mu[0]
        m = p.mu_inf + (p.mu0 - p.mu_inf) * pow(1.0 + pow(p.lam * gamma, p.a), (p.n - 1.0) / p.a)
    omega = 2.0 * r / (2.0 * m + r)
    if omega < p.omega_min:
        omega = p.omega_min
        m = r * (1.0 / omega - 0.5)
    elif omega > p.omega_max:
        omega = p.omega_max
        m = r * (1.0 / omega - 0.5)
    mu[0] = m
    return omega


include "_cell27.pxi"


def step(fr_arr, fw_arr, geo, st, p, int threads=1, bint use_prev_u=True, trace=None):
    """One fused step. Returns ``(n_bad, first_bad_cell, 0)``."""
    cdef const double[:, ::1] fr = fr_arr
    cdef double[:, ::1] fwv = fw_arr
    cdef const double[::1] phi = geo.phi
    cdef const double[::1] darcy = geo.darcy
    cdef const double[::1] forch = geo.forch
    cdef const unsigned char[::1] graded = geo.graded
    cdef const long[:, ::1] nb = geo.nb
    cdef const long[:, ::1] dest = geo.dest
    cdef double[::1] mu = st.mu
    cdef double[::1] om = st.omega
    cdef double[:, ::1] u = st.u
    cdef double[::1] rho = st.rho
    cdef double[:, ::1] sig = st.sigma
    cdef Par par
    cdef int i
    par.gx, par.gy, par.gz = p.body_accel
    rh = p.rheology
    par.mu0 = rh.mu0
    par.mu_inf = rh.mu_inf
    par.lam = rh.lam
    par.n = rh.n
    par.a = rh.a
    par.newtonian = rh.newtonian
    par.omega_min = rh.omega_min
    par.omega_max = rh.omega_max
    par.anisotropic = p.anisotropic
    ai = np.ascontiguousarray(p.a_inv, dtype=np.float64).ravel()
    ah = np.ascontiguousarray(p.a_inv_sqrt, dtype=np.float64).ravel()
    for i in range(9):
        par.ai[i] = ai[i]
        par.ah[i] = ah[i]
    par.fp_tol = p.fp_tol
    par.fp_max_iter = p.fp_max_iter
    par.use_prev_u = use_prev_u

    cdef Py_ssize_t n = phi.shape[0], c
    cdef int nthreads = max(1, threads)
    if n == 0:
        return 0, -1, 0
    flags = np.zeros(n, dtype=np.int8)
    cdef signed char[::1] fl = flags
    cdef const double* frp = &fr[0, 0]
    cdef double* fw = &fwv[0, 0]
    cdef const double* php = &phi[0]
    cdef const double* dap = &darcy[0]
    cdef const double* fop = &forch[0]
    cdef const unsigned char* grp = &graded[0]
    cdef const long* nbp = &nb[0, 0]
    cdef const long* dep = &dest[0, 0]
    cdef double* mup = &mu[0]
    cdef double* omp = &om[0]
    cdef double* up = &u[0, 0]
    cdef double* rhp = &rho[0]
    cdef double* sip = &sig[0, 0]
    for c in prange(n, nogil=True, schedule="static", num_threads=nthreads):
        fl[c] = <signed char>_cell(c, frp, fw, php, dap, fop, grp, nbp, dep,
                                   mup, omp, up, rhp, sip, &par)
    bad = np.flatnonzero(flags)
    return int(bad.size), (int(bad[0]) if bad.size else -1), 0
