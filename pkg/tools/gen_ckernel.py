"""Emit the unrolled D3Q27 cell update included by ``_ckernel.pyx``.

Multiplications by lattice components (always -1, 0 or 1) are folded into
signed sums. Run from the repository root after changing the update:

    python tools/gen_ckernel.py > src/vanslbm/kernels/_cell27.pxi
"""
import sys
from fractions import Fraction

sys.path.insert(0, "src")
from vanslbm.lattice import d3q27  # noqa: E402

LAT = d3q27()
V = LAT.velocities
W = LAT.weights


def signed_sum(terms):
    """terms: list of (sign, name). Returns a C expression."""
    if not terms:
        return "0.0"
    out = ""
    for k, (s, name) in enumerate(terms):
        if k == 0:
            out = name if s > 0 else f"-{name}"
        else:
            out += f" + {name}" if s > 0 else f" - {name}"
    return out


def lin(vec, names):
    return signed_sum([(c, n) for c, n in zip(vec, names) if c != 0])


def weight(i):
    w = W[i]
    return f"({w.numerator}.0 / {w.denominator}.0)"


def main():
    L = []
    emit = L.append
    emit("# generated by tools/gen_ckernel.py; do not edit")
    emit("cdef inline int _cell(Py_ssize_t c, const double* fr, double* fw,")
    emit("                      const double* phi_a, const double* darcy_a, const double* forch_a,")
    emit("                      const unsigned char* graded, const long* nb, const long* dest,")
    emit("                      double* mu_a, double* om_a, double* u_a,")
    emit("                      double* rho_a, double* sig_a, Par* p) noexcept nogil:")
    emit("    cdef const double* fc = fr + 27 * c")
    emit("    cdef const long* dc = dest + 27 * c")
    emit("    cdef const long* nc = nb + 27 * c")
    for i in range(27):
        emit(f"    cdef double f{i} = fc[{i}]")
    emit("    cdef double m0 = " + " + ".join(f"f{i}" for i in range(27)))
    for ax, name in enumerate("xyz"):
        emit(f"    cdef double j{name} = " + signed_sum([(v[ax], f"f{i}") for i, v in enumerate(V) if v[ax]]))
    emit("""    cdef int bad = 0
    if not (m0 > 1e-12):
        bad = 1
        m0 = 1.0
    cdef double phi = phi_a[c]
    cdef double rho = m0 / phi
    cdef double vx = jx / m0 + p.gx / (2 * phi)
    cdef double vy = jy / m0 + p.gy / (2 * phi)
    cdef double vz = jz / m0 + p.gz / (2 * phi)
    cdef double ux, uy, uz, fx, fy, fz
    _velocity(vx, vy, vz, phi, darcy_a[c], forch_a[c], u_a + 3 * c, p,
              &ux, &uy, &uz, &fx, &fy, &fz)
    cdef double uu = ux * ux + uy * uy + uz * uz
    cdef double pref = phi * rho
    cdef double base = 1.0 - 1.5 * uu
    cdef double cu, e""")
    for i, v in enumerate(V):
        cu = lin(v, ["ux", "uy", "uz"]) or "0.0"
        if cu == "0.0":
            emit(f"    cdef double d{i} = f{i} - {weight(i)} * pref * base")
        else:
            emit(f"    cu = {cu}")
            emit(f"    cdef double d{i} = f{i} - {weight(i)} * pref * (base + 3.0 * cu + 4.5 * cu * cu)")
    pairs = [("xx", 0, 0), ("yy", 1, 1), ("zz", 2, 2), ("xy", 0, 1), ("xz", 0, 2), ("yz", 1, 2)]
    for name, a, b in pairs:
        emit(f"    cdef double p{name} = " + signed_sum(
            [(v[a] * v[b], f"d{i}") for i, v in enumerate(V) if v[a] * v[b]]))
    emit("""    cdef double sc = 0.5 * om_a[c] - 1.0
    cdef double sxx = sc * (pxx + rho * fx * ux)
    cdef double syy = sc * (pyy + rho * fy * uy)
    cdef double szz = sc * (pzz + rho * fz * uz)
    cdef double sxy = sc * (pxy + 0.5 * rho * (fx * uy + ux * fy))
    cdef double sxz = sc * (pxz + 0.5 * rho * (fx * uz + ux * fz))
    cdef double syz = sc * (pyz + 0.5 * rho * (fy * uz + uy * fz))
    cdef double omega = _relax(rho, sxx, syy, szz, sxy, sxz, syz, mu_a + c, p)
    cdef double g1 = rho * (1.0 - 0.5 * omega)
    cdef double ufd = ux * fx + uy * fy + uz * fz
    cdef double cf, out, tot = 0.0
    cdef int gr = graded[c]""")
    for i, v in enumerate(V):
        cu = lin(v, ["ux", "uy", "uz"])
        cf = lin(v, ["fx", "fy", "fz"])
        w = weight(i)
        if cu:
            emit(f"    cu = {cu}")
            emit(f"    cf = {cf}")
            emit(f"    out = f{i} + {w} * g1 * (3.0 * (cf - ufd) + 9.0 * cu * cf) - omega * d{i}")
        else:
            emit(f"    out = f{i} - {w} * g1 * 3.0 * ufd - omega * d{i}")
        emit("    if gr:")
        emit(f"        out = out + {w} * rho * (phi_a[nc[{i}]] - phi)")
        emit("    tot = tot + out")
        emit(f"    fw[dc[{i}]] = out")
    emit("""    if not isfinite(tot):
        bad = 1
    rho_a[c] = rho
    u_a[3 * c] = ux
    u_a[3 * c + 1] = uy
    u_a[3 * c + 2] = uz
    sig_a[6 * c] = sxx
    sig_a[6 * c + 1] = syy
    sig_a[6 * c + 2] = szz
    sig_a[6 * c + 3] = sxy
    sig_a[6 * c + 4] = sxz
    sig_a[6 * c + 5] = syz
    om_a[c] = omega
    return bad""")
    print("\n".join(L))


if __name__ == "__main__":
    main()
