# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled research-step kernel.

Operation-for-operation twin of ``_kernels_py.py``; built without FP
contraction so results match the fallback bit for bit.
"""
from libc.math cimport sqrt, acos, cos, pow, M_PI

NAME = "cython"

cdef double _TWO_PI_3 = 2.0 * M_PI / 3.0
cdef double _V_OVERFLOW = 1.0 / 2.220446049250313e-16


cdef inline void _eig_range(double a00, double a01, double a02, double a11,
                            double a12, double a22, double* lo, double* hi) noexcept nogil:
    cdef double p1 = a01 * a01 + a02 * a02 + a12 * a12
    cdef double q, d0, d1, d2, p2, p, b00, b11, b22, b01, b02, b12, det, r, phi
    if p1 == 0.0:
        lo[0] = a00
        if a11 < lo[0]:
            lo[0] = a11
        if a22 < lo[0]:
            lo[0] = a22
        hi[0] = a00
        if a11 > hi[0]:
            hi[0] = a11
        if a22 > hi[0]:
            hi[0] = a22
        return
    q = (a00 + a11 + a22) / 3.0
    d0 = a00 - q
    d1 = a11 - q
    d2 = a22 - q
    p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1
    p = sqrt(p2 / 6.0)
    b00 = d0 / p
    b11 = d1 / p
    b22 = d2 / p
    b01 = a01 / p
    b02 = a02 / p
    b12 = a12 / p
    det = (b00 * (b11 * b22 - b12 * b12)
           - b01 * (b01 * b22 - b12 * b02)
           + b02 * (b01 * b12 - b11 * b02))
    r = det / 2.0
    if r <= -1.0:
        phi = M_PI / 3.0
    elif r >= 1.0:
        phi = 0.0
    else:
        phi = acos(r) / 3.0
    hi[0] = q + 2.0 * p * cos(phi)
    lo[0] = q + 2.0 * p * cos(phi + _TWO_PI_3)


cdef inline void _solve(double a00, double a01, double a02, double a11, double a12,
                        double a22, double r0, double r1, double r2,
                        double* x) noexcept nogil:
    cdef double c00 = a11 * a22 - a12 * a12
    cdef double c01 = a02 * a12 - a01 * a22
    cdef double c02 = a01 * a12 - a02 * a11
    cdef double c11 = a00 * a22 - a02 * a02
    cdef double c12 = a01 * a02 - a00 * a12
    cdef double c22 = a00 * a11 - a01 * a01
    cdef double det = a00 * c00 + a01 * c01 + a02 * c02
    x[0] = (c00 * r0 + c01 * r1 + c02 * r2) / det
    x[1] = (c01 * r0 + c11 * r1 + c12 * r2) / det
    x[2] = (c02 * r0 + c12 * r1 + c22 * r2) / det


def sym3_eig_range(double a00, double a01, double a02, double a11, double a12, double a22):
    cdef double lo, hi
    _eig_range(a00, a01, a02, a11, a12, a22, &lo, &hi)
    return lo, hi


def sym3_solve(double a00, double a01, double a02, double a11, double a12, double a22,
               double r0, double r1, double r2):
    cdef double x[3]
    _solve(a00, a01, a02, a11, a12, a22, r0, r1, r2, x)
    return x[0], x[1], x[2]


def estimate(const double[:, ::1] bearings, const double[:, ::1] bases,
             const double[::1] centroid, const double[::1] fallback,
             double beta, double rho_hat, double eps, double cond_max,
             int n_iter, double[::1] residuals):
    """Closed-form reset followed by ``n_iter - 1`` ball-constrained Gauss-Newton steps.

    ``residuals`` (length ``n_iter``) receives ``|b - f(p)|`` at every iterate.
    Returns ``(px, py, pz, reset_ok, n_damped)``.
    """
    cdef Py_ssize_t n = bearings.shape[0]
    cdef Py_ssize_t i
    cdef int tau, n_damped = 0
    cdef bint reset_ok
    cdef double cx = centroid[0], cy = centroid[1], cz = centroid[2]
    cdef double a00, a01, a02, a11, a12, a22, r0, r1, r2, g0, g1, g2
    cdef double bx, by, bz, qx, qy, qz, s, p00, p01, p02, p11, p12, p22
    cdef double lo, hi, px, py, pz, dx, dy, dz, nd, nx, ny, nz
    cdef double ux, uy, uz, uu, q, sq, iq, isq, ex, ey, ez, res, w, ue, lam, tr, det3
    cdef double x[3]

    if residuals.shape[0] < n_iter:
        raise ValueError("residual buffer shorter than n_iter")

    with nogil:
        a00 = 0.0; a01 = 0.0; a02 = 0.0; a11 = 0.0; a12 = 0.0; a22 = 0.0
        r0 = 0.0; r1 = 0.0; r2 = 0.0
        for i in range(n):
            bx = bearings[i, 0]; by = bearings[i, 1]; bz = bearings[i, 2]
            qx = bases[i, 0]; qy = bases[i, 1]; qz = bases[i, 2]
            s = 1.0 / (eps + bx * bx + by * by + bz * bz)
            p00 = 1.0 - s * bx * bx
            p01 = -s * bx * by
            p02 = -s * bx * bz
            p11 = 1.0 - s * by * by
            p12 = -s * by * bz
            p22 = 1.0 - s * bz * bz
            a00 += p00
            a01 += p01
            a02 += p02
            a11 += p11
            a12 += p12
            a22 += p22
            r0 += p00 * qx + p01 * qy + p02 * qz
            r1 += p01 * qx + p11 * qy + p12 * qz
            r2 += p02 * qx + p12 * qy + p22 * qz
        _eig_range(a00, a01, a02, a11, a12, a22, &lo, &hi)
        if lo > 0.0 and hi <= cond_max * lo:
            _solve(a00, a01, a02, a11, a12, a22, r0, r1, r2, x)
            px = x[0]; py = x[1]; pz = x[2]
            reset_ok = True
        else:
            px = fallback[0]; py = fallback[1]; pz = fallback[2]
            reset_ok = False
        dx = px - cx
        dy = py - cy
        dz = pz - cz
        nd = sqrt(dx * dx + dy * dy + dz * dz)
        if nd > rho_hat:
            px = cx + dx / nd * rho_hat
            py = cy + dy / nd * rho_hat
            pz = cz + dz / nd * rho_hat

        for tau in range(n_iter):
            a00 = 0.0; a01 = 0.0; a02 = 0.0; a11 = 0.0; a12 = 0.0; a22 = 0.0
            g0 = 0.0; g1 = 0.0; g2 = 0.0
            res = 0.0
            for i in range(n):
                bx = bearings[i, 0]; by = bearings[i, 1]; bz = bearings[i, 2]
                qx = bases[i, 0]; qy = bases[i, 1]; qz = bases[i, 2]
                ux = px - qx
                uy = py - qy
                uz = pz - qz
                uu = ux * ux + uy * uy + uz * uz
                q = eps + uu
                sq = sqrt(q)
                iq = 1.0 / q
                isq = 1.0 / sq
                ex = bx - ux * isq
                ey = by - uy * isq
                ez = bz - uz * isq
                res += ex * ex + ey * ey + ez * ez
                w = (2.0 - uu * iq) * iq
                a00 += (1.0 - w * ux * ux) * iq
                a01 += (-w * ux * uy) * iq
                a02 += (-w * ux * uz) * iq
                a11 += (1.0 - w * uy * uy) * iq
                a12 += (-w * uy * uz) * iq
                a22 += (1.0 - w * uz * uz) * iq
                ue = (ux * ex + uy * ey + uz * ez) * iq
                g0 += (ex - ux * ue) * isq
                g1 += (ey - uy * ue) * isq
                g2 += (ez - uz * ue) * isq
            residuals[tau] = sqrt(res)
            if tau == n_iter - 1:
                break
            tr = a00 + a11 + a22
            det3 = (a00 * (a11 * a22 - a12 * a12)
                    - a01 * (a01 * a22 - a12 * a02)
                    + a02 * (a01 * a12 - a11 * a02))
            if det3 >= 1e-8 * tr * tr * tr:
                lo = 1.0
                hi = 1.0
            else:
                _eig_range(a00, a01, a02, a11, a12, a22, &lo, &hi)
            if lo < 1e-8 * hi:
                lam = 1e-6 * (a00 + a11 + a22) / 3.0
                a00 += lam
                a11 += lam
                a22 += lam
                n_damped += 1
            _solve(a00, a01, a02, a11, a12, a22, g0, g1, g2, x)
            nx = px + beta * x[0]
            ny = py + beta * x[1]
            nz = pz + beta * x[2]
            dx = nx - cx
            dy = ny - cy
            dz = nz - cz
            nd = sqrt(dx * dx + dy * dy + dz * dz)
            if nd > rho_hat:
                nx = cx + dx / nd * rho_hat
                ny = cy + dy / nd * rho_hat
                nz = cz + dz / nd * rho_hat
            px = nx
            py = ny
            pz = nz
    return px, py, pz, reset_ok, n_damped


def sense_es(const double[:, ::1] positions, const double[:, ::1] noise,
             const double[::1] tx_pos, const double[:, ::1] tx_att, double coef,
             bint upright, double r_min, double[:, ::1] grad, double[::1] z,
             double alpha, const double[::1] gvec, bint seed_z, double[::1] y_out):
    """Dipole readings at ``positions`` plus one ES filter update, in place.

    Returns the number of agents that hit the singularity.
    """
    cdef Py_ssize_t i, n = positions.shape[0]
    cdef int n_sing = 0
    cdef double tx0 = tx_pos[0], tx1 = tx_pos[1], tx2 = tx_pos[2]
    cdef double g0 = gvec[0], g1 = gvec[1], g2 = gvec[2]
    cdef double r_min2 = r_min * r_min, b = 1.0 - alpha
    cdef double dx, dy, dz, r2, r, scale, x3, h0, h1, h2, ex, ey, ez, m0, m1, m2
    cdef double v0, v1, v2, nv, y, eps
    with nogil:
        for i in range(n):
            dx = positions[i, 0] - tx0
            dy = positions[i, 1] - tx1
            dz = positions[i, 2] - tx2
            r2 = dx * dx + dy * dy + dz * dz
            if r2 <= r_min2:
                n_sing += 1
                y = 0.0
            else:
                r = sqrt(r2)
                scale = coef / (r2 * r2 * r)
                if upright:
                    x3 = 3.0 * dx
                    h0 = (2.0 * dx * dx - dy * dy - dz * dz) * scale
                    h1 = x3 * dy * scale
                    h2 = x3 * dz * scale
                else:
                    ex = tx_att[0, 0] * dx + tx_att[0, 1] * dy + tx_att[0, 2] * dz
                    ey = tx_att[1, 0] * dx + tx_att[1, 1] * dy + tx_att[1, 2] * dz
                    ez = tx_att[2, 0] * dx + tx_att[2, 1] * dy + tx_att[2, 2] * dz
                    m0 = 2.0 * ex * ex - ey * ey - ez * ez
                    x3 = 3.0 * ex
                    m1 = x3 * ey
                    m2 = x3 * ez
                    h0 = (m0 * tx_att[0, 0] + m1 * tx_att[1, 0] + m2 * tx_att[2, 0]) * scale
                    h1 = (m0 * tx_att[0, 1] + m1 * tx_att[1, 1] + m2 * tx_att[2, 1]) * scale
                    h2 = (m0 * tx_att[0, 2] + m1 * tx_att[1, 2] + m2 * tx_att[2, 2]) * scale
                v0 = h0 + noise[i, 0]
                v1 = h1 + noise[i, 1]
                v2 = h2 + noise[i, 2]
                nv = sqrt(v0 * v0 + v1 * v1 + v2 * v2)
                if nv == 0.0 or nv > _V_OVERFLOW:
                    y = 0.0
                else:
                    y = pow(nv, -2.0 / 3.0)
            y_out[i] = y
            if seed_z:
                z[i] = y
            eps = y - z[i]
            grad[i, 0] = b * grad[i, 0] + alpha * (eps * g0)
            grad[i, 1] = b * grad[i, 1] + alpha * (eps * g1)
            grad[i, 2] = b * grad[i, 2] + alpha * (eps * g2)
            z[i] = z[i] + alpha * eps
    return n_sing
