"""Pure-Python fallback for the compiled research-step kernel.

Mirrors ``_kernels.pyx`` operation for operation so both backends produce
bit-identical floating-point results. Keep the two files in lockstep.
"""
import math

NAME = "python"

_TWO_PI_3 = 2.0 * math.pi / 3.0
_V_OVERFLOW = 1.0 / 2.220446049250313e-16


def sym3_eig_range(a00, a01, a02, a11, a12, a22):
    """(smallest, largest) eigenvalue of a symmetric 3x3 matrix, closed form."""
    p1 = a01 * a01 + a02 * a02 + a12 * a12
    if p1 == 0.0:
        return min(a00, a11, a22), max(a00, a11, a22)
    q = (a00 + a11 + a22) / 3.0
    d0 = a00 - q
    d1 = a11 - q
    d2 = a22 - q
    p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
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
        phi = math.pi / 3.0
    elif r >= 1.0:
        phi = 0.0
    else:
        phi = math.acos(r) / 3.0
    hi = q + 2.0 * p * math.cos(phi)
    lo = q + 2.0 * p * math.cos(phi + _TWO_PI_3)
    return lo, hi


def sym3_solve(a00, a01, a02, a11, a12, a22, r0, r1, r2):
    c00 = a11 * a22 - a12 * a12
    c01 = a02 * a12 - a01 * a22
    c02 = a01 * a12 - a02 * a11
    c11 = a00 * a22 - a02 * a02
    c12 = a01 * a02 - a00 * a12
    c22 = a00 * a11 - a01 * a01
    det = a00 * c00 + a01 * c01 + a02 * c02
    return ((c00 * r0 + c01 * r1 + c02 * r2) / det,
            (c01 * r0 + c11 * r1 + c12 * r2) / det,
            (c02 * r0 + c12 * r1 + c22 * r2) / det)


def estimate(bearings, bases, centroid, fallback, beta, rho_hat, eps, cond_max,
             n_iter, residuals):
    """Closed-form reset followed by ``n_iter - 1`` ball-constrained Gauss-Newton steps.

    ``residuals`` (length ``n_iter``) receives ``|b - f(p)|`` at every iterate.
    Returns ``(px, py, pz, reset_ok, n_damped)``.
    """
    if len(residuals) < n_iter:
        raise ValueError("residual buffer shorter than n_iter")
    B = bearings.tolist()
    Q = bases.tolist()
    n = len(B)
    cx, cy, cz = float(centroid[0]), float(centroid[1]), float(centroid[2])

    a00 = a01 = a02 = a11 = a12 = a22 = 0.0
    r0 = r1 = r2 = 0.0
    for i in range(n):
        bx, by, bz = B[i]
        qx, qy, qz = Q[i]
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
    lo, hi = sym3_eig_range(a00, a01, a02, a11, a12, a22)
    if lo > 0.0 and hi <= cond_max * lo:
        px, py, pz = sym3_solve(a00, a01, a02, a11, a12, a22, r0, r1, r2)
        reset_ok = True
    else:
        px, py, pz = float(fallback[0]), float(fallback[1]), float(fallback[2])
        reset_ok = False
    dx = px - cx
    dy = py - cy
    dz = pz - cz
    nd = math.sqrt(dx * dx + dy * dy + dz * dz)
    if nd > rho_hat:
        px = cx + dx / nd * rho_hat
        py = cy + dy / nd * rho_hat
        pz = cz + dz / nd * rho_hat

    n_damped = 0
    for tau in range(n_iter):
        a00 = a01 = a02 = a11 = a12 = a22 = 0.0
        g0 = g1 = g2 = 0.0
        res = 0.0
        for i in range(n):
            bx, by, bz = B[i]
            qx, qy, qz = Q[i]
            ux = px - qx
            uy = py - qy
            uz = pz - qz
            uu = ux * ux + uy * uy + uz * uz
            q = eps + uu
            sq = math.sqrt(q)
            iq = 1.0 / q
            isq = 1.0 / sq
            ex = bx - ux * isq
            ey = by - uy * isq
            ez = bz - uz * isq
            res += ex * ex + ey * ey + ez * ez
            # F_i = Pr_i / sq with Pr_i = I - u u^T / q, so F_i^2 = (I - w u u^T) / q
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
        residuals[tau] = math.sqrt(res)
        if tau == n_iter - 1:
            break
        # det / tr^2 bounds the smallest eigenvalue from below: skip the
        # eigen-solve when that alone rules out damping
        tr = a00 + a11 + a22
        det3 = (a00 * (a11 * a22 - a12 * a12)
                - a01 * (a01 * a22 - a12 * a02)
                + a02 * (a01 * a12 - a11 * a02))
        if det3 >= 1e-8 * tr * tr * tr:
            lo = hi = 1.0
        else:
            lo, hi = sym3_eig_range(a00, a01, a02, a11, a12, a22)
        if lo < 1e-8 * hi:
            lam = 1e-6 * (a00 + a11 + a22) / 3.0
            a00 += lam
            a11 += lam
            a22 += lam
            n_damped += 1
        sx, sy, sz = sym3_solve(a00, a01, a02, a11, a12, a22, g0, g1, g2)
        nx = px + beta * sx
        ny = py + beta * sy
        nz = pz + beta * sz
        dx = nx - cx
        dy = ny - cy
        dz = nz - cz
        nd = math.sqrt(dx * dx + dy * dy + dz * dz)
        if nd > rho_hat:
            nx = cx + dx / nd * rho_hat
            ny = cy + dy / nd * rho_hat
            nz = cz + dz / nd * rho_hat
        px = nx
        py = ny
        pz = nz
    return px, py, pz, reset_ok, n_damped


def sense_es(positions, noise, tx_pos, tx_att, coef, upright, r_min, grad, z, alpha,
             gvec, seed_z, y_out):
    """Dipole readings at ``positions`` plus one ES filter update, in place.

    ``coef`` is ``power / (4 pi)``. Agents within ``r_min`` of the source, or
    whose noisy field has zero/overflowing norm, read ``y = 0``. Returns the
    number of agents that hit the singularity.
    """
    P = positions.tolist()
    V = noise.tolist()
    tx0, tx1, tx2 = float(tx_pos[0]), float(tx_pos[1]), float(tx_pos[2])
    R = tx_att.tolist()
    g0, g1, g2 = float(gvec[0]), float(gvec[1]), float(gvec[2])
    r_min2 = r_min * r_min
    b = 1.0 - alpha
    n_sing = 0
    for i in range(len(P)):
        dx = P[i][0] - tx0
        dy = P[i][1] - tx1
        dz = P[i][2] - tx2
        r2 = dx * dx + dy * dy + dz * dz
        if r2 <= r_min2:
            n_sing += 1
            y = 0.0
        else:
            r = math.sqrt(r2)
            scale = coef / (r2 * r2 * r)
            if upright:
                x3 = 3.0 * dx
                h0 = (2.0 * dx * dx - dy * dy - dz * dz) * scale
                h1 = x3 * dy * scale
                h2 = x3 * dz * scale
            else:
                ex = R[0][0] * dx + R[0][1] * dy + R[0][2] * dz
                ey = R[1][0] * dx + R[1][1] * dy + R[1][2] * dz
                ez = R[2][0] * dx + R[2][1] * dy + R[2][2] * dz
                m0 = 2.0 * ex * ex - ey * ey - ez * ez
                x3 = 3.0 * ex
                m1 = x3 * ey
                m2 = x3 * ez
                h0 = (m0 * R[0][0] + m1 * R[1][0] + m2 * R[2][0]) * scale
                h1 = (m0 * R[0][1] + m1 * R[1][1] + m2 * R[2][1]) * scale
                h2 = (m0 * R[0][2] + m1 * R[1][2] + m2 * R[2][2]) * scale
            v0 = h0 + V[i][0]
            v1 = h1 + V[i][1]
            v2 = h2 + V[i][2]
            nv = math.sqrt(v0 * v0 + v1 * v1 + v2 * v2)
            if nv == 0.0 or nv > _V_OVERFLOW:
                y = 0.0
            else:
                y = nv ** (-2.0 / 3.0)
        y_out[i] = y
        if seed_z:
            z[i] = y
        eps = y - z[i]
        grad[i, 0] = b * grad[i, 0] + alpha * (eps * g0)
        grad[i, 1] = b * grad[i, 1] + alpha * (eps * g1)
        grad[i, 2] = b * grad[i, 2] + alpha * (eps * g2)
        z[i] = z[i] + alpha * eps
    return n_sing
