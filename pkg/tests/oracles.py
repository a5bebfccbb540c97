"""Brute-force reference minimisers used as test oracles."""
import itertools

import numpy as np


def grid_refine(cost, centre, half_width, tol=1e-7, pts=21, dims=3):
    """Minimise ``cost`` (vectorised over rows) by repeated grid search with zoom."""
    centre = np.asarray(centre, dtype=float)
    h = float(half_width)
    axes_mask = np.array([1.0] * dims + [0.0] * (3 - dims))
    while h > tol:
        lin = np.linspace(-h, h, pts)
        offs = np.array(list(itertools.product(lin, lin, lin if dims == 3 else [0.0])))
        cand = centre + offs * axes_mask
        centre = cand[np.argmin(cost(cand))]
        h *= 4.0 / (pts - 1)
    return centre


def point_to_line_costs(P, bearings, bases, eps=0.0):
    """Sum over i of (q_i - p)^T Pr(b_i) (q_i - p) for each row p of P.

    With ``eps = 0`` this is the sum of squared distances to the lines
    ``q_i + s b_i``. Evaluated as perpendicular plus (weighted) axial parts to
    avoid cancellation.
    """
    total = np.zeros(len(P))
    for b, q in zip(bearings, bases):
        bb = b @ b
        u = b / np.sqrt(bb)
        d = q - P
        along = d @ u
        perp = d - along[:, None] * u
        total += np.einsum("ij,ij->i", perp, perp) + along**2 * (eps / (eps + bb))
    return total


def bearing_residual_costs(P, bearings, bases, eps):
    total = np.zeros(len(P))
    for b, q in zip(bearings, bases):
        u = P - q
        f = u / np.sqrt(eps + np.einsum("ij,ij->i", u, u))[:, None]
        r = b - f
        total += np.einsum("ij,ij->i", r, r)
    return total
