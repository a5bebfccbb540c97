"""Centralised bearing-only estimator of the transmitter position.

Every research step the estimate is reset to the closed-form point nearest
(in the least-squares sense) to the bearing lines, then refined by ``N - 1``
Gauss-Newton iterations on the stacked unit-vector residual
``b - f(p)``, each projected back onto the ball of radius ``rho_hat`` around
the formation centroid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._backend import kernels
from .es import EPS_REG

COND_MAX = 1e5
# smallest/largest eigenvalue ratio below which the normal equations are damped
DAMPING_TRIGGER = 1e-8
DAMPING_SCALE = 1e-6


class DegenerateBearings(ValueError):
    """Bearing lines are (nearly) parallel; the reset point is undefined."""


@dataclass(frozen=True)
class EstimatorState:
    p_hat: np.ndarray
    beta: float = 0.5
    rho_hat: float = 50.0
    eps_reg: float = EPS_REG

    def __post_init__(self):
        object.__setattr__(self, "p_hat", np.asarray(self.p_hat, dtype=float).reshape(3))
        if not (self.beta > 0 and self.rho_hat > 0 and self.eps_reg > 0):
            raise ValueError("beta, rho_hat and eps_reg must be positive")


@dataclass(frozen=True)
class BearingSet:
    bearings: np.ndarray
    bases: np.ndarray

    def __post_init__(self):
        b = np.ascontiguousarray(self.bearings, dtype=float)
        q = np.ascontiguousarray(self.bases, dtype=float)
        if b.ndim != 2 or b.shape[1] != 3 or b.shape != q.shape:
            raise ValueError("bearings and bases must both be (n, 3)")
        if b.shape[0] < 2:
            raise ValueError("need at least two agents")
        object.__setattr__(self, "bearings", b)
        object.__setattr__(self, "bases", q)

    @property
    def n(self) -> int:
        return self.bearings.shape[0]

    @property
    def stacked(self) -> np.ndarray:
        return self.bearings.reshape(-1)


@dataclass(frozen=True)
class ResearchStepEstimate:
    state: EstimatorState
    residuals: np.ndarray
    reset_ok: bool
    n_damped: int

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1])


def unit_stack(p, bases, eps_reg: float = EPS_REG) -> np.ndarray:
    """Stacked regularised unit vectors from each base toward ``p`` (length 3n)."""
    u = np.asarray(p, dtype=float) - np.asarray(bases, dtype=float)
    return (u / np.sqrt(eps_reg + np.sum(u * u, axis=1, keepdims=True))).reshape(-1)


def projector(u, eps_reg: float = EPS_REG) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.eye(3) - np.outer(u, u) / (eps_reg + u @ u)


def jacobian(p_hat, bases, eps_reg: float = EPS_REG) -> np.ndarray:
    """(3n, 3) Jacobian of :func:`unit_stack` with respect to ``p``."""
    blocks = []
    for base in np.asarray(bases, dtype=float):
        u = np.asarray(p_hat, dtype=float) - base
        blocks.append(projector(u, eps_reg) / math.sqrt(eps_reg + u @ u))
    return np.vstack(blocks)


def point_to_line_cost(p, bearing_set: BearingSet, eps_reg: float = EPS_REG) -> float:
    """``1/2 sum (q_i - p)^T Pr(b_i) (q_i - p)``; minimised by :func:`ls_reset`."""
    total = 0.0
    for b, q in zip(bearing_set.bearings, bearing_set.bases):
        d = q - np.asarray(p, dtype=float)
        total += 0.5 * d @ projector(b, eps_reg) @ d
    return float(total)


def ls_reset(bearing_set: BearingSet, eps_reg: float = EPS_REG,
             cond_max: float = COND_MAX) -> np.ndarray:
    A = np.zeros((3, 3))
    r = np.zeros(3)
    for b, q in zip(bearing_set.bearings, bearing_set.bases):
        P = projector(b, eps_reg)
        A += P
        r += P @ q
    w = np.linalg.eigvalsh(A)
    if not (w[0] > 0 and w[-1] <= cond_max * w[0]):
        raise DegenerateBearings(f"bearing lines nearly parallel (cond > {cond_max:g})")
    return np.linalg.solve(A, r)


def project_to_ball(p, centre, radius: float) -> np.ndarray:
    d = np.asarray(p, dtype=float) - centre
    nd = math.sqrt(d @ d)
    if nd > radius:
        return centre + d / nd * radius
    return np.asarray(p, dtype=float)


def gn_direction(p_hat, bearing_set: BearingSet, eps_reg: float = EPS_REG) -> np.ndarray:
    """``F^+ (b - f)`` via the 3x3 normal equations, damped when ill-conditioned."""
    F = jacobian(p_hat, bearing_set.bases, eps_reg)
    r = bearing_set.stacked - unit_stack(p_hat, bearing_set.bases, eps_reg)
    A = F.T @ F
    w = np.linalg.eigvalsh(A)
    if w[0] < DAMPING_TRIGGER * w[-1]:
        A = A + DAMPING_SCALE * np.trace(A) / 3 * np.eye(3)
    return np.linalg.solve(A, F.T @ r)


def ls_step(state: EstimatorState, bearing_set: BearingSet, centroid) -> EstimatorState:
    centroid = np.asarray(centroid, dtype=float)
    cand = state.p_hat + state.beta * gn_direction(state.p_hat, bearing_set, state.eps_reg)
    return replace(state, p_hat=project_to_ball(cand, centroid, state.rho_hat))


def estimate_research_step(bearing_set: BearingSet, centroid, prev: EstimatorState,
                           N: int, fallback=None, cond_max: float = COND_MAX,
                           ) -> ResearchStepEstimate:
    """Reset plus ``N - 1`` :func:`ls_step` iterations, run in the selected kernel.

    When the reset is degenerate the iteration starts from ``fallback``
    (defaults to ``prev.p_hat``), clamped to the ball.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    centroid = np.ascontiguousarray(centroid, dtype=float)
    fb = prev.p_hat if fallback is None else fallback
    fb = np.ascontiguousarray(fb, dtype=float)
    residuals = np.empty(N)
    px, py, pz, ok, n_damped = kernels.estimate(
        bearing_set.bearings, bearing_set.bases, centroid, fb,
        prev.beta, prev.rho_hat, prev.eps_reg, cond_max, N, residuals)
    return ResearchStepEstimate(
        state=replace(prev, p_hat=np.array([px, py, pz])),
        residuals=residuals, reset_ok=bool(ok), n_damped=int(n_damped))
