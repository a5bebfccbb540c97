"""Per-agent extremum-seeking gradient estimator.

Each agent dithers around its base position, high-passes the measured
intensity, correlates it with the dither and low-passes the product. For
small dither the filter settles near ``(delta / 2) * grad(y)`` in the dithered
axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# The intensity is minimal at the source, so its gradient points away from it.
# Flipping the sign makes bearings and the ES fleet direction point at the target.
TARGET_SIGN = -1.0
EPS_REG = 1e-6


@dataclass(frozen=True)
class DitherParams:
    delta: float = 1.0
    omega: float = math.pi / 2
    kappa: float = 0.0
    planar: bool = True

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("dither amplitude delta must be positive")
        if not 0 < self.omega <= 2 * math.pi / 3 + 1e-15:
            raise ValueError("omega must lie in (0, 2*pi/3]")
        if not 0 <= self.kappa < 1:
            raise ValueError("kappa must lie in [0, 1)")


@dataclass(frozen=True)
class EsState:
    """Filter state; ``grad`` / ``z`` may be stacked over agents (shape (n, 3) / (n,))."""

    grad: np.ndarray
    z: np.ndarray | float
    alpha: float = 1e-2

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


def dither(params: DitherParams, t: int) -> np.ndarray:
    wt = params.omega * t
    third = 0.0 if params.planar else math.sin(params.kappa * wt)
    return np.array([math.sin(wt), math.cos(wt), third])


def agent_position(base, params: DitherParams, t: int) -> np.ndarray:
    return np.asarray(base, dtype=float) + params.delta * dither(params, t)


def es_update(s: EsState, y, gamma_vec) -> EsState:
    """One high-pass / correlate / low-pass step. ``eps`` uses the pre-update ``z``."""
    a = s.alpha
    eps = np.asarray(y, dtype=float) - s.z
    grad = (1 - a) * s.grad + a * np.multiply.outer(eps, gamma_vec)
    return EsState(grad=grad, z=s.z + a * eps, alpha=a)


def bearing(grad, eps_reg: float = EPS_REG, sign: float = TARGET_SIGN) -> np.ndarray:
    """Regularised normalisation ``sign * g / sqrt(eps + |g|^2)``, row-wise on (..., 3)."""
    g = np.asarray(grad, dtype=float)
    return sign * g / np.sqrt(eps_reg + np.sum(g * g, axis=-1, keepdims=True))
