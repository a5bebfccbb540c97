"""Rigid formation controller blending the ES and LS fleet directions."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .es import EPS_REG, TARGET_SIGN


@dataclass(frozen=True)
class FormationState:
    centroid: np.ndarray
    offsets: np.ndarray
    gamma: float = 1e-2
    sigma: float = 1.0

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=float)
        if offsets.ndim != 2 or offsets.shape[1] != 3:
            raise ValueError("offsets must be (n, 3)")
        if np.abs(offsets.mean(axis=0)).max() > 1e-12 * max(1.0, np.abs(offsets).max()):
            raise ValueError("offsets must have zero mean")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError("sigma must lie in [0, 1]")
        object.__setattr__(self, "centroid", np.asarray(self.centroid, dtype=float).reshape(3))
        object.__setattr__(self, "offsets", offsets)

    @property
    def n(self) -> int:
        return self.offsets.shape[0]


def square_offsets(edge: float = 10.0) -> np.ndarray:
    h = edge / 2
    return np.array([[-h, -h, 0.0], [-h, h, 0.0], [h, -h, 0.0], [h, h, 0.0]])


def formation_radius(points) -> float:
    """Largest pairwise distance between agents."""
    p = np.asarray(points, dtype=float)
    d = p[:, None, :] - p[None, :, :]
    return float(np.sqrt((d * d).sum(-1)).max())


def sigma(b, f_val, n: int) -> float:
    """Reliability of the LS estimate: 0 = consistent bearings, 1 = unreliable."""
    r = np.asarray(b, dtype=float) - np.asarray(f_val, dtype=float)
    return sigma_from_residual(math.sqrt(r @ r), n)


def sigma_from_residual(residual_norm: float, n: int) -> float:
    return min(1.0, max(0.0, residual_norm / (2 * math.sqrt(n))))


def fleet_directions(grads, p_hat, centroid, eps_reg: float = EPS_REG,
                     sign: float = TARGET_SIGN) -> tuple[np.ndarray, np.ndarray]:
    g = np.asarray(grads, dtype=float).sum(axis=0)
    b_es = sign * g / math.sqrt(eps_reg + g @ g)
    d = np.asarray(p_hat, dtype=float) - np.asarray(centroid, dtype=float)
    b_ls = d / math.sqrt(eps_reg + d @ d)
    return b_es, b_ls


def centroid_update(fs: FormationState, b_es, b_ls, sigma_N: float) -> FormationState:
    if not 0.0 <= sigma_N <= 1.0:
        raise ValueError("sigma_N must lie in [0, 1]")
    step = fs.gamma * (sigma_N * np.asarray(b_es) + (1 - sigma_N) * np.asarray(b_ls))
    return replace(fs, centroid=fs.centroid + step, sigma=float(sigma_N))


def agent_bases(fs: FormationState) -> np.ndarray:
    return fs.offsets + fs.centroid
