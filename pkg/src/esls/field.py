"""Magnetic dipole field of the transmitter and the scalar intensity read by each receiver."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SINGULARITY_RADIUS = 1e-6
# intensity returned when the noisy reading has zero norm (or overflows)
Y_CAP = 0.0
_V_OVERFLOW = 1.0 / np.finfo(float).eps
_ROT_TOL = 1e-12


class SingularField(ValueError):
    """Receiver sits on the transmitter; the dipole model diverges."""


def _as_rotation(R, name: str) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {R.shape}")
    if not np.allclose(R @ R.T, np.eye(3), rtol=0.0, atol=_ROT_TOL):
        raise ValueError(f"{name} is not orthogonal")
    if abs(np.linalg.det(R) - 1.0) > _ROT_TOL:
        raise ValueError(f"{name} must have det = +1")
    return R


def _as_vec3(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector")
    return p


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class TxSource:
    position: np.ndarray
    attitude: np.ndarray = field(default_factory=lambda: np.eye(3))
    power: float = 1.0
    upright: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        object.__setattr__(self, "attitude", _as_rotation(self.attitude, "attitude"))
        if not self.power > 0:
            raise ValueError("power must be positive")
        object.__setattr__(self, "upright", bool(np.array_equal(self.attitude, np.eye(3))))


@dataclass(frozen=True)
class RxPose:
    position: np.ndarray
    attitude: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        object.__setattr__(self, "attitude", _as_rotation(self.attitude, "attitude"))


@dataclass(frozen=True)
class NoiseModel:
    """Additive sensor noise, i.i.d. uniform on [-bound, bound] per component.

    ``kind="none"`` (or ``bound=0``) gives a noiseless sensor.
    """

    bound: float = 1e-5
    kind: str = "uniform"

    def __post_init__(self):
        if self.kind not in ("uniform", "none"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.bound < 0:
            raise ValueError("noise bound must be non-negative")

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = (3,) if size is None else (*np.atleast_1d(size), 3)
        if self.kind == "none" or self.bound == 0.0:
            return np.zeros(shape)
        return rng.uniform(-self.bound, self.bound, size=shape)


@dataclass(frozen=True)
class Measurement:
    y: float
    v: np.ndarray
    degenerate: bool = False


def moment(p) -> np.ndarray:
    """Dipole moment shape ``(2x^2 - y^2 - z^2, 3xy, 3xz)``; works row-wise on (..., 3)."""
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return np.stack([2 * x * x - y * y - z * z, 3 * x * y, 3 * x * z], axis=-1)


def field_at(tx: TxSource, rx: RxPose) -> np.ndarray:
    """Field of ``tx`` at the receiver, expressed in the receiver frame (tesla)."""
    d = rx.position - tx.position
    r = float(np.linalg.norm(d))
    if r <= SINGULARITY_RADIUS:
        raise SingularField(f"receiver within {SINGULARITY_RADIUS} m of the source")
    m = moment(tx.attitude @ d)
    return tx.power / (4 * math.pi) * (rx.attitude @ tx.attitude.T @ m) / r**5


def field_at_points(tx: TxSource, points) -> np.ndarray:
    """Vectorised :func:`field_at` for identity-attitude receivers at ``points`` (n, 3).

    The receiver attitude only rotates the vector, so intensities computed from
    this are exact for any receiver attitude.
    """
    d = np.asarray(points, dtype=float) - tx.position
    x, y, z = d[:, 0], d[:, 1], d[:, 2]
    r2 = x * x + y * y + z * z
    if r2.min() <= SINGULARITY_RADIUS * SINGULARITY_RADIUS:
        raise SingularField(f"receiver within {SINGULARITY_RADIUS} m of the source")
    r = np.sqrt(r2)
    scale = (tx.power / (4 * math.pi)) / (r2 * r2 * r)
    if tx.upright:
        # m(d) @ I: skip the two rotations
        x3 = 3.0 * x
        out = np.empty_like(d)
        out[:, 0] = (2 * x * x - y * y - z * z) * scale
        out[:, 1] = x3 * y * scale
        out[:, 2] = x3 * z * scale
        return out
    m = moment(d @ tx.attitude.T)
    return (m @ tx.attitude) * scale[:, None]


def intensity(v) -> np.ndarray | float:
    """``||v||^(-2/3)``, with :data:`Y_CAP` where the norm is zero or overflows."""
    v = np.asarray(v, dtype=float)
    with np.errstate(over="ignore"):
        nv = np.sqrt(np.sum(v * v, axis=-1))
    bad = (nv == 0.0) | (nv > _V_OVERFLOW)
    if bad.any():
        y = np.where(bad, Y_CAP, np.where(bad, 1.0, nv) ** (-2.0 / 3.0))
    else:
        y = nv ** (-2.0 / 3.0)
    return float(y) if y.ndim == 0 else y


def measure(tx: TxSource, rx: RxPose, noise: NoiseModel, rng: np.random.Generator) -> Measurement:
    v = field_at(tx, rx) + noise.sample(rng)
    nv = float(np.linalg.norm(v))
    degenerate = nv == 0.0 or nv > _V_OVERFLOW
    return Measurement(y=intensity(v), v=v, degenerate=degenerate)


def intensity_gradient_fd(tx: TxSource, p, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of the noiseless intensity at ``p``."""
    p = _as_vec3(p, "p")
    steps = np.eye(3) * h
    pts = np.concatenate([p + steps, p - steps])
    y = intensity(field_at_points(tx, pts))
    return (y[:3] - y[3:]) / (2 * h)
