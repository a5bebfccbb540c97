"""Simulation configuration: defaults, validation and the flat JSON file format."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .es import EPS_REG, TARGET_SIGN
from .estimator import COND_MAX

MODES = ("es", "ls", "esls")
# third-axis dither ratio in 3-D; incommensurate with 1 so the axes decorrelate
KAPPA_3D = 0.7
_MODE_ALIASES = {
    "es": "es", "es-only": "es",
    "ls": "ls", "ls-only": "ls",
    "esls": "esls", "es+ls": "esls", "combined": "esls",
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` maps field name to a message."""

    def __init__(self, errors: dict[str, str]):
        self.errors = dict(errors)
        super().__init__("; ".join(f"{k}: {v}" for k, v in self.errors.items()))


def normalise_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[str(mode).lower()]
    except KeyError:
        raise ConfigError({"mode": f"unknown mode {mode!r}; expected one of {MODES}"}) from None


@dataclass(frozen=True)
class SimConfig:
    # transmitter
    tx_position: tuple = (0.0, 0.0, 0.0)
    tx_attitude: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    tx_power: float = 1.0
    # sensing noise
    noise_bound: float = 1e-5
    noise_kind: str = "uniform"
    # formation
    n: int = 4
    formation_edge: float = 10.0
    offsets: tuple | None = None
    initial_centroid: tuple = (25.0, 25.0, 0.0)
    # extremum seeking
    delta: float = 1.0
    omega: float = math.pi / 2
    kappa: float | None = None  # None: 0 in 2-D, KAPPA_3D in 3-D
    alpha: float = 1e-2
    grad_init_std: float = math.sqrt(1e-5)
    bearing_sign: float = TARGET_SIGN
    # estimator
    beta: float = 0.5
    rho_hat: float = 50.0
    eps_reg: float = EPS_REG
    N: int = 200
    cond_max: float = COND_MAX
    # controller
    gamma: float = 1e-2
    mode: str = "esls"
    sigma_override: float | None = None
    sigma_smoothing: float = 0.05
    # run
    dimensions: int = 2
    max_research_steps: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.kappa is None and self.dimensions in (2, 3):
            object.__setattr__(self, "kappa", 0.0 if self.dimensions == 2 else KAPPA_3D)
        errors = validate(self)
        if errors:
            raise ConfigError(errors)

    @property
    def planar(self) -> bool:
        return self.dimensions == 2

    def offsets_array(self) -> np.ndarray:
        if self.offsets is not None:
            return np.asarray(self.offsets, dtype=float)
        h = self.formation_edge / 2
        return np.array([[-h, -h, 0.0], [-h, h, 0.0], [h, -h, 0.0], [h, h, 0.0]])

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_mapping(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = json.loads(json.dumps(v))
            out[f.name] = v
        return out


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def validate(cfg: SimConfig) -> dict[str, str]:
    errors: dict[str, str] = {}

    def positive(name):
        v = getattr(cfg, name)
        if not _is_number(v) or v <= 0:
            errors[name] = f"must be a positive number, got {v!r}"

    for name in ("tx_power", "delta", "beta", "rho_hat", "eps_reg", "cond_max"):
        positive(name)
    # gamma = 0 freezes the formation (a valid diagnostic configuration)
    for name in ("noise_bound", "grad_init_std", "gamma"):
        v = getattr(cfg, name)
        if not _is_number(v) or v < 0:
            errors[name] = f"must be a non-negative number, got {v!r}"
    if not _is_number(cfg.alpha) or not 0 < cfg.alpha < 1:
        errors["alpha"] = "must lie in (0, 1)"
    if not _is_number(cfg.omega) or not 0 < cfg.omega <= 2 * math.pi / 3 + 1e-15:
        errors["omega"] = "must lie in (0, 2*pi/3]"
    if not _is_number(cfg.kappa) or not 0 <= cfg.kappa < 1:
        errors["kappa"] = "must lie in [0, 1)"
    if cfg.noise_kind not in ("uniform", "none"):
        errors["noise_kind"] = "must be 'uniform' or 'none'"
    if cfg.bearing_sign not in (1, -1, 1.0, -1.0):
        errors["bearing_sign"] = "must be +1 or -1"
    if cfg.sigma_override is not None and (
            not _is_number(cfg.sigma_override) or not 0 <= cfg.sigma_override <= 1):
        errors["sigma_override"] = "must be null or lie in [0, 1]"
    if not _is_number(cfg.sigma_smoothing) or not 0 < cfg.sigma_smoothing <= 1:
        errors["sigma_smoothing"] = "must lie in (0, 1]"
    if cfg.mode not in MODES:
        errors["mode"] = f"must be one of {MODES}"
    if cfg.dimensions not in (2, 3):
        errors["dimensions"] = "must be 2 or 3"
    for name in ("n", "N", "max_research_steps"):
        v = getattr(cfg, name)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            errors[name] = f"must be a positive integer, got {v!r}"
    if isinstance(cfg.n, int) and cfg.n < 2:
        errors["n"] = "need at least two agents"
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or not 0 <= cfg.seed < 2**64:
        errors["seed"] = "must be an unsigned 64-bit integer"

    planar = cfg.dimensions == 2
    for name in ("tx_position", "initial_centroid"):
        try:
            v = np.asarray(getattr(cfg, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError
            if planar and v[2] != 0.0:
                errors[name] = "z-component must be 0 in 2-D mode"
        except (TypeError, ValueError):
            errors[name] = "must be a finite 3-vector"
    try:
        R = np.asarray(cfg.tx_attitude, dtype=float)
        if R.shape != (3, 3):
            raise ValueError
        if not np.allclose(R @ R.T, np.eye(3), rtol=0, atol=1e-12) or abs(np.linalg.det(R) - 1) > 1e-12:
            errors["tx_attitude"] = "must be a rotation matrix"
        elif planar and not (np.allclose(R[2], [0, 0, 1], rtol=0, atol=1e-12)
                             and np.allclose(R[:, 2], [0, 0, 1], rtol=0, atol=1e-12)):
            errors["tx_attitude"] = "must rotate about the z-axis only in 2-D mode"
    except (TypeError, ValueError):
        errors["tx_attitude"] = "must be a 3x3 matrix"

    if cfg.offsets is None:
        if "n" not in errors and cfg.n != 4:
            errors["offsets"] = "required unless n == 4 (default square formation)"
        if not _is_number(cfg.formation_edge) or cfg.formation_edge <= 0:
            errors["formation_edge"] = "must be a positive number"
    else:
        try:
            off = np.asarray(cfg.offsets, dtype=float)
            if off.ndim != 2 or off.shape[1] != 3 or not np.all(np.isfinite(off)):
                raise ValueError
            if "n" not in errors and off.shape[0] != cfg.n:
                errors["offsets"] = f"expected {cfg.n} offsets, got {off.shape[0]}"
            elif np.abs(off.mean(axis=0)).max() > 1e-12 * max(1.0, np.abs(off).max()):
                errors["offsets"] = "must have zero mean"
            elif planar and np.any(off[:, 2] != 0.0):
                errors["offsets"] = "z-components must be 0 in 2-D mode"
        except (TypeError, ValueError):
            errors["offsets"] = "must be a list of 3-vectors"
    return errors


_FIELDS = {f.name for f in dataclasses.fields(SimConfig)}
_TUPLE_FIELDS = {"tx_position", "tx_attitude", "offsets", "initial_centroid"}


def _freeze(v):
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    return v


def from_mapping(data: dict[str, Any], base: SimConfig | None = None) -> SimConfig:
    if not isinstance(data, dict):
        raise ConfigError({"<file>": "top level must be a key/value object"})
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError({k: "unknown key" for k in unknown})
    values = {}
    for k, v in data.items():
        if k in _TUPLE_FIELDS and v is not None:
            if not isinstance(v, list):
                raise ConfigError({k: "must be a list"})
            v = _freeze(v)
        if k == "mode":
            v = normalise_mode(v)
        values[k] = v
    return dataclasses.replace(base or SimConfig(), **values)


def load_config(path) -> SimConfig:
    """Read a flat JSON object with one key per :class:`SimConfig` field."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError({"<file>": f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})"}) from exc
    return from_mapping(data)


def dump_config(cfg: SimConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_mapping(), indent=2) + "\n")


def reference_config(**overrides) -> SimConfig:
    """The published planar scenario (4 agents, 10 m square, start at (25, 25))."""
    return SimConfig(**overrides)
