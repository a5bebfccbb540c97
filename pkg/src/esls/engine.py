"""Seeded research-step loop tying together sensing, ES, the estimator and the controller."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import es, formation
from .config import SimConfig
from ._backend import kernels
from .estimator import EstimatorState
from .field import SINGULARITY_RADIUS, NoiseModel, TxSource
from .timebase import Timebase, start_of

_NOISE_CHUNK = 256


class StopRule(Protocol):
    threshold: float
    window: int


def agent_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """One independent stream per agent, keyed by (master seed, agent index)."""
    return [np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))
            for i in range(n)]


@dataclass
class RunTrace:
    """Per-research-step record of a run; row ``j`` is research step ``t[j]``.

    ``centroid``/``bases`` are the values used during the step (before the
    controller moves the formation); ``sigma`` is the blend actually applied,
    ``sigma_est`` the value computed from the final estimator residual.
    """

    config: SimConfig
    t: np.ndarray
    centroid: np.ndarray
    bases: np.ndarray
    positions: np.ndarray
    y: np.ndarray
    grads: np.ndarray
    bearings: np.ndarray
    p_hat: np.ndarray
    sigma: np.ndarray
    sigma_est: np.ndarray
    sigma_smooth: np.ndarray
    err: np.ndarray
    err_norm: np.ndarray
    dist_centroid: np.ndarray
    reset_ok: np.ndarray
    n_damped: np.ndarray
    singular: np.ndarray

    @property
    def seed(self) -> int:
        return self.config.seed

    def __len__(self) -> int:
        return len(self.t)


class _Buffer:
    _SCALARS = ("sigma", "sigma_est", "sigma_smooth", "err_norm", "dist_centroid")

    def __init__(self, cap: int, n: int):
        self.len = 0
        self.t = np.zeros(cap, dtype=np.int64)
        for name in ("centroid", "p_hat", "err"):
            setattr(self, name, np.zeros((cap, 3)))
        for name in ("bases", "positions", "grads", "bearings"):
            setattr(self, name, np.zeros((cap, n, 3)))
        self.y = np.zeros((cap, n))
        for name in self._SCALARS:
            setattr(self, name, np.zeros(cap))
        self.reset_ok = np.zeros(cap, dtype=bool)
        self.n_damped = np.zeros(cap, dtype=np.int64)
        self.singular = np.zeros(cap, dtype=bool)

    def freeze(self, config: SimConfig) -> RunTrace:
        m = self.len
        kw = {name: getattr(self, name)[:m].copy() for name in (
            "t", "centroid", "bases", "positions", "y", "grads", "bearings", "p_hat",
            *self._SCALARS, "err", "reset_ok", "n_damped", "singular")}
        return RunTrace(config=config, **kw)


@dataclass
class EngineState:
    """Mutable run state. The hot loop works on raw arrays; the frozen per-module
    views (``formation``, ``es``, ``estimator``) are built on demand."""

    config: SimConfig
    tx: TxSource
    noise: NoiseModel
    dither: es.DitherParams
    timebase: Timebase
    rngs: list
    offsets: np.ndarray
    centroid: np.ndarray
    grad: np.ndarray
    z: np.ndarray
    p_hat: np.ndarray
    sigma: float = 1.0
    z_seeded: bool = False
    sigma_smooth: float = math.nan
    _noise: np.ndarray = field(default=None, repr=False)
    _noise_pos: int = 0
    _buf: _Buffer = field(default=None, repr=False)

    @property
    def t(self) -> int:
        return self.timebase.t

    @property
    def formation(self) -> formation.FormationState:
        return formation.FormationState(self.centroid.copy(), self.offsets, self.config.gamma, self.sigma)

    @property
    def es(self) -> es.EsState:
        return es.EsState(self.grad.copy(), self.z.copy(), self.config.alpha)

    @property
    def estimator(self) -> EstimatorState:
        c = self.config
        return EstimatorState(self.p_hat.copy(), c.beta, c.rho_hat, c.eps_reg)

    def next_noise(self) -> np.ndarray:
        """(n, 3) noise sample for this step, pre-drawn per agent in chunks."""
        if self._noise is None or self._noise_pos == self._noise.shape[0]:
            n = len(self.rngs)
            if self.noise.kind == "none" or self.noise.bound == 0.0:
                self._noise = np.zeros((_NOISE_CHUNK, n, 3))
            else:
                self._noise = np.stack([self.noise.sample(r, _NOISE_CHUNK) for r in self.rngs], axis=1)
            self._noise_pos = 0
        out = self._noise[self._noise_pos]
        self._noise_pos += 1
        return out


def init(config: SimConfig) -> EngineState:
    """Place the formation and draw the initial gradient estimates.

    ``z`` is seeded from each agent's first measurement, taken inside the first
    research step, so the high-pass starts without a DC transient.
    """
    n = config.n
    offsets = config.offsets_array()
    # validates the formation geometry once, up front
    formation.FormationState(config.initial_centroid, offsets, config.gamma, 1.0)
    rngs = agent_rngs(config.seed, n)
    grads = np.stack([r.normal(0.0, 1.0, 3) for r in rngs]) * config.grad_init_std
    if config.planar:
        grads[:, 2] = 0.0
    centroid = np.array(config.initial_centroid, dtype=float)
    return EngineState(
        config=config,
        tx=TxSource(config.tx_position, np.asarray(config.tx_attitude, dtype=float), config.tx_power),
        noise=NoiseModel(config.noise_bound, config.noise_kind),
        dither=es.DitherParams(config.delta, config.omega, config.kappa, config.planar),
        timebase=start_of(1, config.N),
        rngs=rngs,
        offsets=np.ascontiguousarray(offsets),
        centroid=centroid,
        grad=grads,
        z=np.zeros(n),
        p_hat=centroid.copy(),
        _buf=_Buffer(config.max_research_steps, n),
    )


def _blend(cfg: SimConfig, sigma_est: float) -> float:
    if cfg.mode == "es":
        return 1.0
    if cfg.mode == "ls":
        return 0.0
    if cfg.sigma_override is not None:
        return float(cfg.sigma_override)
    return sigma_est


def research_step(state: EngineState) -> int:
    """Advance one research step in place; returns the index of the new trace row."""
    cfg = state.config
    buf = state._buf
    t = state.t
    if t > cfg.max_research_steps:
        raise RuntimeError("max_research_steps exceeded")
    centroid = state.centroid
    bases = state.offsets + centroid

    # (1)-(2) dithered positions and one reading per agent
    gvec = es.dither(state.dither, t)
    positions = bases + state.dither.delta * gvec
    y = np.empty(cfg.n)
    tx = state.tx
    # (3) ES filters, fused with sensing; z is seeded by the first reading
    n_sing = kernels.sense_es(positions, state.next_noise(), tx.position, tx.attitude,
                              tx.power / (4 * math.pi), tx.upright, SINGULARITY_RADIUS,
                              state.grad, state.z, cfg.alpha, gvec, not state.z_seeded, y)
    state.z_seeded = True
    singular = n_sing > 0
    grads = state.grad.copy()

    # (4)-(5) bearings and the N-iteration estimator
    sign = cfg.bearing_sign
    er = cfg.eps_reg
    bearings = sign * grads / np.sqrt(er + np.sum(grads * grads, axis=-1, keepdims=True))
    g = grads.sum(axis=0)
    b_es = sign * g / math.sqrt(er + g @ g)
    fallback = state.p_hat if t > 1 else centroid + cfg.rho_hat * b_es
    residuals = np.empty(cfg.N)
    px, py, pz, reset_ok, n_damped = kernels.estimate(
        bearings, bases, centroid, fallback, cfg.beta, cfg.rho_hat, er,
        cfg.cond_max, cfg.N, residuals)
    p_hat = np.array([px, py, pz])
    state.p_hat = p_hat

    # (6)-(7) reliability blend and formation move
    sigma_est = formation.sigma_from_residual(residuals[-1], cfg.n)
    sigma_used = _blend(cfg, sigma_est)
    d = p_hat - centroid
    b_ls = d / math.sqrt(er + d @ d)
    state.centroid = centroid + cfg.gamma * (sigma_used * b_es + (1 - sigma_used) * b_ls)
    state.sigma = sigma_used

    lam = cfg.sigma_smoothing
    state.sigma_smooth = sigma_est if t == 1 else (1 - lam) * state.sigma_smooth + lam * sigma_est

    # (8) trace row
    j = buf.len
    err = p_hat - state.tx.position
    buf.t[j] = t
    buf.centroid[j] = centroid
    buf.bases[j] = bases
    buf.positions[j] = positions
    buf.y[j] = y
    buf.grads[j] = grads
    buf.bearings[j] = bearings
    buf.p_hat[j] = p_hat
    buf.sigma[j] = sigma_used
    buf.sigma_est[j] = sigma_est
    buf.sigma_smooth[j] = state.sigma_smooth
    buf.err[j] = err
    buf.err_norm[j] = math.sqrt(err @ err)
    d = centroid - state.tx.position
    buf.dist_centroid[j] = math.sqrt(d @ d)
    buf.reset_ok[j] = reset_ok
    buf.n_damped[j] = n_damped
    buf.singular[j] = singular
    buf.len = j + 1

    # (9) the N inner ticks of this research step are consumed
    state.timebase = start_of(t + 1, cfg.N)
    return j


def run(config: SimConfig, stop: StopRule | None = None) -> RunTrace:
    """Run up to ``max_research_steps``; with ``stop`` set, return as soon as the
    estimation error has stayed within ``stop.threshold`` for ``stop.window`` steps."""
    state = init(config)
    streak = 0
    for _ in range(config.max_research_steps):
        j = research_step(state)
        if stop is not None:
            streak = streak + 1 if state._buf.err_norm[j] <= stop.threshold else 0
            if streak >= stop.window:
                break
    return state._buf.freeze(config)


def trace_of(state: EngineState) -> RunTrace:
    return state._buf.freeze(state.config)
