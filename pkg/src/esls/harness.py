"""Monte Carlo batches over modes and seeds, the convergence metric and boxplot statistics."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import MODES, ConfigError, SimConfig, normalise_mode
from .engine import run


@dataclass(frozen=True)
class ConvergenceCriterion:
    threshold: float = 2.0
    window: int = 30
    max_steps: int = 10_000

    def __post_init__(self):
        errors = {}
        if not (isinstance(self.threshold, (int, float)) and self.threshold > 0
                and math.isfinite(self.threshold)):
            errors["threshold"] = "must be a positive number"
        if not isinstance(self.window, int) or self.window < 1:
            errors["window"] = "must be an integer >= 1"
        if not isinstance(self.max_steps, int) or self.max_steps < 1:
            errors["max_steps"] = "must be an integer >= 1"
        if errors:
            raise ConfigError(errors)


def convergence_step(err_norms, crit: ConvergenceCriterion = ConvergenceCriterion()) -> int | None:
    """1-based step at which ``window`` consecutive errors ``<= threshold`` first complete.

    Returns ``s + window - 1`` for the earliest qualifying start ``s``, or None.
    """
    streak = 0
    for k, e in enumerate(err_norms, start=1):
        if k > crit.max_steps:
            break
        streak = streak + 1 if e <= crit.threshold else 0
        if streak == crit.window:
            return k
    return None


@dataclass(frozen=True)
class BoxStats:
    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    outliers: tuple


def box_stats(values) -> BoxStats | None:
    """Quartiles (linear interpolation), Tukey whiskers and 1.5 IQR outliers."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return None
    q1, med, q3 = (float(x) for x in np.percentile(v, [25, 50, 75]))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = tuple(float(x) for x in v[(v < lo_fence) | (v > hi_fence)])
    return BoxStats(q1, med, q3, float(inside.min()), float(inside.max()), outliers)


@dataclass(frozen=True)
class ModeSummary:
    mode: str
    runs: int
    steps: tuple  # per run, None when the run never converged
    mean: float | None
    std: float | None
    box: BoxStats | None
    non_converged: int

    @classmethod
    def from_steps(cls, mode: str, steps) -> "ModeSummary":
        steps = tuple(None if s is None else int(s) for s in steps)
        conv = [s for s in steps if s is not None]
        if conv:
            mean = float(np.mean(conv))
            # sample std; a single converged run has no spread
            std = float(np.std(conv, ddof=1)) if len(conv) > 1 else 0.0
        else:
            mean = std = None
        return cls(mode, len(steps), steps, mean, std, box_stats(conv),
                   len(steps) - len(conv))

    @property
    def variance(self) -> float | None:
        return None if self.std is None else self.std ** 2

    @property
    def n_outliers(self) -> int:
        return 0 if self.box is None else len(self.box.outliers)


@dataclass(frozen=True)
class McSummary:
    base_seed: int
    runs: int
    criterion: ConvergenceCriterion
    modes: dict = field(default_factory=dict)

    def __getitem__(self, mode: str) -> ModeSummary:
        return self.modes[normalise_mode(mode)]

    def to_dict(self) -> dict:
        return {
            "base_seed": self.base_seed,
            "runs": self.runs,
            "criterion": asdict(self.criterion),
            "modes": [_mode_to_dict(m) for m in self.modes.values()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "McSummary":
        modes = {}
        for m in d["modes"]:
            box = m["box"]
            if box is not None:
                box = BoxStats(**{**box, "outliers": tuple(box["outliers"])})
            modes[m["mode"]] = ModeSummary(
                mode=m["mode"], runs=m["runs"], steps=tuple(m["steps"]), mean=m["mean"],
                std=m["std"], box=box, non_converged=m["non_converged"])
        return cls(d["base_seed"], d["runs"], ConvergenceCriterion(**d["criterion"]), modes)


def _mode_to_dict(m: ModeSummary) -> dict:
    out = asdict(m)
    out["steps"] = list(m.steps)
    if m.box is not None:
        out["box"]["outliers"] = list(m.box.outliers)
    return out


def _one_run(args) -> int | None:
    config, crit = args
    return convergence_step(run(config, stop=crit).err_norm, crit)


def parse_modes(modes) -> tuple[str, ...]:
    if isinstance(modes, str):
        modes = [m for m in modes.split(",") if m.strip()]
    out = []
    for m in modes:
        m = normalise_mode(m.strip())
        if m not in out:
            out.append(m)
    if not out:
        raise ConfigError({"modes": "at least one mode is required"})
    return tuple(out)


def run_batch(config: SimConfig, runs: int, base_seed: int = 0, modes=MODES,
              criterion: ConvergenceCriterion = ConvergenceCriterion(),
              jobs: int = 1) -> McSummary:
    """``runs`` simulations per mode, run ``r`` seeded with ``base_seed + r``.

    Each run stops as soon as the criterion is met; that cannot change its
    convergence step. Results are merged by run index, so the summary does not
    depend on ``jobs``.
    """
    if not isinstance(runs, int) or runs < 1:
        raise ConfigError({"runs": "must be an integer >= 1"})
    if not isinstance(base_seed, int) or base_seed < 0 or base_seed + runs > 2**64:
        raise ConfigError({"seed": "base_seed + runs must fit in an unsigned 64-bit integer"})
    modes = parse_modes(modes)
    tasks = [(config.replace(mode=m, seed=base_seed + r, max_research_steps=criterion.max_steps),
              criterion) for m in modes for r in range(runs)]
    if jobs is None or jobs <= 1:
        steps = [_one_run(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            steps = list(pool.map(_one_run, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    summaries = {m: ModeSummary.from_steps(m, steps[k * runs:(k + 1) * runs])
                 for k, m in enumerate(modes)}
    return McSummary(base_seed, runs, criterion, summaries)
