"""Trace CSV, Monte Carlo summary JSON and boxplot CSV writers."""
from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from .config import SimConfig
from .engine import RunTrace
from .harness import McSummary

TRACE_HEAD = ("t", "cx", "cy", "cz", "ex", "ey", "ez", "err_norm", "dist_centroid", "sigma")
TRACE_TAIL = ("phat_x", "phat_y", "phat_z", "sigma_est", "sigma_smooth",
              "reset_ok", "n_damped", "singular")
BOX_HEAD = ("mode", "runs", "converged", "non_converged", "mean", "std", "q1", "median", "q3",
            "whisker_lo", "whisker_hi", "n_outliers", "outliers")
FLOAT_FMT = "%.9g"


def _write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def trace_columns(n: int) -> list[str]:
    cols = list(TRACE_HEAD)
    for i in range(1, n + 1):
        cols += [f"q{i}x", f"q{i}y", f"q{i}z", f"p{i}x", f"p{i}y", f"p{i}z", f"y{i}",
                 f"g{i}x", f"g{i}y", f"g{i}z", f"b{i}x", f"b{i}y", f"b{i}z"]
    return cols + list(TRACE_TAIL)


def trace_table(trace: RunTrace) -> np.ndarray:
    m = len(trace)
    parts = [trace.t[:, None], trace.centroid, trace.err, trace.err_norm[:, None],
             trace.dist_centroid[:, None], trace.sigma[:, None]]
    for i in range(trace.bases.shape[1]):
        parts += [trace.bases[:, i], trace.positions[:, i], trace.y[:, i, None],
                  trace.grads[:, i], trace.bearings[:, i]]
    parts += [trace.p_hat, trace.sigma_est[:, None], trace.sigma_smooth[:, None],
              trace.reset_ok[:, None], trace.n_damped[:, None], trace.singular[:, None]]
    return np.hstack([np.asarray(p, dtype=float).reshape(m, -1) for p in parts])


def format_trace_csv(trace: RunTrace) -> str:
    buf = io.StringIO()
    cols = trace_columns(trace.bases.shape[1])
    np.savetxt(buf, trace_table(trace), fmt=FLOAT_FMT, delimiter=",",
               header=",".join(cols), comments="")
    return buf.getvalue()


def write_trace_csv(trace: RunTrace, path) -> Path:
    return _write_text(path, format_trace_csv(trace))


def read_trace_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return header, data


def write_config_echo(config: SimConfig, path) -> Path:
    return _write_text(path, json.dumps(config.to_mapping(), indent=2) + "\n")


def write_summary_json(summary: McSummary, path, config: SimConfig | None = None) -> Path:
    doc = summary.to_dict()
    if config is not None:
        doc["config"] = config.to_mapping()
    return _write_text(path, json.dumps(doc, indent=2) + "\n")


def read_summary_json(path) -> McSummary:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return McSummary.from_dict(doc)


def _num(v) -> str:
    return "" if v is None else FLOAT_FMT % v


def format_boxplot_csv(summary: McSummary) -> str:
    lines = [",".join(BOX_HEAD)]
    for m in summary.modes.values():
        b = m.box
        row = [m.mode, str(m.runs), str(m.runs - m.non_converged), str(m.non_converged),
               _num(m.mean), _num(m.std)]
        if b is None:
            row += [""] * 5 + ["0", ""]
        else:
            row += [_num(b.q1), _num(b.median), _num(b.q3), _num(b.whisker_lo), _num(b.whisker_hi),
                    str(len(b.outliers)), ";".join(FLOAT_FMT % x for x in b.outliers)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_boxplot_csv(summary: McSummary, path) -> Path:
    return _write_text(path, format_boxplot_csv(summary))
