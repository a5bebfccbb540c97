"""Command-line front end: single traced runs and Monte Carlo batches."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from ._backend import BACKEND
from .config import MODES, ConfigError, SimConfig, load_config, normalise_mode
from .engine import run
from .harness import ConvergenceCriterion, convergence_step, parse_modes, run_batch
from .io import write_boxplot_csv, write_config_echo, write_summary_json, write_trace_csv

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for I/O failures here
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="esls", description=__doc__)
    p.add_argument("--version", action="version", version=f"esls {__version__} ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", type=Path, help="flat JSON file, one key per SimConfig field")
        sp.add_argument("--seed", type=_u64, default=None)
        sp.add_argument("--out", type=Path, required=True, help="output directory")
        sp.add_argument("--max-steps", type=_positive_int, default=None)
        sp.add_argument("--threshold", type=float, default=None)
        sp.add_argument("--window", type=_positive_int, default=None)

    r = sub.add_parser("run", help="one seeded run, written as a trace CSV")
    common(r)
    r.add_argument("--mode", choices=MODES, default=None)

    mc = sub.add_parser("mc", help="Monte Carlo batch over modes")
    common(mc)
    mc.add_argument("--runs", type=int, required=True)
    mc.add_argument("--modes", default=",".join(MODES), help="comma-separated, e.g. es,ls,esls")
    mc.add_argument("--jobs", type=_positive_int, default=1)
    return p


def _criterion(args, cfg: SimConfig) -> ConvergenceCriterion:
    d = ConvergenceCriterion()
    return ConvergenceCriterion(
        threshold=d.threshold if args.threshold is None else args.threshold,
        window=d.window if args.window is None else args.window,
        max_steps=cfg.max_research_steps if args.max_steps is None else args.max_steps)


def _config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config is not None else SimConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.max_steps is not None:
        changes["max_research_steps"] = args.max_steps
    if getattr(args, "mode", None) is not None:
        changes["mode"] = normalise_mode(args.mode)
    return cfg.replace(**changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    crit = _criterion(args, cfg)
    trace = run(cfg)
    out = args.out
    write_trace_csv(trace, out / "trace.csv")
    write_config_echo(cfg, out / "config.json")
    k = convergence_step(trace.err_norm, crit)
    print(f"mode={cfg.mode} seed={cfg.seed} steps={len(trace)} "
          f"final_err={trace.err_norm[-1]:.4g} converged_at={k if k is not None else 'never'}")
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg = _config(args)
    crit = _criterion(args, cfg)
    # all validation happens before anything is written
    if args.runs < 1:
        raise ConfigError({"runs": "must be an integer >= 1"})
    modes = parse_modes(args.modes)
    summary = run_batch(cfg, args.runs, cfg.seed, modes, crit, jobs=args.jobs)
    write_summary_json(summary, args.out / "summary.json", cfg)
    write_boxplot_csv(summary, args.out / "boxplot.csv")
    print(f"{'mode':<5} {'runs':>5} {'mean':>10} {'std':>10} {'median':>8} {'outliers':>8} {'failed':>6}")
    for m in summary.modes.values():
        mean = "-" if m.mean is None else f"{m.mean:.1f}"
        std = "-" if m.std is None else f"{m.std:.1f}"
        med = "-" if m.box is None else f"{m.box.median:.0f}"
        print(f"{m.mode:<5} {m.runs:>5} {mean:>10} {std:>10} {med:>8} {m.n_outliers:>8} {m.non_converged:>6}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    try:
        return {"run": cmd_run, "mc": cmd_mc}[args.command](args)
    except ConfigError as exc:
        for k, v in exc.errors.items():
            print(f"config error: {k}: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
