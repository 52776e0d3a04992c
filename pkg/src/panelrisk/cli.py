"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline, report, simulation
from .errors import DataError, PanelRiskError, ValidationError
from .panel import load_csv

logger = logging.getLogger("panelrisk")


class _Parser(argparse.ArgumentParser):
    # Usage errors are validation errors (exit 1), not argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="panelrisk", description="Panel econometrics pipeline and risk analytics.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the estimation pipeline from an INI config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--format", action="append", choices=report.FORMATS, help="repeatable; overrides [output] formats")
    run.add_argument("--out", type=Path)
    run.add_argument("--seed", type=int)

    rr = sub.add_parser("risk-report", help="descriptive risk analytics on an annual CSV")
    rr.add_argument("--data", required=True, type=Path)
    rr.add_argument("--split", required=True, type=int)
    rr.add_argument("--components", help="comma-separated variables (default: all index variables)")
    rr.add_argument("--meta", type=Path, help="metadata CSV: variable,scale_direction,index_max")
    rr.add_argument("--format", action="append", choices=report.FORMATS)
    rr.add_argument("--out", type=Path, default=Path("out"))

    sim = sub.add_parser("simulate", help="simulate and cache a critical-value table")
    sim.add_argument("--test", required=True, choices=simulation.SUPPORTED_TESTS)
    sim.add_argument("--n", type=int, default=1)
    sim.add_argument("--t", type=int, required=True)
    sim.add_argument("--reps", type=int, default=simulation.DEFAULT_REPLICATIONS)
    sim.add_argument("--seed", type=int, default=simulation.DEFAULT_SEED)
    sim.add_argument("--det", default="constant_only", choices=("none", "constant_only", "trend_and_constant"))
    sim.add_argument("--max-lag", type=int)
    sim.add_argument("--format", action="append", choices=report.FORMATS)
    sim.add_argument("--out", type=Path)
    return p


def _cmd_run(args) -> int:
    cfg = pipeline.PipelineConfig.from_ini(args.config, seed=args.seed, out_dir=args.out)
    formats = tuple(args.format) if args.format else cfg.formats
    try:
        rep = pipeline.run_pipeline(cfg)
    except pipeline.PipelineStageError as exc:
        report.emit(exc.partial, formats, cfg.out_dir)
        print(f"error: stage {exc.stage} failed: {exc.cause}", file=sys.stderr)
        return exc.exit_code
    for path in report.emit(rep, formats, cfg.out_dir):
        print(path)
    print(f"method: {rep.method_selection.get('chosen')}  verdict: {rep.verdict}")
    return 0


def _cmd_risk(args) -> int:
    ds = load_csv(args.data, "annual_long")
    meta = pipeline.load_meta(args.meta) if args.meta else None
    comps = [c.strip() for c in args.components.split(",") if c.strip()] if args.components else None
    rep = pipeline.risk_report(ds, args.split, comps, meta)
    for path in report.emit(rep, tuple(args.format or ("json",)), args.out):
        print(path)
    return 0


def _cmd_simulate(args) -> int:
    table = simulation.simulate_critical_values(args.test, args.n, args.t, args.det, args.reps, args.seed, args.max_lag)
    if args.out:
        for path in report.emit(table, tuple(args.format or ("json",)), args.out, stem=f"cv_{args.test}"):
            print(path)
    else:
        sys.stdout.write(report.to_text(table))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    handlers = {"run": _cmd_run, "risk-report": _cmd_risk, "simulate": _cmd_simulate}
    try:
        return handlers[args.command](args)
    except PanelRiskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
