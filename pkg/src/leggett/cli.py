"""Command-line front end.

    leggett curves  [grid] [--output F] [--format csv|json] [--plot PNG]
    leggett sweep   [grid] [--mean-counts N] [--visibility V] [--seed S]
                    [--output F] [--counts F] [--metadata F] [--plot PNG]
    leggett analyze --input COUNTS.csv [--output F] [--plot PNG]
    leggett hvmax   --phi DEG [--budget B] [--seed S] [--output F]

Exit status: 0 success, 2 usage error, 3 data/schema error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import counting
from .correlations import E3Point, e3_quantum, fmt, ideal_violation_window, leggett_bound, write_e3_csv
from .hvmodel import MIN_BUDGET, maximize_e3
from .settings import build_triad, sweep_grid
from .statespace import InvalidInputError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _add_grid(p):
    p.add_argument("--phi-start", type=float, default=0.0, help="first angle, degrees (default 0)")
    p.add_argument("--phi-stop", type=float, default=180.0, help="last angle, degrees (default 180)")
    p.add_argument("--phi-step", type=float, default=4.0, help="step, degrees (default 4)")


def _add_output(p, formats=("csv", "json"), default="csv"):
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=formats, default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leggett", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", help="exact quantum E3 and the Leggett bound L3")
    _add_grid(p)
    _add_output(p)
    p.add_argument("--plot", help="write a figure of the curves to this path")

    p = sub.add_parser("sweep", help="simulate a photon-counting sweep")
    _add_grid(p)
    _add_output(p)
    p.add_argument("--mean-counts", type=float, default=1e4,
                   help="expected coincidences per projection combination (default 1e4)")
    p.add_argument("--visibility", type=float, default=0.96, help="correlation visibility (default 0.96)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--counts", help="also write the simulated count CSV here")
    p.add_argument("--metadata", help="metadata JSON path (default: <output>.meta.json)")
    p.add_argument("--plot", help="write an E3 figure to this path")

    p = sub.add_parser("analyze", help="analyze a count CSV")
    p.add_argument("--input", "-i", required=True)
    _add_output(p)
    p.add_argument("--plot", help="write an E3 figure to this path")

    p = sub.add_parser("hvmax", help="maximize E3 over Leggett hidden-variable models")
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p, default="json")
    return parser


def _grid(args):
    try:
        return sweep_grid(args.phi_start, args.phi_stop, args.phi_step)
    except InvalidInputError as exc:
        raise UsageError(f"bad grid: {exc}") from None


def _grid_spec(args) -> dict:
    return {"start": args.phi_start, "stop": args.phi_stop, "step": args.phi_step}


def _write(path, text, stdout):
    if path is None:
        stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def _json_number(x):
    return None if isinstance(x, float) and math.isnan(x) else x


def _reports_json(reports, extra=None) -> str:
    doc = dict(extra or {})
    doc["reports"] = [
        {"phi_deg": r.phi, "e3_est": _json_number(r.e3_est), "sigma_e3": _json_number(r.sigma_e3),
         "l3": r.l3, "n_sigma": _json_number(r.n_sigma), "flags": list(r.flags)}
        for r in reports
    ]
    return json.dumps(doc, indent=2) + "\n"


def cmd_curves(args, stdout) -> int:
    grid = _grid(args)
    points = [E3Point(t.phi, e3_quantum(t.phi), leggett_bound(t.phi)) for t in grid]
    window = ideal_violation_window()
    if args.format == "json":
        text = json.dumps({
            "points": [{"phi_deg": p.phi, "e3": p.e3, "l3": p.l3} for p in points],
            "violation_window_deg": list(window),
        }, indent=2) + "\n"
    else:
        text = write_e3_csv(points)
        text += "# " + json.dumps({"violation_window_deg": list(window)}) + "\n"
    _write(args.output, text, stdout)
    if args.plot:
        from .plotting import plot_theory
        plot_theory(args.plot, window)
    return EXIT_OK


def cmd_sweep(args, stdout) -> int:
    grid = _grid(args)
    try:
        cfg = counting.ExperimentConfig(args.mean_counts, args.visibility, args.seed)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    labeled = counting.simulate_sweep_counts(grid, cfg)
    reports = counting.analyze_counts(labeled)
    meta = counting.sweep_metadata(cfg, _grid_spec(args), reports)

    if args.format == "json":
        _write(args.output, _reports_json(reports, {"metadata": meta}), stdout)
    else:
        _write(args.output, counting.write_report_csv(reports), stdout)
    meta_path = args.metadata or (f"{args.output}.meta.json" if args.output else None)
    if meta_path:
        _write(meta_path, counting.dumps_metadata(meta), stdout)
    if args.counts:
        _write(args.counts, counting.write_counts_csv(labeled), stdout)
    if args.plot:
        from .plotting import plot_sweep
        plot_sweep(reports, args.plot)
    return EXIT_OK


def cmd_analyze(args, stdout) -> int:
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from None
    try:
        labeled = counting.ingest_counts(text)
    except counting.CountsFormatError as exc:
        raise DataError(f"{args.input}: {exc}") from None
    reports = counting.analyze_counts(labeled)
    if args.format == "json":
        _write(args.output, _reports_json(reports), stdout)
    else:
        _write(args.output, counting.write_report_csv(reports), stdout)
    if args.plot:
        from .plotting import plot_sweep
        plot_sweep(reports, args.plot)
    if not any(r.complete for r in reports):
        raise DataError("no angle has all six setting pairs")
    return EXIT_OK


def cmd_hvmax(args, stdout) -> int:
    if not 0 <= args.phi <= 180:
        raise UsageError(f"--phi must lie in [0, 180], got {args.phi}")
    if args.budget < MIN_BUDGET:
        raise UsageError(f"--budget must be at least {MIN_BUDGET}, got {args.budget}")
    opt = maximize_e3(build_triad(args.phi), budget=args.budget, seed=args.seed)
    if args.format == "json":
        text = opt.to_json() + "\n"
    else:
        d = opt.to_dict()
        text = "phi_deg,best_e3,l3,gap,budget\n" + ",".join(
            fmt(d[k]) if k != "budget" else str(d[k]) for k in ("phi_deg", "best_e3", "l3", "gap", "budget")
        ) + "\n"
    _write(args.output, text, stdout)
    return EXIT_OK


COMMANDS = {"curves": cmd_curves, "sweep": cmd_sweep, "analyze": cmd_analyze, "hvmax": cmd_hvmax}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        print(f"leggett {args.command}: error: {exc}", file=stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"leggett {args.command}: error: {exc}", file=stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
