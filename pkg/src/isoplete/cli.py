"""Command-line entry point.

Subcommands: ``diagnose``, ``complete``, ``forecast`` and ``bench``. Every
option can also be given in a ``--config`` file of ``key=value`` lines, with
keys spelled like the long option (``max-iters`` or ``max_iters``). Command
line flags win over the config file.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from .bench import (FAMILIES, GRID_HEADER, ExperimentGrid, run_holdout_eval, run_phase_grid,
                    run_rank_constrained_fit, run_rcn_sweep, synthetic_ratings)
from .diagnostics import diagnose
from .errors import IsopleteError
from .forecasting import SeriesTask, forecast
from .solvers import SOLVERS, SolverConfig, get_solver

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _solver_options(p):
    p.add_argument("--solver", choices=sorted(SOLVERS), default="isodp")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.add_argument("--inner-dim", dest="p", type=int, default=None)
    p.add_argument("--no-continuation", action="store_true")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isoplete", description="Matrix completion under deterministic sampling.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("diagnose", help="identifiability report for a matrix and a mask")
    d.add_argument("--config", type=Path)
    d.add_argument("--matrix", type=Path, required=True, help="dense matrix CSV")
    d.add_argument("--mask", type=Path, required=True, help="1-based i,j lines")
    d.add_argument("--no-witness", action="store_true")
    d.add_argument("--report", type=Path, help="JSON output (default stdout)")

    c = sub.add_parser("complete", help="complete a partially observed matrix")
    c.add_argument("--config", type=Path)
    c.add_argument("--observed", type=Path, required=True, help="1-based i,j,value lines")
    c.add_argument("--rows", type=int, required=True)
    c.add_argument("--cols", type=int, required=True)
    _solver_options(c)
    c.add_argument("--output", type=Path, help="completed matrix CSV")
    c.add_argument("--report", type=Path, help="JSON output (default stdout)")

    f = sub.add_parser("forecast", help="forecast a series by circulant completion")
    f.add_argument("--config", type=Path)
    f.add_argument("--series", type=Path, required=True, help="one value per line")
    f.add_argument("--length", type=int, required=True, help="total length m")
    f.add_argument("--observed", type=int, default=None,
                   help="number of leading samples to use (default: all in the file)")
    _solver_options(f)
    f.set_defaults(solver="convex")
    f.add_argument("--output", type=Path, help="completed series CSV")
    f.add_argument("--report", type=Path, help="JSON output (default stdout)")

    b = sub.add_parser("bench", help="run an experiment protocol")
    b.add_argument("--config", type=Path)
    b.add_argument("--kind", choices=("phase", "isomerism", "rcn", "rankfit", "holdout"),
                   default="phase")
    b.add_argument("--family", choices=FAMILIES, default="uniform")
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--size", type=int, default=50)
    b.add_argument("--ranks", type=str, default=None, help="comma-separated rank axis")
    b.add_argument("--fractions", type=str, default=None, help="comma-separated fraction axis")
    b.add_argument("--solvers", type=str, default="convex,isodp")
    b.add_argument("--full-scale", action="store_true", help="100x100, 20 trials, fine axes")
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--out-dir", type=Path, required=True)
    return parser


def _read_config(path: Path, sub: argparse.ArgumentParser) -> dict:
    known = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    aliases = {}
    for a in known.values():
        for opt in a.option_strings:
            aliases[opt.lstrip("-").replace("-", "_")] = a.dest
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        dest = aliases.get(key.replace("-", "_"))
        if dest is None:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        action = known[dest]
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"{path}:{lineno}: {key} expects a boolean")
            out[dest] = value.lower() in ("true", "1", "yes")
            continue
        try:
            conv = action.type(value) if action.type else value
        except (TypeError, ValueError):
            raise UsageError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
        if action.choices is not None and conv not in action.choices:
            raise UsageError(f"{path}:{lineno}: {key} must be one of {sorted(action.choices)}")
        out[dest] = conv
    return out


def parse_args(argv):
    argv = list(argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in COMMANDS), None)
    if known.config is not None and command is not None:
        sub = parser._subparsers._group_actions[0].choices[command]
        values = _read_config(known.config, sub)
        # required options may come from the config file alone
        for a in sub._actions:
            if a.dest in values:
                a.required = False
        sub.set_defaults(**values)
    return parser.parse_args(argv)


def _check_inputs(*paths):
    for p in paths:
        if p is not None and not p.is_file():
            raise UsageError(f"input file not found: {p}")


def _check_outputs(*paths):
    for p in paths:
        if p is not None and not p.resolve().parent.is_dir():
            raise UsageError(f"output directory does not exist: {p.parent}")


def _emit(obj: dict, path: Path | None) -> None:
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    text = json.dumps(obj, indent=2, default=_json_default)
    if path is None:
        print(text)
    else:
        path.write_text(text + "\n", encoding="utf-8")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _solver_config(args) -> SolverConfig:
    return SolverConfig(lam=args.lam, p=args.p, max_iters=args.max_iters, rel_tol=args.rel_tol,
                        seed=args.seed, continuation=None if args.no_continuation else 0.5)


def _cmd_diagnose(args) -> int:
    _check_inputs(args.matrix, args.mask)
    _check_outputs(args.report)
    L = io.load_matrix(args.matrix)
    omega = io.load_mask(args.mask, L.shape)
    report = diagnose(L, omega, with_witness=not args.no_witness)
    _emit({"command": "diagnose", **report.to_dict()}, args.report)
    return 0


def _cmd_complete(args) -> int:
    _check_inputs(args.observed)
    _check_outputs(args.output, args.report)
    if args.rows < 1 or args.cols < 1:
        raise UsageError("--rows and --cols must be positive")
    cfg = _solver_config(args)
    partial = io.load_partial_matrix(args.observed, (args.rows, args.cols))
    result = get_solver(args.solver)(partial, cfg)
    if args.output is not None:
        io.save_matrix(args.output, result.L_hat)
    _emit({"command": "complete", **result.to_dict()}, args.report)
    return 0


def _cmd_forecast(args) -> int:
    _check_inputs(args.series)
    _check_outputs(args.output, args.report)
    cfg = _solver_config(args)
    x = io.load_series(args.series)
    l = x.size if args.observed is None else args.observed
    if not 1 <= l <= min(x.size, args.length):
        raise UsageError("--observed must lie in 1..min(series length, --length)")
    out = forecast(SeriesTask(x[:l], args.length, args.solver, cfg))
    if args.output is not None:
        io.save_series(args.output, out.x_hat)
    _emit({
        "command": "forecast",
        "length": args.length,
        "observed": l,
        "forecast": out.x_hat[l:].tolist(),
        "solve": out.result.to_dict(),
        "diagnostics": None if out.report is None else out.report.to_dict(),
    }, args.report)
    return 0


def _axis(text, kind):
    if text is None:
        return None
    try:
        return tuple(kind(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"bad axis {text!r}") from None


def _cmd_bench(args) -> int:
    if not args.out_dir.is_dir():
        raise UsageError(f"output directory does not exist: {args.out_dir}")
    solvers = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
    for s in solvers:
        if s not in SOLVERS:
            raise UsageError(f"unknown solver {s!r}")
    out = args.out_dir
    summary = {"command": "bench", "kind": args.kind, "seed": args.seed}

    if args.kind in ("phase", "isomerism"):
        if args.full_scale:
            grid = ExperimentGrid.full_scale(args.family, args.seed)
        else:
            kw = {}
            ranks = _axis(args.ranks, int)
            fracs = _axis(args.fractions, float)
            if ranks:
                kw["rank_axis"] = ranks
            if fracs:
                kw["fraction_axis"] = fracs
            grid = ExperimentGrid(mask_family=args.family, trials=args.trials, seed=args.seed,
                                  m=args.size, n=args.size, **kw)
        if args.kind == "phase":
            report = run_phase_grid(grid, solvers, workers=args.workers)
            io.write_csv(out / f"phase_{args.family}.csv", GRID_HEADER, report.rows())
        else:
            report = run_phase_grid(grid, (), workers=args.workers)
        iso = report.isomeric_counts()
        io.write_csv(out / f"isomerism_{args.family}.csv", GRID_HEADER,
                     [(grid.rank_axis[a], grid.fraction_axis[b], "isomeric", int(iso[a, b]),
                       grid.trials) for a, b in grid.cells()])
        summary.update(report.to_dict())
    elif args.kind == "rcn":
        rows = run_rcn_sweep()
        io.write_csv(out / "rcn.csv", ("m", "rho0", "missing_rate", "gamma_pair"), rows)
        summary["rows"] = [list(r) for r in rows]
    elif args.kind == "rankfit":
        from .sampling import PartialMatrix, gen_diagonal_band_mask
        rng = np.random.default_rng(args.seed)
        L0 = rng.standard_normal((50, 10)) @ rng.standard_normal((10, 100))
        partial = PartialMatrix.from_dense(L0, gen_diagonal_band_mask(50, 100, 0.26))
        fits = run_rank_constrained_fit(partial, solvers)
        rows = [(f.solver, f.target_rank, f.achieved_rank, f.lam, f.train_mse) for f in fits]
        io.write_csv(out / "rankfit.csv", ("solver", "target_rank", "rank", "lambda", "train_mse"),
                     rows)
        summary["rows"] = [list(r) for r in rows]
    else:
        triplets = synthetic_ratings(seed=args.seed)
        rep = run_holdout_eval(triplets, solvers=solvers, seed=args.seed)
        io.write_csv(out / "holdout.csv", ("method", "test_mse"), sorted(rep.test_mse.items()))
        summary.update(rep.to_dict())
    _emit(summary, out / f"bench_{args.kind}.json")
    return 0


COMMANDS = {
    "diagnose": _cmd_diagnose,
    "complete": _cmd_complete,
    "forecast": _cmd_forecast,
    "bench": _cmd_bench,
}


def cli_main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:
        # argparse --help / --version
        return int(exc.code or 0)
    except (IsopleteError, OSError, ValueError) as exc:
        print(f"isoplete: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())
