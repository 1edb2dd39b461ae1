"""Command-line interface: ``logcalib <subcommand> [flags]``.

Exit status is 0 on success, 2 on invalid input and 3 when a numerical
search fails to converge. Numbers are written with 15 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from logcalib import __version__
from logcalib.calibrate import PrivacyBudget, privacy_profile, scale_for_budget
from logcalib.errors import ConvergenceError, DomainError
from logcalib.experiments import (CSV_HEADER, ExperimentConfig, default_seed,
                                  mean_vector_experiment, variance_ratio_table)
from logcalib.noise import parse_family
from logcalib.optimize import DEFAULT_GRID, optimize_p

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3


class CliError(Exception):
    def __init__(self, flag, message):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


def _num(x):
    """Round to 15 significant digits; JSON has no infinities, so use strings."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(format(x, ".15g"))


def _text(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".15g")
    return str(x)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _render(payload, rows, columns, fmt):
    """Serialize either a JSON document or a table in csv/plain form."""
    if fmt == "json":
        return json.dumps(_clean(payload), sort_keys=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_text(row[c]) for c in columns])
        return buf.getvalue()
    if len(rows) == 1:
        width = max(len(c) for c in columns)
        return "".join(f"{c.ljust(width)}  {_text(rows[0][c])}\n" for c in columns)
    lines = [f"{k}: {_text(v)}" for k, v in payload.items()
             if isinstance(v, (int, float, str, np.floating)) and not isinstance(v, bool)]
    lines.append("  ".join(columns))
    lines += ["  ".join(_text(row[c]) for c in columns) for row in rows]
    return "\n".join(lines) + "\n"


# -- Validation helpers -----------------------------------------------------

def _family(flag, spec):
    try:
        return parse_family(spec)
    except DomainError as err:
        raise CliError(flag, str(err)) from None


def _require(flag, ok, message):
    if not ok:
        raise CliError(flag, message)


def _budget(args):
    eps, delta = args.eps, args.delta
    _require("--eps", not math.isnan(eps) and eps >= 0, f"must be >= 0 (got {eps!r})")
    _require("--delta", not math.isnan(delta) and 0 <= delta < 1,
             f"must lie in [0, 1) (got {delta!r})")
    _require("--eps/--delta", not (eps == 0 and delta == 0),
             "epsilon and delta cannot both be 0")
    return PrivacyBudget(eps, delta)


def _floats(flag, text):
    try:
        values = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise CliError(flag, f"expected a comma-separated list of numbers, got {text!r}") from None
    _require(flag, len(values) > 0, "list must not be empty")
    return values


def _delta_zero_check(family, delta, flag="--delta"):
    if delta != 0:
        return
    if math.isfinite(family.support_radius) or math.isinf(family.mlr_limit(1.0, 1.0)):
        raise CliError(flag, f"{family.name} cannot achieve delta = 0: it is infeasible "
                             "for any finite scale; use delta > 0")


# -- Subcommands ------------------------------------------------------------

def _cmd_calibrate(args):
    family = _family("--family", args.family)
    budget = _budget(args)
    _require("--sensitivity", args.sensitivity >= 0, f"must be >= 0 (got {args.sensitivity!r})")
    if args.sensitivity > 0:
        _delta_zero_check(family, budget.delta)
    res = scale_for_budget(family, budget, args.sensitivity, method=args.method)
    row = {"family": family.name, "epsilon": budget.epsilon, "delta": budget.delta,
           "sensitivity": args.sensitivity, **asdict(res)}
    return row, [row], list(row)


def _cmd_profile(args):
    family = _family("--family", args.family)
    _require("--eps", args.eps >= 0, f"must be >= 0 (got {args.eps!r})")
    _require("--sensitivity", args.sensitivity >= 0, f"must be >= 0 (got {args.sensitivity!r})")
    _require("--scale-min", args.scale_min > 0, f"must be > 0 (got {args.scale_min!r})")
    _require("--scale-max", args.scale_max >= args.scale_min,
             "must be >= --scale-min")
    _require("--points", args.points >= 1, f"must be >= 1 (got {args.points!r})")
    if args.log:
        scales = np.geomspace(args.scale_min, args.scale_max, args.points)
    else:
        scales = np.linspace(args.scale_min, args.scale_max, args.points)
    rows = [{"scale": float(s),
             "delta": privacy_profile(family, args.eps, args.sensitivity, float(s))}
            for s in scales]
    payload = {"family": family.name, "epsilon": args.eps, "sensitivity": args.sensitivity,
               "rows": rows}
    return payload, rows, ["scale", "delta"]


def _cmd_compare(args):
    fa, fb = _family("--a", args.a), _family("--b", args.b)
    eps_grid = _floats("--eps-grid", args.eps_grid)
    delta_grid = _floats("--delta-grid", args.delta_grid)
    _require("--eps-grid", all(e >= 0 for e in eps_grid), "entries must be >= 0")
    _require("--delta-grid", all(0 <= d < 1 for d in delta_grid), "entries must lie in [0, 1)")
    table = variance_ratio_table((fa, fb), eps_grid, delta_grid)
    rows = [asdict(r) for r in table.rows]
    payload = {"a": table.family_a, "b": table.family_b, "rows": rows,
               "crossings": [{"delta": d, "epsilon": e} for d, e in table.crossings]}
    return payload, rows, ["epsilon", "delta", "rho", "v", "feasible"]


def _cmd_optimize(args):
    budget = _budget(args)
    _require("--dim", args.dim >= 1, f"must be a positive integer (got {args.dim!r})")
    _require("--nu", args.nu >= 0, f"must be >= 0 (got {args.nu!r})")
    _require("--diam", args.diam >= 0, f"must be >= 0 (got {args.diam!r})")
    grid = _floats("--grid", args.grid) if args.grid else list(DEFAULT_GRID)
    _require("--grid", all(r >= 1 for r in grid), "entries must be >= 1")
    out = optimize_p(budget, args.dim, args.nu, args.diam, grid)
    rows = [asdict(g) for g in out.grid_evaluations]
    payload = {"r_star": out.r_star, "scale_star": out.scale_star, "mse_star": out.mse_star,
               "grid_evaluations": rows,
               "failures": [{"r": r, "error": msg} for r, msg in out.failures]}
    return payload, rows, ["r", "scale", "mse"]


def _cmd_sample(args):
    family = _family("--family", args.family)
    _require("--scale", args.scale >= 0, f"must be >= 0 (got {args.scale!r})")
    _require("--count", args.count >= 1, f"must be a positive integer (got {args.count!r})")
    rng = np.random.default_rng(args.seed)
    values = args.scale * family.sample(args.count, rng)
    rows = [{"value": float(v)} for v in values]
    payload = {"family": family.name, "scale": args.scale, "seed": args.seed,
               "values": [float(v) for v in values]}
    return payload, rows, ["value"]


def _cmd_experiment(args):
    data = {}
    if args.config:
        path = Path(args.config)
        try:
            data = json.loads(path.read_text())
        except OSError as err:
            raise CliError("--config", f"cannot read {path}: {err.strerror}") from None
        except json.JSONDecodeError as err:
            raise CliError("--config", f"invalid JSON in {path}: {err}") from None
        _require("--config", isinstance(data, dict), "must hold a flat JSON object")
    if args.seed is not None:
        data["seed"] = args.seed
    try:
        config = ExperimentConfig.from_mapping(data)
    except (DomainError, TypeError) as err:
        raise CliError("--config", str(err)) from None
    result = mean_vector_experiment(config)
    rows = [asdict(r) for r in result.summary]
    if args.output:
        out = Path(args.output)
        out.write_text(result.to_csv())
        out.with_suffix(".meta.json").write_text(
            json.dumps(_clean(result.metadata()), indent=2) + "\n")
    payload = {"metadata": result.metadata(), "rows": rows}
    return payload, rows, list(CSV_HEADER)


def _format_parent(default="json"):
    # A fresh parent per subcommand: argparse shares parent actions, defaults included.
    parent = _Parser(add_help=False)
    parent.add_argument("--format", choices=("json", "csv", "plain"), default=default)
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="logcalib", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"logcalib {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("calibrate", parents=[_format_parent()],
                       help="minimal scale for a budget")
    p.add_argument("--family", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--sensitivity", type=float, required=True)
    p.add_argument("--method", choices=("auto", "bisection", "closed"), default="auto")
    p.set_defaults(handler=_cmd_calibrate)

    p = sub.add_parser("profile", parents=[_format_parent()],
                       help="tight delta over a scale range")
    p.add_argument("--family", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--sensitivity", type=float, required=True)
    p.add_argument("--scale-min", type=float, required=True)
    p.add_argument("--scale-max", type=float, required=True)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--log", action="store_true", help="geometric scale spacing")
    p.set_defaults(handler=_cmd_profile)

    p = sub.add_parser("compare", parents=[_format_parent()],
                       help="variance-ratio table of two families")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--eps-grid", required=True)
    p.add_argument("--delta-grid", required=True)
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("optimize-p", parents=[_format_parent()],
                       help="MSE-optimal Subbotin index")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--diam", type=float, required=True)
    p.add_argument("--grid")
    p.set_defaults(handler=_cmd_optimize)

    p = sub.add_parser("sample", parents=[_format_parent()],
                       help="draw scaled noise variates")
    p.add_argument("--family", required=True)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(handler=_cmd_sample)

    p = sub.add_parser("experiment", parents=[_format_parent("csv")],
                       help="mean-vector experiment")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", help="write the CSV here plus a .meta.json sidecar")
    p.set_defaults(handler=_cmd_experiment)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command == "sample" and args.seed is None:
            args.seed = default_seed()
        payload, rows, columns = args.handler(args)
    except CliError as err:
        print(f"logcalib: error: {err}", file=stderr)
        return EXIT_INVALID
    except DomainError as err:
        print(f"logcalib: error: {err}", file=stderr)
        return EXIT_INVALID
    except ConvergenceError as err:
        print(f"logcalib: did not converge: {err}", file=stderr)
        return EXIT_NONCONVERGED
    stdout.write(_render(payload, rows, columns, args.format))
    return EXIT_OK


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
