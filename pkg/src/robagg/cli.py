"""Command-line entry point: ``robagg <command> ...``.

Exit codes: 0 success, 1 a numeric check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .adversary import explore_iid_conjecture, optimize_blackwell, optimize_ci
from .constructions import CONSTRUCTION_NAMES, parse_construction
from .errors import InternalConsistencyError, RobAggError
from .loss import MixedAdversary, min_loss_against_mixture, mixture_relative_loss, monte_carlo_loss, relative_loss
from .many_experts import counting_scheme_error, regret_curve
from .reproduce import GROUPS, reproduce
from .schemes import SCHEME_NAMES, parse_scheme
from .serialize import dump_json, load_structure, structure_to_json

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT = 0, 1, 2
ENUMERATION_LIMIT = 1 << 16
OUTPUT_ENV = "ROBAGG_OUTPUT_DIR"


class InputError(Exception):
    pass


def _num(v):
    if isinstance(v, Fraction):
        return float(v)
    return v


def _exact(v):
    return str(v) if isinstance(v, Fraction) else None


def _profile_count(s) -> int:
    return math.prod(s.signal_counts)


def _load_source(args):
    if args.construct and args.input:
        raise InputError("give either --construct or --input, not both")
    if args.construct:
        return parse_construction(args.construct)
    if args.input:
        return load_structure(args.input)
    raise InputError("a structure is required: --construct NAME or --input FILE")


def _provenance(args, reference=None, tolerance=None):
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    out = {"command": args.command, "config": config, "version": __version__}
    if reference is not None:
        out["reference"] = reference
    if tolerance is not None:
        out["tolerance"] = tolerance
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_evaluate(args):
    scheme = parse_scheme(args.scheme)
    source = _load_source(args)
    atoms = source.atoms if isinstance(source, MixedAdversary) else ((1, source),)
    enumerable = all(_profile_count(s) <= ENUMERATION_LIMIT for _, s in atoms)
    if args.samples or not enumerable:
        if args.seed is None:
            raise InputError("Monte Carlo evaluation needs --seed")
        est = monte_carlo_loss(source, scheme, args.samples or 100_000, args.seed, workers=args.workers)
        result = {"method": "monte-carlo", **est.to_dict()}
        return {"result": result, "provenance": _provenance(args)}, EXIT_OK
    if isinstance(source, MixedAdversary):
        rel = mixture_relative_loss(source, scheme)
        best = min_loss_against_mixture(source)
        result = {
            "method": "exact",
            "relative_loss": _num(rel),
            "relative_loss_exact": _exact(rel),
            "best_reply_loss": _num(best),
            "best_reply_loss_exact": _exact(best),
        }
    else:
        report = relative_loss(source, scheme)
        result = {"method": "exact", **report.to_dict(verbose=args.verbose)}
        result["relative_loss_exact"] = _exact(report.relative_loss)
    return {"result": result, "provenance": _provenance(args)}, EXIT_OK


def cmd_optimize(args):
    scheme = parse_scheme(args.scheme)
    if args.family == "blackwell":
        res = optimize_blackwell(scheme, grid=args.grid or 400, top=args.restarts, verify_tol=args.tol)
        result = res.to_dict()
    elif args.family == "ci":
        res = optimize_ci(scheme, grid=args.grid or 200, top=args.restarts, verify_tol=args.tol)
        result = res.to_dict()
        result["argmax_labels"] = ["mu", "y1", "z1", "y2", "z2"]
    else:
        result = explore_iid_conjecture(scheme, grid=args.grid or 200)
    return {"result": result, "provenance": _provenance(args, tolerance=args.tol)}, EXIT_OK


def cmd_construct(args):
    obj = parse_construction(args.name)
    return {"structure": structure_to_json(obj), "provenance": _provenance(args)}, EXIT_OK


def cmd_simulate_many(args):
    res = counting_scheme_error(args.k, args.n, args.trials, args.seed, m=args.m, workers=args.workers)
    out = res.to_dict()
    status = EXIT_OK if res.within_bound else EXIT_NUMERIC
    return {"rows": [out], "provenance": _provenance(args, reference="exp(-n/(72 k^2))", tolerance="3 SE")}, status


def cmd_regret_curve(args):
    try:
        ns = [int(v) for v in args.n.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"--n must be a comma-separated list of integers: {exc}") from exc
    rows = regret_curve(ns, args.seed, trials=args.trials)
    status = EXIT_OK if all(r.ok for r in rows) else EXIT_NUMERIC
    ref = "1/4 - 3 sqrt(ln n / n)"
    return {"rows": [r.to_dict() for r in rows], "provenance": _provenance(args, reference=ref)}, status


def cmd_reproduce(args):
    only = [g.strip() for g in args.only.split(",")] if args.only else None
    rows = reproduce(only, blackwell_grid=args.blackwell_grid, ci_grid=args.ci_grid, seed=args.seed)
    status = EXIT_OK if all(r.passed for r in rows) else EXIT_NUMERIC
    return {"rows": [r.to_dict() for r in rows], "provenance": _provenance(args)}, status


# ---------------------------------------------------------------------------
# output


def _render(payload, fmt):
    if fmt == "json":
        return dump_json(payload) + "\n"
    rows = payload.get("rows")
    if rows is None:
        body = payload.get("result", payload.get("structure"))
        rows = [_flatten(body)]
    if fmt == "csv":
        buf = io.StringIO()
        cols = list(rows[0])
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k)) for k in cols})
        return buf.getvalue()
    cols = list(rows[0])
    cells = [[_cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        else:
            out[f"{prefix}{k}"] = v
    return out


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def _write(text, args):
    sys.stdout.write(text)
    target = args.output
    if target is None and os.environ.get(OUTPUT_ENV):
        ext = {"json": "json", "csv": "csv", "table": "txt"}[args.format]
        target = Path(os.environ[OUTPUT_ENV]) / f"{args.command}.{ext}"
    if target is not None:
        target = Path(target)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)


# ---------------------------------------------------------------------------
# parser


def _common(p, default_format="json"):
    p.add_argument("--format", "--out", dest="format", choices=("json", "csv", "table"), default=default_format)
    p.add_argument("--output", help=f"also write to this file (default: ${OUTPUT_ENV}/<command>.<ext> if set)")


def build_parser() -> argparse.ArgumentParser:
    epilog = "schemes: " + ", ".join(SCHEME_NAMES) + "\nconstructions: " + ", ".join(CONSTRUCTION_NAMES)
    parser = argparse.ArgumentParser(
        prog="robagg",
        description="Worst-case square-loss analysis of forecast aggregation schemes.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="relative loss of a scheme on a structure or mixture")
    p.add_argument("--scheme", required=True)
    p.add_argument("--construct", help="named construction")
    p.add_argument("--input", help="structure JSON file")
    p.add_argument("--samples", type=int, default=0, help="force Monte Carlo with this many samples")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--verbose", action="store_true", help="include per-profile rows")
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="adversarial best reply to a scheme")
    p.add_argument("--family", choices=("blackwell", "ci", "iid"), required=True)
    p.add_argument("--scheme", required=True)
    p.add_argument("--grid", type=int, help="grid points per unit (default 400 blackwell, 200 otherwise)")
    p.add_argument("--restarts", type=int, default=32, help="local refinements from the best grid cells")
    p.add_argument("--tol", type=float, default=1e-7, help="closed form vs enumeration tolerance")
    _common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("construct", help="emit a named construction as JSON")
    p.add_argument("--name", required=True)
    _common(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("simulate-many", help="counting-scheme error against the chain adversary")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--m", type=int, help="fixed link (default: draw from the chain weights)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    _common(p, "csv")
    p.set_defaults(func=cmd_simulate_many)

    p = sub.add_parser("regret-curve", help="finite-n regret floor for many experts")
    p.add_argument("--n", required=True, help="comma-separated expert counts")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=0, help="Monte Carlo counting-scheme trials per row")
    _common(p, "csv")
    p.set_defaults(func=cmd_regret_curve)

    p = sub.add_parser("reproduce", help="recompute the headline constants with pass/fail")
    p.add_argument("--only", help="comma-separated groups: " + ", ".join(GROUPS))
    p.add_argument("--blackwell-grid", type=int, default=400)
    p.add_argument("--ci-grid", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    _common(p, "table")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload, status = args.func(args)
    except InternalConsistencyError as exc:
        print(f"error: numeric check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, RobAggError, ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _write(_render(payload, args.format), args)
    return status


if __name__ == "__main__":
    sys.exit(main())
