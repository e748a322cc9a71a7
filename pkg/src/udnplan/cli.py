"""``udnplan`` command line: validate | estimate | sweep | figure.

Exit codes: 0 success, 2 usage or invalid input, 3 infeasible planning result.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from . import __version__, figures, harness, mc, planner
from .analytic import DomainError
from .scenario import Scenario, ScenarioError, load_scenario, parse_assignments, validate

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 2, 3

log = logging.getLogger("udnplan")


def _common(p, sim=True):
    p.add_argument("--scenario", metavar="FILE", help="scenario file (key = value lines)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="K=V",
                   help="override one scenario key; repeatable")
    if sim:
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.add_argument("--out", metavar="DIR", help="write CSV into DIR instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="udnplan", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"udnplan {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario and print its parameter hash")
    _common(p, sim=False)

    p = sub.add_parser("estimate", help="Monte Carlo estimate and analytic bound for one regime")
    _common(p)
    p.add_argument("--regime", choices=mc.REGIMES, default="mu_dl")
    p.add_argument("--crn", action="store_true", help="common random numbers across parameter sets")

    p = sub.add_parser("sweep", help="one row per value of a swept scenario key")
    _common(p)
    p.add_argument("--regime", choices=mc.REGIMES, default="mu_dl")
    p.add_argument("--param", required=True, help="scenario key to sweep")
    p.add_argument("--grid", required=True, help="comma-separated, strictly increasing values")
    p.add_argument("--outputs", default="mc,analytic", help="subset of mc,analytic,planner")
    p.add_argument("--crn", action="store_true", help="common random numbers across grid points")

    p = sub.add_parser("figure", help="regenerate one figure as CSV + SVG")
    p.add_argument("figure_id", choices=figures.FIGURES)
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="K=V")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", metavar="DIR", default="figures")
    p.add_argument("--no-timestamp", action="store_true", help="omit the SVG generation time")
    return ap


def _scenario(args) -> Scenario:
    sc = load_scenario(args.scenario) if args.scenario else Scenario()
    sc = sc.with_overrides(**parse_assignments(args.overrides))
    extra = {k: getattr(args, k, None) for k in ("seed", "trials")}
    return validate(sc.with_overrides(**{k: v for k, v in extra.items() if v is not None}))


def _parse_grid(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise harness.UsageError(f"grid values must be numbers, got {text!r}") from None


def _emit(args, name, text):
    if args.out:
        path = Path(args.out) / f"{name}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
        print(path, file=sys.stderr)
    else:
        sys.stdout.write(text)


def _comments(sc: Scenario):
    return [f"seed = {sc.sim.seed}"]


def cmd_validate(args):
    sc = _scenario(args)
    print(f"ok {sc.params_hash()}")
    return EXIT_OK


def cmd_estimate(args):
    sc = _scenario(args)
    outputs = ("mc", "analytic")
    row = harness.point_row(args.regime, sc, outputs, workers=args.workers, crn=args.crn)
    _emit(args, "estimate", harness.csv_text(harness.columns(outputs), [row], _comments(sc)))
    return EXIT_OK


def cmd_sweep(args):
    base = _scenario(args)
    outputs = tuple(o.strip() for o in args.outputs.split(",") if o.strip())
    spec = harness.SweepSpec(args.param, _parse_grid(args.grid), outputs=outputs, regime=args.regime)
    rows = harness.run_sweep(spec, base, workers=args.workers, crn=args.crn)
    _emit(args, "sweep", harness.csv_text(harness.columns(outputs), rows, _comments(base)))
    if "planner" in outputs and not all(r["feasible"] for r in rows):
        log.error("planner: uplink ratio infeasible at %d grid point(s)",
                  sum(not r["feasible"] for r in rows))
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_figure(args):
    art = figures.make_figure(args.figure_id, args.out, parse_assignments(args.overrides),
                              seed=args.seed, trials=args.trials, workers=args.workers,
                              timestamp=not args.no_timestamp)
    print(art.csv_path)
    print(art.svg_path)
    for p in art.extra_csv:
        print(p)
    for k, v in art.summary.items():
        print(f"  {k} = {v:.6g}" if isinstance(v, float) else f"  {k} = {v}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "estimate": cmd_estimate, "sweep": cmd_sweep, "figure": cmd_figure}


def _tag(exc) -> str:
    return type(exc).__module__.rsplit(".", 1)[-1]


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"udnplan: warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="udnplan: %(message)s", stream=sys.stderr)
    shown, warnings.showwarning = warnings.showwarning, _show_warning
    try:
        return COMMANDS[args.command](args)
    except planner.Infeasible as exc:
        print(f"udnplan: planner: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ScenarioError, DomainError, harness.UsageError, planner.NoSolution) as exc:
        print(f"udnplan: {_tag(exc)}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"udnplan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        warnings.showwarning = shown


if __name__ == "__main__":
    sys.exit(main())
