"""Command-line surface: `check` runs suites, `derive` prints tensors."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import chart as ch
from . import genconn as gc
from .errors import MetallicLabError, ParseError, SchemaError, ValidationError
from .report import ScenarioReport
from .scenario import KNOWN_SUITES, load_scenario
from .suites import ScenarioContext, run_suites

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metalliclab",
        description="Numerical checks for metallic Riemannian structures and "
        "the generalized structures they induce.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run a scenario's verification suites")
    check.add_argument("scenario", help="path to a scenario file")
    check.add_argument(
        "--suite",
        action="append",
        choices=KNOWN_SUITES,
        help="run only this suite (repeatable; default: the scenario's list)",
    )
    check.add_argument("--samples", type=int, default=None, help="sample-point count")
    check.add_argument("--seed", type=int, default=None, help="sampling seed")
    check.add_argument(
        "--tol", type=float, default=None, help="base tolerance for geometric checks"
    )
    check.add_argument(
        "--format",
        choices=("human", "machine"),
        default="human",
        help="report format (machine is stable JSON)",
    )

    derive = sub.add_parser("derive", help="evaluate a derived tensor at a point")
    derive.add_argument("scenario", help="path to a scenario file")
    derive.add_argument(
        "--what",
        required=True,
        choices=("christoffel", "curvature", "nijenhuis", "gen-nijenhuis"),
    )
    derive.add_argument(
        "--at", required=True, help="comma-separated coordinates of the point"
    )
    return parser


def emit_report(report: ScenarioReport, fmt: str) -> str:
    if fmt == "machine":
        return report.to_json()
    return report.to_table()


def _cmd_check(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.suite:
        unknown = [s for s in args.suite if s not in scenario.suites]
        if unknown:
            raise ValidationError(
                [f"suite {s!r} not declared by scenario {scenario.name!r}" for s in unknown]
            )
    report = run_suites(
        scenario,
        suites=args.suite,
        samples=args.samples,
        seed=args.seed,
        tolerance=args.tol,
    )
    sys.stdout.write(emit_report(report, args.format))
    return EXIT_PASS if report.overall_pass else EXIT_FAIL


def _cmd_derive(args) -> int:
    scenario = load_scenario(args.scenario)
    try:
        point = np.array([float(v) for v in args.at.split(",")])
    except ValueError as err:
        raise ValidationError([f"--at must be comma-separated numbers: {err}"]) from err
    if point.shape != (scenario.chart.dim,):
        raise ValidationError(
            [f"--at must supply {scenario.chart.dim} coordinates, got {point.shape[0]}"]
        )
    pts = point.reshape(1, -1)
    ctx = ScenarioContext(scenario)

    def printer(arr):
        return np.array2string(
            np.asarray(arr), precision=12, suppress_small=False, separator=", "
        )
    if args.what == "christoffel":
        values = ch.eval_exprs(ctx.levi_civita.comps, pts)[0]
        sys.stdout.write("Gamma^k_(i j) [k, i, j]:\n" + printer(values) + "\n")
    elif args.what == "curvature":
        values = ch.eval_exprs(ctx.bundle(ctx.levi_civita).riemann, pts)[0]
        sys.stdout.write("R^l_(i j k) [l, i, j, k]:\n" + printer(values) + "\n")
    elif args.what == "nijenhuis":
        values = ch.eval_exprs(ctx.NJ_exprs, pts)[0]
        sys.stdout.write("N^k_(i j) [k, i, j]:\n" + printer(values) + "\n")
    else:  # gen-nijenhuis
        sections = gc.basis_sections(scenario.chart)
        jhat = ctx.jm_field
        jhat2 = ch.mat_mul(jhat, jhat)
        n2 = 2 * scenario.chart.dim
        values = np.zeros((n2, n2, n2))
        for a in range(n2):
            for b in range(a + 1, n2):
                nij = gc.gen_nijenhuis(ctx.conn, jhat, sections[a], sections[b], jhat2)
                column = nij.eval(pts)[0]
                values[:, a, b] = column
                values[:, b, a] = -column
        sys.stdout.write(
            "N^A_(B C) of the generalized metallic structure [A, B, C]:\n"
            + printer(values)
            + "\n"
        )
    return EXIT_PASS


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return _cmd_check(args)
        return _cmd_derive(args)
    except (SchemaError, ParseError, ValidationError, FileNotFoundError, OSError) as err:
        sys.stderr.write(f"input error: {err}\n")
        return EXIT_INPUT_ERROR
    except MetallicLabError as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_INPUT_ERROR


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
