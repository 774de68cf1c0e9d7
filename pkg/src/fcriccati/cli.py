"""Command-line front end.

Subcommands: ``solve``, ``detect``, ``verify``, ``commute-check``.

Exit codes: 0 success, 2 bad input, 3 not an integrable form,
4 numeric failure, 5 verification failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Any

from . import __version__
from .errors import (EmptyGrid, EvalError, FitError, InvalidConstant,
                     PoleError, QuadratureError, RegimeError)
from .expr import Expr, parse
from .linalg2 import Form5, MatrixFunction, funcomm_check, sample_points
from .riccati import (Coefficients, FamilySpec, Kind, NotIntegrableForm,
                      closed_form, crosscheck_paper_formula, detect_family)
from .verify import POLE_RADIUS, Grid, compare, find_poles, residual

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_INTEGRABLE = 3
EXIT_NUMERIC = 4
EXIT_FAILED = 5

NUMERIC_ERRORS = (EvalError, QuadratureError, OverflowError, PoleError,
                  FitError, EmptyGrid, ZeroDivisionError)


class ProblemError(ValueError):
    pass


def fmt(x: float) -> str:
    """12 significant digits, locale independent."""
    return "%.12g" % x


@dataclass
class Problem:
    mode: str
    coeffs: Coefficients          # equation under test
    spec: FamilySpec | None
    t0: float | None
    y0: float | None
    grid: Grid | None
    quad_tol: float
    rel_tol: float
    abs_tol: float

    def require_initial(self):
        if self.t0 is None or self.grid is None:
            raise ProblemError("problem needs 'initial' and 'grid' members")


def _number(doc, key, where="problem"):
    if key not in doc:
        raise ProblemError(f"{where}: missing member {key!r}")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemError(f"{where}: member {key!r} must be a number")
    if not math.isfinite(value):
        raise ProblemError(f"{where}: member {key!r} must be finite")
    return float(value)


def _expression(doc, key, where="problem"):
    if key not in doc:
        raise ProblemError(f"{where}: missing member {key!r}")
    text = doc[key]
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        raise ProblemError(f"{where}: member {key!r} must be an expression string")
    try:
        return parse(text)
    except SyntaxError as exc:
        raise ProblemError(f"{where}: member {key!r}: {exc}") from exc


def read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemError(f"malformed JSON in {path}: {exc}") from exc


def load_problem(doc: Any, args: argparse.Namespace) -> Problem:
    """Validate a problem document and build the equation it describes.

    In family mode, optional ``P``/``Q``/``F`` members replace the
    corresponding family coefficient in the equation under test while the
    closed form is still built from the family.
    """
    if not isinstance(doc, dict):
        raise ProblemError("problem must be a JSON object")
    mode = doc.get("mode")
    if mode not in ("family", "explicit"):
        raise ProblemError("member 'mode' must be 'family' or 'explicit'")

    tols = doc.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ProblemError("member 'tolerances' must be an object")
    quad = args.tol if getattr(args, "tol", None) is not None else tols.get("quad", 1e-10)
    rel = args.rel_tol if getattr(args, "rel_tol", None) is not None else tols.get("relTol", 1e-10)
    abs_ = args.abs_tol if getattr(args, "abs_tol", None) is not None else tols.get("absTol", 1e-12)
    for name, v in (("quad", quad), ("relTol", rel), ("absTol", abs_)):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ProblemError(f"tolerance {name!r} must be a positive number")

    t0 = y0 = None
    if "initial" in doc:
        init = doc["initial"]
        if not isinstance(init, dict):
            raise ProblemError("member 'initial' must be an object")
        t0, y0 = _number(init, "t0", "initial"), _number(init, "y0", "initial")
    grid = None
    if "grid" in doc:
        g = doc["grid"]
        if not isinstance(g, dict):
            raise ProblemError("member 'grid' must be an object")
        points = g.get("points")
        if isinstance(points, bool) or not isinstance(points, int):
            raise ProblemError("grid: member 'points' must be an integer")
        try:
            grid = Grid(_number(g, "start", "grid"), _number(g, "end", "grid"), points)
        except ValueError as exc:
            raise ProblemError(f"grid: {exc}") from exc
        if t0 is not None and abs(grid.start - t0) > 1e-12 * (1 + abs(t0)):
            raise ProblemError("grid.start must equal initial.t0")

    spec = None
    if mode == "family":
        kind = doc.get("kind")
        if kind not in ("F", "P", "Q"):
            raise ProblemError("member 'kind' must be 'F', 'P' or 'Q'")
        C = _number(doc, "C") if "C" in doc else 1.0
        try:
            spec = FamilySpec(Kind(kind), _number(doc, "c1"), _number(doc, "c2"),
                              _expression(doc, "g"), C)
        except InvalidConstant as exc:
            raise ProblemError(str(exc)) from exc
        coeffs = spec.coefficients(quad)
        overrides = {k: _expression(doc, k) for k in ("P", "Q", "F") if k in doc}
        if overrides:
            coeffs = coeffs.replace(**overrides)
    else:
        coeffs = Coefficients(_expression(doc, "P"), _expression(doc, "Q"),
                              _expression(doc, "F"))
    return Problem(mode, coeffs, spec, t0, y0, grid, float(quad), float(rel), float(abs_))


def detection_grid(problem: Problem) -> list[float]:
    if problem.grid is not None and problem.grid.points >= 3:
        return problem.grid.values()
    if problem.grid is not None:
        return Grid(problem.grid.start, problem.grid.end, 11).values()
    return Grid(0.0, 1.0, 11).values()


def build_solution(problem: Problem, detect_tol: float):
    """Closed-form solution for the problem, or a :class:`NotIntegrableForm`."""
    problem.require_initial()
    if problem.spec is not None:
        spec = problem.spec
        family = spec.coefficients(problem.quad_tol)
        return closed_form(family, spec.c1, spec.c2, problem.t0, problem.y0)
    found = detect_family(problem.coeffs, detection_grid(problem), detect_tol)
    if isinstance(found, NotIntegrableForm):
        return found
    return closed_form(problem.coeffs, found.c1, found.c2, problem.t0, problem.y0)


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".fcriccati-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def solution_csv(solution, grid: Grid, pole_radius: float) -> str:
    poles = solution.pole_times(grid.start - pole_radius, grid.end + pole_radius)
    lines = ["t,y,pole_flag"]
    for t in grid.values():
        if any(abs(t - p) < pole_radius for p in poles):
            lines.append(f"{fmt(t)},,1")
            continue
        try:
            y = solution.evaluate(t)
        except PoleError:
            lines.append(f"{fmt(t)},,1")
            continue
        lines.append(f"{fmt(t)},{fmt(y)},0")
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    problem = load_problem(read_json(args.input), args)
    solution = build_solution(problem, args.detect_tol)
    if isinstance(solution, NotIntegrableForm):
        print("not integrable form", file=sys.stderr)
        return EXIT_NOT_INTEGRABLE
    text = solution_csv(solution, problem.grid, args.pole_radius)
    if args.output:
        _write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_detect(args) -> int:
    problem = load_problem(read_json(args.input), args)
    found = detect_family(problem.coeffs, detection_grid(problem), args.detect_tol)
    if isinstance(found, NotIntegrableForm):
        print("not integrable form")
        return EXIT_NOT_INTEGRABLE
    print(f"c1={fmt(found.c1)} c2={fmt(found.c2)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    problem = load_problem(read_json(args.input), args)
    solution = build_solution(problem, args.detect_tol)
    if isinstance(solution, NotIntegrableForm):
        print("not integrable form")
        return EXIT_NOT_INTEGRABLE
    grid, radius = problem.grid, args.pole_radius
    ok = True
    cmp = compare(solution, grid, problem.rel_tol, problem.abs_tol, radius,
                  coeffs=problem.coeffs)
    cmp_ok = cmp.max_abs_err <= args.compare_tol
    ok &= cmp_ok
    print(f"max_abs_err={fmt(cmp.max_abs_err)}")
    print(f"compared_points={cmp.compared}")
    print(f"skipped_points={cmp.skipped}")
    print(f"integrator_termination={cmp.termination}")
    print(f"first_pole={'none' if cmp.first_pole is None else fmt(cmp.first_pole)}")
    print(f"compare_pass={str(cmp_ok).lower()}")

    res = residual(solution, grid, radius, coeffs=problem.coeffs)
    res_ok = res <= args.residual_tol
    ok &= res_ok
    print(f"residual={fmt(res)}")
    print(f"residual_pass={str(res_ok).lower()}")

    if problem.spec is not None:
        spec = problem.spec
        try:
            report = crosscheck_paper_formula(
                spec.kind, spec.g, spec.c1, spec.c2, problem.t0, grid.values(),
                y0=problem.y0, scale=spec.C, tol=problem.quad_tol, pole_radius=radius)
        except RegimeError:
            print("printed_formula_regime=skipped")
        except FitError as exc:
            print(f"printed_formula_fit=failed ({exc})")
            ok = False
        else:
            printed_ok = report.max_abs_diff <= args.printed_tol
            ok &= printed_ok
            print(f"fitted_C={fmt(report.fitted_C)}")
            print(f"printed_max_abs_diff={fmt(report.max_abs_diff)}")
            print(f"printed_pass={str(printed_ok).lower()}")
    else:
        print("printed_formula=not applicable (explicit mode)")

    poles = find_poles(solution, grid.start, grid.end)
    print("poles=" + ";".join(fmt(p) for p in poles))
    print(f"pass={str(ok).lower()}")
    return EXIT_OK if ok else EXIT_FAILED


def load_matrix(doc: Any):
    if not isinstance(doc, dict):
        raise ProblemError("matrix file must be a JSON object")
    if "entries" in doc:
        entries = doc["entries"]
        if not isinstance(entries, list) or len(entries) != 4:
            raise ProblemError("member 'entries' must list 4 expressions")
        exprs = [_expression({"e": e}, "e", f"entries[{i}]") for i, e in enumerate(entries)]
        return MatrixFunction(*exprs)
    return Form5(_expression(doc, "a11"), _expression(doc, "a12"),
                 _number(doc, "c1"), _number(doc, "c2"))


def cmd_commute_check(args) -> int:
    matrix = load_matrix(read_json(args.input))
    if args.samples < 2:
        raise ProblemError("--samples must be at least 2")
    report = funcomm_check(matrix, sample_points(args.start, args.end, args.samples))
    print(f"max_commutator_norm={fmt(report.max_commutator_norm)}")
    print(f"threshold={fmt(report.threshold)}")
    print(f"pass={str(report.passed).lower()}")
    return EXIT_OK if report.passed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcriccati",
        description="Closed-form solutions of integrable Riccati families.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output=False):
        p.add_argument("--input", required=True, help="problem JSON file")
        if output:
            p.add_argument("--output", help="CSV output path (default: stdout)")
        p.add_argument("--tol", type=float, help="quadrature tolerance")
        p.add_argument("--rel-tol", type=float, help="integrator relative tolerance")
        p.add_argument("--abs-tol", type=float, help="integrator absolute tolerance")
        p.add_argument("--detect-tol", type=float, default=1e-9,
                       help="family detection tolerance (default 1e-9)")
        p.add_argument("--pole-radius", type=float, default=POLE_RADIUS,
                       help="pole exclusion radius (default 0.05)")

    p = sub.add_parser("solve", help="write the closed-form solution as CSV")
    common(p, output=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("detect", help="recover (c1, c2) from the coefficients")
    common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("verify", help="check the closed form against numerics")
    common(p)
    p.add_argument("--compare-tol", type=float, default=1e-6)
    p.add_argument("--residual-tol", type=float, default=1e-6)
    p.add_argument("--printed-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("commute-check", help="test A(t')A(t'') = A(t'')A(t')")
    p.add_argument("--input", required=True, help="matrix JSON file")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--end", type=float, default=1.0)
    p.set_defaults(func=cmd_commute_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
