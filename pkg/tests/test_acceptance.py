"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

import itertools
import json
import math
import random
import sys
import tempfile
import time
from pathlib import Path

from _battery import instances, label, specs
from fcriccati.cli import main as cli_main
from fcriccati.expr import parse
from fcriccati.linalg2 import (Form5, MatrixFunction, companion, expm_companion,
                               form5, funcomm_check, fundamental_matrix)
from fcriccati.riccati import (Coefficients, Detection, NotIntegrableForm, closed_form,
                               crosscheck_paper_formula, detect_family,
                               riccati_to_linear, solve_closed_form)
from fcriccati.verify import Grid, compare, find_poles, residual

RESULTS = {}


def record(number, title, passed, detail):
    line = f"criterion {number} {title}: {'PASS' if passed else 'FAIL'} ({detail})"
    RESULTS[number] = line
    print(line)
    return passed


# 1 -------------------------------------------------------------------------------

def test_family_battery():
    grid = Grid(0.0, 1.0, 101)
    worst_res = worst_cmp = 0.0
    failures = []
    started = time.perf_counter()
    for spec, y0 in instances():
        sol = solve_closed_form(spec, 0.0, y0)
        res = residual(sol, grid)
        err = compare(sol, grid).max_abs_err
        worst_res, worst_cmp = max(worst_res, res), max(worst_cmp, err)
        if res > 1e-6 or err > 1e-6:
            failures.append(f"{label(spec, y0)}: residual={res:.3g} compare={err:.3g}")
    elapsed = time.perf_counter() - started
    ok = not failures and elapsed <= 30.0
    record(1, "family battery", ok,
           f"worst residual {worst_res:.2e}, worst compare {worst_cmp:.2e}, "
           f"{elapsed:.1f} s, {len(failures)} failures")
    assert ok, failures or f"took {elapsed:.1f} s"


# 2 -------------------------------------------------------------------------------

def test_detection_round_trip():
    grid = Grid(0.0, 1.0, 11).values()
    t = parse("t")
    missed, false_accepts, total = [], [], 0
    for spec in specs():
        total += 1
        coeffs = spec.coefficients()
        found = detect_family(coeffs, grid)
        if not (isinstance(found, Detection) and abs(found.c1 - spec.c1) <= 1e-9
                and abs(found.c2 - spec.c2) <= 1e-9):
            missed.append(f"{label(spec)} -> {found}")
        perturbed = coeffs.replace(Q=coeffs.Q + 0.1 * t)
        if not isinstance(detect_family(perturbed, grid, tol=1e-6), NotIntegrableForm):
            false_accepts.append(label(spec))
    ok = not missed and not false_accepts
    record(2, "detection round trip", ok,
           f"recall {total - len(missed)}/{total}, "
           f"false accepts {len(false_accepts)}/{total}")
    assert ok, (missed, false_accepts)


# 3 -------------------------------------------------------------------------------

def test_companion_constancy():
    grid = Grid(0.0, 1.0, 11).values()
    worst = 0.0
    for spec in specs():
        coeffs = spec.coefficients()
        target = companion(spec.c1, spec.c2)
        for t in grid:
            worst = max(worst, (riccati_to_linear(coeffs, t) - target).max_abs())
    ok = worst <= 1e-10
    record(3, "companion constancy", ok, f"worst entry deviation {worst:.2e}")
    assert ok


# 4 -------------------------------------------------------------------------------

def test_printed_formula_agreement():
    tgrid = Grid(0.0, 1.0, 50).values()
    worst, checked, failures = 0.0, 0, []
    for spec, y0 in instances():
        if spec.c2 ** 2 + 4 * spec.c1 <= 0:
            continue
        checked += 1
        report = crosscheck_paper_formula(spec.kind, spec.g, spec.c1, spec.c2, 0.0,
                                          tgrid, y0=y0, scale=spec.C)
        worst = max(worst, report.max_abs_diff)
        if not report.passed(1e-8):
            curve = "\n".join(f"  t={t:.6f} closed={a:.12g} printed={b:.12g}"
                              for t, a, b in report.points)
            failures.append(f"{label(spec, y0)}: fitted C={report.fitted_C!r}, "
                            f"max diff {report.max_abs_diff:.3g}\n{curve}")
    ok = not failures
    record(4, "printed formula agreement", ok,
           f"{checked} hyperbolic instances, worst difference {worst:.2e}, "
           f"{len(failures)} over tolerance")
    for f in failures:
        print(f)
    assert ok, "\n".join(failures)


# 5 -------------------------------------------------------------------------------

def _exponential_properties():
    cs = (-2, -1, 0, 1, 2)
    taus = (0.1, 0.5, 1.0)
    for c1, c2 in itertools.product(cs, cs):
        for s, t in itertools.product(taus, taus):
            whole = expm_companion(c1, c2, s + t)
            split = expm_companion(c1, c2, s) @ expm_companion(c1, c2, t)
            if (whole - split).frobenius() > 1e-9 * (1 + whole.frobenius()):
                yield f"semigroup c1={c1} c2={c2} s={s} t={t}"
        for tau in taus:
            det = expm_companion(c1, c2, tau).det()
            if abs(det - math.exp(c2 * tau)) > 1e-9 * math.exp(c2 * tau):
                yield f"determinant c1={c1} c2={c2} tau={tau}"
    for c1 in (-1 + 1e-10, -1 - 1e-10):
        forced = "hyperbolic" if 4 + 4 * c1 > 0 else "trigonometric"
        for tau in (0.1, 0.5, 1.0, 2.0):
            near = expm_companion(c1, 2.0, tau, regime=forced)
            flat = expm_companion(c1, 2.0, tau, regime="degenerate")
            if (near - flat).max_abs() > 1e-5:
                yield f"continuity c1={c1} tau={tau}"
    h = 1e-4
    for a11, a12 in itertools.product(("1", "t", "sin(t)"), repeat=2):
        a = form5(parse(a11), parse(a12), -1.2, 0.7)
        for t in (0.3, 0.7, 1.0):
            x = fundamental_matrix(a, t, 1e-13)
            dx = (fundamental_matrix(a, t + h, 1e-13)
                  - fundamental_matrix(a, t - h, 1e-13)).scale(1 / (2 * h))
            if (dx - a.at(t) @ x).max_abs() > 1e-5:
                yield f"X'=AX a11={a11} a12={a12} t={t}"


def test_matrix_exponential_suite():
    started = time.perf_counter()
    failures = list(_exponential_properties())
    elapsed = time.perf_counter() - started
    ok = not failures and elapsed <= 5.0
    record(5, "matrix exponential suite", ok,
           f"{len(failures)} property violations, {elapsed:.2f} s")
    assert ok, failures or f"took {elapsed:.2f} s"


# 6 -------------------------------------------------------------------------------

def _random_entry(rng):
    a, b = round(rng.uniform(-3, 3), 3), round(rng.uniform(-3, 3), 3)
    k = rng.randint(1, 3)
    return parse(rng.choice([
        f"{a}*t^{k} + {b}",
        f"{a}*sin({k}*t) + {b}*t",
        f"{a}*cos({b}*t)",
        f"{a} + {b}*t + t^{k}*sin(t)",
    ]))


def test_commutativity():
    rng = random.Random(20261015)
    failed = 0
    worst = 0.0
    for _ in range(100):
        a = Form5(_random_entry(rng), _random_entry(rng),
                  rng.uniform(-3, 3), rng.uniform(-3, 3))
        report = funcomm_check(a, [rng.uniform(-2, 2) for _ in range(10)])
        worst = max(worst, report.max_commutator_norm)
        failed += not report.passed
    non_example = MatrixFunction(*(parse(s) for s in ("0", "1", "-t", "0")))
    rejected = not funcomm_check(non_example, Grid(0.0, 1.0, 10).values()).passed
    ok = failed == 0 and rejected
    record(6, "functional commutativity", ok,
           f"{100 - failed}/100 form instances pass, worst norm {worst:.1e}, "
           f"non-example {'rejected' if rejected else 'accepted'}")
    assert ok


# 7 -------------------------------------------------------------------------------

def _solve_csv(P, Q, F, directory):
    doc = {"mode": "explicit", "P": P, "Q": Q, "F": F,
           "initial": {"t0": 0, "y0": 0}, "grid": {"start": 0, "end": 1, "points": 11}}
    problem = Path(directory) / "problem.json"
    out = Path(directory) / "out.csv"
    problem.write_text(json.dumps(doc))
    code = cli_main(["solve", "--input", str(problem), "--output", str(out)])
    assert code == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    return {round(float(t), 12): float(y) for t, y, _ in rows}


def test_analytic_anchors():
    with tempfile.TemporaryDirectory() as tmp:
        tan = _solve_csv("1", "0", "1", tmp)
        tanh = _solve_csv("-1", "0", "1", tmp)
    errors = {
        "tan(0.5)": abs(tan[0.5] - math.tan(0.5)),
        "tan(1)": abs(tan[1.0] - math.tan(1.0)),
        "tanh(1)": abs(tanh[1.0] - math.tanh(1.0)),
    }
    tan_coeffs = Coefficients(parse("1"), parse("0"), parse("1"))
    tan_solution = closed_form(tan_coeffs, -1, 0, 0.0, 0.0)
    poles = find_poles(tan_solution, 0.0, 2.0)
    pole_err = abs(poles[0] - math.pi / 2) if poles else math.inf
    ok = max(errors.values()) <= 1e-7 and pole_err <= 1e-9
    worst = max(errors, key=errors.get)
    record(7, "analytic anchors", ok,
           f"worst {worst} error {errors[worst]:.1e}, pole error {pole_err:.1e}")
    assert ok, (errors, poles)


if __name__ == "__main__":
    tests = [test_family_battery, test_detection_round_trip, test_companion_constancy,
             test_printed_formula_agreement, test_matrix_exponential_suite,
             test_commutativity, test_analytic_anchors]
    failed = 0
    for test in tests:
        try:
            test()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
