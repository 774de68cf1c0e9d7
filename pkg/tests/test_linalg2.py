import itertools
import math
import random

import pytest

from fcriccati.errors import EvalError
from fcriccati.expr import parse
from fcriccati.linalg2 import (IDENTITY, Form5, Mat2, MatrixFunction, commutator,
                               companion, expm_companion, expm_structured, form5,
                               funcomm_check, fundamental_matrix)


def taylor_expm(m: Mat2, terms=30):
    """exp(m) by scaling and squaring around a truncated power series."""
    norm = m.frobenius()
    s = max(0, math.ceil(math.log2(norm)) + 1) if norm > 0 else 0
    a = m.scale(2.0 ** -s)
    result, term = IDENTITY, IDENTITY
    for k in range(1, terms):
        term = (term @ a).scale(1.0 / k)
        result = result + term
    for _ in range(s):
        result = result @ result
    return result


def assert_mat_close(a, b, tol):
    diff = (a - b).max_abs()
    assert diff <= tol, f"{a} vs {b}: {diff}"


# --- commutator ----------------------------------------------------------------

def test_commutator_with_itself_is_zero():
    m = Mat2(1.5, -2.0, 0.25, 7.0)
    assert commutator(m, m) == Mat2(0.0, 0.0, 0.0, 0.0)


def test_commutator_hand_multiplied():
    m = Mat2.from_rows([[0, 1], [0, 0]])
    n = Mat2.from_rows([[0, 1], [-1, 0]])
    assert commutator(m, n) == Mat2.from_rows([[-1, 0], [0, 1]])


def test_commutator_polynomial_in_same_matrix():
    m = Mat2.from_rows([[0, 1], [2, 3]])
    n = IDENTITY + m.scale(2.0)
    assert commutator(m, n) == Mat2(0.0, 0.0, 0.0, 0.0)


def test_mat2_rejects_non_finite():
    with pytest.raises(ValueError):
        Mat2(math.inf, 0, 0, 0)


# --- functional commutativity ------------------------------------------------------

def test_funcomm_form5_passes():
    report = funcomm_check(form5(parse("t"), parse("1+t"), 2, 3), [0, 1])
    assert report.passed
    assert report.max_commutator_norm <= 1e-15


def test_funcomm_non_example_fails_with_sqrt2():
    a = MatrixFunction(*(parse(s) for s in ("0", "1", "-t", "0")))
    report = funcomm_check(a, [0, 1])
    assert not report.passed
    assert report.max_commutator_norm == pytest.approx(math.sqrt(2), rel=1e-15)


def test_funcomm_constant_matrix_passes():
    report = funcomm_check(lambda t: Mat2(1, 2, 3, 4), [0, 0.5, 3, -7])
    assert report.passed and report.max_commutator_norm == 0.0


def test_funcomm_needs_two_samples():
    with pytest.raises(ValueError):
        funcomm_check(lambda t: IDENTITY, [0.0])


def test_funcomm_propagates_eval_error():
    with pytest.raises(EvalError):
        funcomm_check(form5(parse("1/t"), parse("1"), 1, 1), [0, 1])


def test_form5_entries_by_construction():
    a = form5(parse("sin(t)"), parse("t^2"), -1.5, 2.5)
    for t in (0.0, 0.4, 1.7):
        m = a.at(t)
        assert m.a21 == -1.5 * m.a12
        assert m.a22 == m.a11 + 2.5 * m.a12


# --- exponentials ------------------------------------------------------------------

def test_expm_companion_nilpotent():
    assert expm_companion(0, 0, 1) == Mat2(1.0, 1.0, 0.0, 1.0)


def test_expm_companion_hyperbolic():
    expected = Mat2(math.cosh(1), math.sinh(1), math.sinh(1), math.cosh(1))
    assert_mat_close(expm_companion(1, 0, 1), expected, 1e-15)


@pytest.mark.parametrize("tau", [0.0, 0.3, 1.0, 2.5, -4.0])
def test_expm_companion_rotation(tau):
    expected = Mat2(math.cos(tau), math.sin(tau), -math.sin(tau), math.cos(tau))
    assert_mat_close(expm_companion(-1, 0, tau), expected, 1e-15)


@pytest.mark.parametrize("c1, c2, tau", [
    (c1, c2, tau)
    for c1, c2 in itertools.product((-3, -1, -0.25, 0, 0.5, 2), (-2, -1, 0, 1, 3))
    for tau in (-1.3, 0.2, 1.0, 2.0)
])
def test_expm_companion_matches_series(c1, c2, tau):
    exact = expm_companion(c1, c2, tau)
    oracle = taylor_expm(companion(c1, c2).scale(tau))
    assert_mat_close(exact, oracle, 1e-11 * (1 + oracle.max_abs()))


def test_expm_companion_overflow():
    with pytest.raises(OverflowError):
        expm_companion(1, 0, 1000)
    with pytest.raises(OverflowError):
        expm_companion(0, 4, 400)


CS = (-2, -1, 0, 1, 2)
TAUS = (0.1, 0.5, 1.0)


@pytest.mark.parametrize("c1, c2", list(itertools.product(CS, CS)))
def test_semigroup(c1, c2):
    for s, t in itertools.product(TAUS, TAUS):
        whole = expm_companion(c1, c2, s + t)
        split = expm_companion(c1, c2, s) @ expm_companion(c1, c2, t)
        scale = 1 + whole.frobenius()
        assert (whole - split).frobenius() <= 1e-9 * scale


@pytest.mark.parametrize("c1, c2", list(itertools.product(CS, CS)))
def test_liouville_determinant(c1, c2):
    for tau in (-1.0, 0.1, 0.5, 1.0, 2.0):
        det = expm_companion(c1, c2, tau).det()
        assert det == pytest.approx(math.exp(c2 * tau), rel=1e-9)


@pytest.mark.parametrize("c1", [-1 + 1e-10, -1 - 1e-10])
def test_regime_continuity(c1):
    c2 = 2.0
    forced = "hyperbolic" if c2 * c2 + 4 * c1 > 0 else "trigonometric"
    for tau in (0.1, 0.5, 1.0, 2.0):
        near = expm_companion(c1, c2, tau, regime=forced)
        flat = expm_companion(c1, c2, tau, regime="degenerate")
        assert_mat_close(near, flat, 1e-5)


def test_degenerate_threshold_selects_repeated_root_formula():
    # |disc| = 4e-13 falls under the threshold
    m = expm_companion(-1 + 1e-13, 2, 1.0)
    assert m == expm_companion(-1 + 1e-13, 2, 1.0, regime="degenerate")


def test_expm_structured_examples():
    assert expm_structured(0, 0, 3, -1) == IDENTITY
    assert_mat_close(expm_structured(1, 0, 2, 2), IDENTITY.scale(math.e), 1e-15)
    assert expm_structured(0, 1, 0, 0) == Mat2(1.0, 1.0, 0.0, 1.0)


def test_expm_structured_matches_series():
    p, q, c1, c2 = 0.4, -0.7, 1.5, -0.5
    generator = IDENTITY.scale(p) + companion(c1, c2).scale(q)
    assert_mat_close(expm_structured(p, q, c1, c2), taylor_expm(generator), 1e-13)


# --- fundamental matrix ----------------------------------------------------------

def test_fundamental_matrix_identity_at_zero():
    a = form5(parse("sin(t)"), parse("exp(t)"), 1.3, -0.2)
    assert fundamental_matrix(a, 0.0) == IDENTITY


def test_fundamental_matrix_companion_case():
    expected = Mat2(math.cosh(1), math.sinh(1), math.sinh(1), math.cosh(1))
    assert_mat_close(fundamental_matrix(form5(0, 1, 1, 0), 1.0), expected, 1e-12)


def test_fundamental_matrix_diagonal_case():
    assert_mat_close(fundamental_matrix(form5(1, 0, 3, 4), 1.0),
                     IDENTITY.scale(math.e), 1e-12)


ENTRIES = ("1", "t", "sin(t)")


@pytest.mark.parametrize("a11, a12", list(itertools.product(ENTRIES, ENTRIES)))
def test_fundamental_matrix_solves_system(a11, a12):
    a = form5(parse(a11), parse(a12), -1.2, 0.7)
    h = 1e-4
    for t in (0.3, 0.7, 1.0):
        x = fundamental_matrix(a, t, tol=1e-13)
        dx = (fundamental_matrix(a, t + h, 1e-13) - fundamental_matrix(a, t - h, 1e-13)).scale(1 / (2 * h))
        assert_mat_close(dx, a.at(t) @ x, 1e-5)


def test_funcomm_holds_for_random_form5():
    rng = random.Random(7)
    pieces = ["t", "t^2", "sin(t)", "cos(2*t)", "1+t^3", "exp(-t)"]
    for _ in range(25):
        a = Form5(parse(rng.choice(pieces)), parse(rng.choice(pieces)),
                  rng.uniform(-3, 3), rng.uniform(-3, 3))
        assert funcomm_check(a, [rng.uniform(-2, 2) for _ in range(6)]).passed
