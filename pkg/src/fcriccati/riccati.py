"""Integrable Riccati families ``y' = P y^2 + Q y + F`` and their closed forms.

Substituting ``y = -u'/(P u)`` turns the Riccati equation into the linear
system ``u' = z``, ``z' = -P F u + (P'/P + Q) z``.  When ``-P F = c1`` and
``P'/P + Q = c2`` are both constant the system matrix is the constant
companion matrix ``[[0, 1], [c1, c2]]``, and one free function determines
the other two coefficients:

* ``F`` free:  ``P = -c1/F``, ``Q = c2 + F'/F``
* ``P`` free:  ``F = -c1/P``, ``Q = c2 - P'/P``
* ``Q`` free:  ``P = C exp(c2 t - I(t))``, ``F = -(c1/C) exp(-c2 t + I(t))``,
  with ``I(t)`` the integral of ``Q`` over ``[0, t]``.

Solutions are evaluated by propagating the projective state ``(u, z)`` with
the closed-form exponential of the companion matrix.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EvalError, FitError, InvalidConstant, PoleError, RegimeError
from .expr import Expr, Integral, T, Unary, const, differentiate
from .linalg2 import DEGENERATE_DISCRIMINANT, Mat2, Vec2, expm_companion

__all__ = [
    "Kind", "Coefficients", "FamilySpec", "ClosedFormSolution", "Detection",
    "NotIntegrableForm", "CrossCheckReport",
    "make_family_F", "make_family_P", "make_family_Q", "detect_family",
    "riccati_to_linear", "closed_form", "solve_closed_form",
    "paper_solution_F", "paper_solution_P", "paper_solution_Q",
    "crosscheck_paper_formula", "POLE_THRESHOLD",
]

#: |u| below this fraction of |(u, z)| counts as a pole
POLE_THRESHOLD = 1e-13


class Kind(str, enum.Enum):
    F = "F"
    P = "P"
    Q = "Q"


@dataclass(frozen=True)
class Coefficients:
    P: Expr
    Q: Expr
    F: Expr
    dP: Expr = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.dP is None:
            object.__setattr__(self, "dP", differentiate(self.P))

    def rhs(self, t: float, y: float) -> float:
        return (self.P.evaluate(t) * y + self.Q.evaluate(t)) * y + self.F.evaluate(t)

    def replace(self, **changes) -> "Coefficients":
        parts = {"P": self.P, "Q": self.Q, "F": self.F}
        parts.update(changes)
        return Coefficients(**parts)


def _check_c1(c1):
    if c1 == 0:
        raise InvalidConstant("c1 must be nonzero")


def make_family_F(g: Expr, c1: float, c2: float) -> Coefficients:
    """Coefficients with ``F = g`` free."""
    _check_c1(c1)
    return Coefficients(P=const(-c1) / g, Q=const(c2) + differentiate(g) / g, F=g)


def make_family_P(g: Expr, c1: float, c2: float) -> Coefficients:
    """Coefficients with ``P = g`` free."""
    _check_c1(c1)
    return Coefficients(P=g, Q=const(c2) - differentiate(g) / g, F=const(-c1) / g)


def make_family_Q(g: Expr, c1: float, c2: float, C: float = 1.0,
                  tol: float = 1e-10) -> Coefficients:
    """Coefficients with ``Q = g`` free; ``C`` scales ``P``.

    The running integral of ``g`` starts at ``t = 0``; another base point
    would only rescale ``C``.
    """
    _check_c1(c1)
    if C == 0:
        raise InvalidConstant("C must be nonzero for the Q family")
    running = Integral(g, tol)
    P = const(C) * _exp(const(c2) * T - running)
    F = const(-c1 / C) * _exp(running - const(c2) * T)
    return Coefficients(P=P, Q=g, F=F)


def _exp(x):
    return Unary("exp", x)


@dataclass(frozen=True)
class FamilySpec:
    kind: Kind
    c1: float
    c2: float
    g: Expr
    C: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        _check_c1(self.c1)
        if self.kind is Kind.Q and self.C == 0:
            raise InvalidConstant("C must be nonzero for the Q family")

    def coefficients(self, tol: float = 1e-10) -> Coefficients:
        if self.kind is Kind.F:
            return make_family_F(self.g, self.c1, self.c2)
        if self.kind is Kind.P:
            return make_family_P(self.g, self.c1, self.c2)
        return make_family_Q(self.g, self.c1, self.c2, self.C, tol)


# detection ---------------------------------------------------------------------

@dataclass(frozen=True)
class Detection:
    c1: float
    c2: float
    c1_deviation: float
    c2_deviation: float
    integrable = True


@dataclass(frozen=True)
class NotIntegrableForm:
    """Detection verdict: ``-P F`` or ``P'/P + Q`` is not constant on the grid."""

    c1_mean: float
    c2_mean: float
    c1_deviation: float
    c2_deviation: float
    integrable = False

    def __bool__(self):
        return False


def detect_family(coeffs: Coefficients, grid: Sequence[float],
                  tol: float = 1e-9) -> Detection | NotIntegrableForm:
    """Recover ``(c1, c2)`` if ``-P F`` and ``P'/P + Q`` are constant on ``grid``.

    Each quantity is accepted when its largest deviation from the grid mean
    is at most ``tol * (1 + |mean|)``.
    """
    grid = [float(t) for t in grid]
    if len(grid) < 3:
        raise ValueError("detect_family needs at least 3 grid points")
    c1s, c2s = [], []
    for t in grid:
        p = coeffs.P.evaluate(t)
        if p == 0.0:
            raise EvalError("P vanishes", coeffs.P, t)
        c1s.append(-p * coeffs.F.evaluate(t))
        c2s.append(coeffs.dP.evaluate(t) / p + coeffs.Q.evaluate(t))
    m1 = math.fsum(c1s) / len(c1s)
    m2 = math.fsum(c2s) / len(c2s)
    d1 = max(abs(x - m1) for x in c1s)
    d2 = max(abs(x - m2) for x in c2s)
    if d1 <= tol * (1 + abs(m1)) and d2 <= tol * (1 + abs(m2)):
        return Detection(m1, m2, d1, d2)
    return NotIntegrableForm(m1, m2, d1, d2)


def riccati_to_linear(coeffs: Coefficients, t: float) -> Mat2:
    """System matrix ``[[0, 1], [-P F, P'/P + Q]]`` of the linearized equation at ``t``."""
    p = coeffs.P.evaluate(t)
    if p == 0.0:
        raise EvalError("P vanishes", coeffs.P, t)
    return Mat2(0.0, 1.0, -p * coeffs.F.evaluate(t),
                coeffs.dP.evaluate(t) / p + coeffs.Q.evaluate(t))


# closed-form solutions ---------------------------------------------------------

@dataclass(frozen=True)
class ClosedFormSolution:
    """``y(t) = -z(t) / (P(t) u(t))`` with ``(u, z)`` propagated from ``(u0, z0)`` at ``t0``."""

    coeffs: Coefficients
    c1: float
    c2: float
    t0: float
    u0: float
    z0: float

    def __post_init__(self):
        if self.u0 == 0.0 and self.z0 == 0.0:
            raise ValueError("initial state (u0, z0) must be nonzero")

    def state(self, t: float) -> Vec2:
        return expm_companion(self.c1, self.c2, t - self.t0) @ Vec2(self.u0, self.z0)

    def u(self, t: float) -> float:
        return self.state(t).u

    def evaluate(self, t: float) -> float:
        s = self.state(t)
        if abs(s.u) <= POLE_THRESHOLD * s.norm():
            raise PoleError(f"solution has a pole at t={t!r}", t)
        return -s.z / (self.coeffs.P.evaluate(t) * s.u)

    __call__ = evaluate

    @property
    def y0(self) -> float:
        return self.evaluate(self.t0)

    def pole_times(self, a: float, b: float) -> list[float]:
        """Zeros of ``u`` in ``[a, b]``, located analytically."""
        c1, c2 = self.c1, self.c2
        disc = c2 * c2 + 4.0 * c1
        lam = 0.5 * c2
        omega = 0.5 * math.sqrt(abs(disc))
        u0, w = self.u0, self.z0 - lam * self.u0
        taus = []
        if abs(disc) <= DEGENERATE_DISCRIMINANT:
            if w != 0.0:
                taus.append(-u0 / w)
        elif disc > 0:
            # u0 cosh(wt) + (w/omega) sinh(wt) = 0
            if abs(w) > abs(u0) * omega:
                taus.append(math.atanh(-u0 * omega / w) / omega)
        else:
            phase = math.atan2(w / omega, u0) + 0.5 * math.pi
            lo, hi = a - self.t0, b - self.t0
            k = math.ceil((lo * omega - phase) / math.pi)
            while (tau := (phase + k * math.pi) / omega) <= hi:
                taus.append(tau)
                k += 1
        return sorted(self.t0 + tau for tau in taus if a <= self.t0 + tau <= b)

    def next_pole(self, after: float | None = None) -> float | None:
        """First pole strictly after ``after`` (default ``t0``), or ``None``."""
        start = self.t0 if after is None else after
        disc = self.c2 * self.c2 + 4.0 * self.c1
        if disc < -DEGENERATE_DISCRIMINANT:
            # periodic zeros: one lies in every window of length pi/omega
            span = 2.0 * math.pi / math.sqrt(-disc)
            candidates = self.pole_times(start, start + 1.5 * span)
        else:
            candidates = self.pole_times(-math.inf, math.inf)
        return next((p for p in candidates if p > start), None)


def closed_form(coeffs: Coefficients, c1: float, c2: float, t0: float,
                y0: float) -> ClosedFormSolution:
    """Solution through ``(t0, y0)`` of an equation known to have constants ``(c1, c2)``."""
    p0 = coeffs.P.evaluate(t0)
    if p0 == 0.0:
        raise EvalError("P vanishes", coeffs.P, t0)
    return ClosedFormSolution(coeffs, float(c1), float(c2), float(t0), 1.0, -p0 * y0)


def solve_closed_form(spec: FamilySpec, t0: float, y0: float,
                      tol: float = 1e-10) -> ClosedFormSolution:
    return closed_form(spec.coefficients(tol), spec.c1, spec.c2, t0, y0)


# printed hyperbolic formulas ----------------------------------------------------

def _mobius_in_C(kind: Kind, g: Expr, c1: float, c2: float, t: float,
                 tol: float = 1e-10, running: Integral | None = None):
    """Coefficients ``(a, b, c, d)`` with the printed solution ``= (a C + b)/(c C + d)``."""
    disc = c2 * c2 + 4.0 * c1
    if disc <= DEGENERATE_DISCRIMINANT:
        raise RegimeError(
            f"printed formula needs c2^2 + 4 c1 > 0, got {disc!r}")
    root = math.sqrt(disc)                      # 2 omega
    sh = math.sinh(0.5 * root * t)
    ch = math.cosh(0.5 * root * t)
    num_C = c2 * sh + root * ch                 # coefficient of C in the numerator
    num_1 = 2.0 * c1 * sh
    if kind is Kind.F:
        f = g.evaluate(t)
        return f * num_C, f * num_1, 2.0 * c1 * sh, c1 * (root * ch - c2 * sh)
    if kind is Kind.P:
        p = g.evaluate(t)
        return num_C, num_1, -2.0 * sh * p, (c2 * sh - root * ch) * p
    running = running if running is not None else Integral(g, tol)
    scale = math.exp(-c2 * t + running.evaluate(t))
    # the printed denominator carries A (= 1) on the cosh term only
    return scale * num_C, scale * num_1, -2.0 * sh, c2 * sh - root * ch


def _mobius_value(coefs, C, t):
    a, b, c, d = coefs
    num = a * C + b
    den = c * C + d
    if abs(den) <= POLE_THRESHOLD * (abs(a * C) + abs(b)) or den == 0.0:
        raise PoleError(f"printed formula has a pole at t={t!r}", t)
    return num / den


def paper_solution_F(g: Expr, c1: float, c2: float, C: float, t: float) -> float:
    """Printed hyperbolic solution of the F-free family (``g`` is ``F``)."""
    return _mobius_value(_mobius_in_C(Kind.F, g, c1, c2, t), C, t)


def paper_solution_P(g: Expr, c1: float, c2: float, C: float, t: float) -> float:
    """Printed hyperbolic solution of the P-free family (``g`` is ``P``)."""
    return _mobius_value(_mobius_in_C(Kind.P, g, c1, c2, t), C, t)


def paper_solution_Q(g: Expr, c1: float, c2: float, C: float, t: float,
                     tol: float = 1e-10) -> float:
    """Printed hyperbolic solution of the Q-free family (``g`` is ``Q``), ``A = 1``.

    The printed formula has no slot for the scale of ``P``; it matches the
    family only when that scale is 1.
    """
    return _mobius_value(_mobius_in_C(Kind.Q, g, c1, c2, t, tol), C, t)


@dataclass(frozen=True)
class CrossCheckReport:
    max_abs_diff: float
    fitted_C: float
    points: tuple  # (t, closed_form_y, printed_y)
    skipped: tuple  # t values inside pole neighbourhoods

    def passed(self, tol: float) -> bool:
        return self.max_abs_diff <= tol


def crosscheck_paper_formula(kind, g: Expr, c1: float, c2: float, t0: float,
                             tgrid: Sequence[float], y0: float = 0.0,
                             scale: float = 1.0, tol: float = 1e-10,
                             pole_radius: float = 0.05) -> CrossCheckReport:
    """Fit the printed formula's constant at ``t0`` and compare on ``tgrid``.

    The printed solution is a Moebius function of its constant ``C``, so the
    fit is exact: ``C = (y0 d - b) / (a - y0 c)``.  Grid points within
    ``pole_radius`` of a pole of the closed form are skipped; a pole of the
    printed formula elsewhere counts as an infinite difference.
    """
    kind = Kind(kind)
    spec = FamilySpec(kind, c1, c2, g, scale)
    solution = solve_closed_form(spec, t0, y0, tol)
    running = Integral(g, tol) if kind is Kind.Q else None

    a, b, c, d = _mobius_in_C(kind, g, c1, c2, t0, tol, running)
    target = solution.evaluate(t0)
    den = a - target * c
    if abs(den) <= 1e-13 * (abs(a) + abs(target * c)) or den == 0.0:
        raise FitError(f"printed constant is infinite for y({t0})={target!r}")
    fitted = (target * d - b) / den

    tgrid = [float(t) for t in tgrid]
    poles = solution.pole_times(min(tgrid) - pole_radius, max(tgrid) + pole_radius)
    points, skipped = [], []
    worst = 0.0
    for t in tgrid:
        if any(abs(t - p) < pole_radius for p in poles):
            skipped.append(t)
            continue
        closed = solution.evaluate(t)
        try:
            printed = _mobius_value(_mobius_in_C(kind, g, c1, c2, t, tol, running), fitted, t)
        except PoleError:
            printed = math.inf
        points.append((t, closed, printed))
        worst = max(worst, abs(closed - printed))
    return CrossCheckReport(worst, fitted, tuple(points), tuple(skipped))
