"""Numerical oracle: adaptive Dormand-Prince 5(4) integration, residuals, poles.

Nothing here uses the closed-form machinery except to read off the solution
being checked, so agreement between the two is meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import EmptyGrid, EvalError, PoleError
from .riccati import ClosedFormSolution, Coefficients

__all__ = [
    "Grid", "Trajectory", "CompareReport", "dopri5", "rk_integrate",
    "rk_integrate_linear", "compare", "residual", "find_poles",
    "POLE_RADIUS", "BLOWUP", "MIN_STEP",
]

POLE_RADIUS = 0.05
BLOWUP = 1e8
MIN_STEP = 1e-12

COMPLETED = "completed"
BLOW_UP = "blowUp"
EVAL_ERROR = "evalError"

# Dormand & Prince (1980) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
# 5th order minus embedded 4th order weights
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# continuous extension (Shampine): weight_i(theta) = sum_j _P[i][j] theta^(j+1)
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)


@dataclass(frozen=True)
class Grid:
    start: float
    end: float
    points: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("grid start must be below grid end")
        if int(self.points) != self.points or self.points < 2:
            raise ValueError("grid needs an integer number of points >= 2")

    def values(self) -> list[float]:
        n = int(self.points)
        h = (self.end - self.start) / (n - 1)
        return [self.start + k * h for k in range(n - 1)] + [float(self.end)]


@dataclass(frozen=True)
class Trajectory:
    points: tuple        # ((t, y), ...) with y a float, or a tuple for systems
    termination: str     # completed | blowUp | evalError
    t_stop: float        # last time the integrator reached
    steps: int = 0
    rejected: int = 0

    @property
    def times(self):
        return [t for t, _ in self.points]

    @property
    def values(self):
        return [y for _, y in self.points]


def _initial_step(f, t0, y0, f0, rtol, atol, span):
    scale = [atol + rtol * abs(v) for v in y0]
    d0 = math.sqrt(sum((v / s) ** 2 for v, s in zip(y0, scale)) / len(y0))
    d1 = math.sqrt(sum((v / s) ** 2 for v, s in zip(f0, scale)) / len(y0))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h, 0.1 * span)


def dopri5(f: Callable[[float, list], list], t0: float, y0: Sequence[float],
           t_out: Sequence[float], rel_tol: float = 1e-10, abs_tol: float = 1e-12,
           blowup: float = BLOWUP, min_step: float = MIN_STEP) -> Trajectory:
    """Integrate ``y' = f(t, y)`` from ``t0`` and sample ``y`` at ``t_out``.

    ``t_out`` must be increasing and start at or after ``t0``.  Integration
    stops early with ``blowUp`` once any component exceeds ``blowup`` in
    magnitude or the step size falls below ``min_step``, and with
    ``evalError`` when ``f`` raises :class:`EvalError` after the first step.
    """
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    t_out = [float(t) for t in t_out]
    if any(b <= a for a, b in zip(t_out, t_out[1:])):
        raise ValueError("output times must be strictly increasing")
    if t_out and t_out[0] < t0:
        raise ValueError("output times must not precede t0")
    n = len(y0)
    y = [float(v) for v in y0]
    t = float(t0)
    end = t_out[-1] if t_out else t
    k1 = list(f(t, y))          # EvalError here propagates to the caller

    out = []
    idx = 0
    while idx < len(t_out) and t_out[idx] == t:
        out.append((t, tuple(y)))
        idx += 1
    if idx == len(t_out):
        return Trajectory(tuple(out), COMPLETED, t)

    h = _initial_step(f, t, y, k1, rel_tol, abs_tol, end - t)
    steps = rejected = 0
    reason = COMPLETED
    while t < end:
        if h < min_step:
            reason = BLOW_UP
            break
        last = t + h >= end
        if last:
            h = end - t
        ks = [k1]
        try:
            for i in range(1, 7):
                a = _A[i]
                yi = [y[m] + h * sum(a[j] * ks[j][m] for j in range(i)) for m in range(n)]
                ks.append(list(f(t + _C[i] * h, yi)))
        except EvalError:
            # may be a singular point inside the trial step; retry smaller
            if h <= min_step * 4:
                reason = EVAL_ERROR
                break
            h *= 0.25
            rejected += 1
            continue
        y_new = yi  # stage 7 is evaluated at the 5th-order solution
        err = 0.0
        for m in range(n):
            e = h * sum(_E[j] * ks[j][m] for j in range(7))
            sc = abs_tol + rel_tol * max(abs(y[m]), abs(y_new[m]))
            err += (e / sc) ** 2
        err = math.sqrt(err / n)
        if not math.isfinite(err):
            h *= 0.2
            rejected += 1
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            rejected += 1
            continue

        t_new = end if last else t + h
        steps += 1
        if any(abs(v) > blowup for v in y_new):
            t = t_new
            reason = BLOW_UP
            break
        while idx < len(t_out) and t_out[idx] <= t_new:
            tq = t_out[idx]
            if tq == t_new:
                out.append((tq, tuple(y_new)))
            else:
                theta = (tq - t) / h
                powers = (theta, theta ** 2, theta ** 3, theta ** 4)
                w = [sum(p * q for p, q in zip(row, powers)) for row in _P]
                out.append((tq, tuple(y[m] + h * sum(w[j] * ks[j][m] for j in range(7))
                                      for m in range(n))))
            idx += 1
        t, y, k1 = t_new, y_new, ks[6]
        h *= min(5.0, 0.9 * err ** -0.2) if err > 0 else 5.0
    return Trajectory(tuple(out), reason, t, steps, rejected)


def rk_integrate(coeffs: Coefficients, t0: float, y0: float, grid: Grid,
                 rel_tol: float = 1e-10, abs_tol: float = 1e-12,
                 blowup: float = BLOWUP, min_step: float = MIN_STEP) -> Trajectory:
    """Numerically integrate ``y' = P y^2 + Q y + F`` and sample on ``grid``."""
    if abs(grid.start - t0) > 1e-12 * (1 + abs(t0)):
        raise ValueError("grid must start at t0")

    def f(t, y):
        return (coeffs.rhs(t, y[0]),)

    traj = dopri5(f, t0, (y0,), grid.values(), rel_tol, abs_tol, blowup, min_step)
    return Trajectory(tuple((t, v[0]) for t, v in traj.points), traj.termination,
                      traj.t_stop, traj.steps, traj.rejected)


def rk_integrate_linear(coeffs: Coefficients, t0: float, u0: float, z0: float,
                        grid: Grid, rel_tol: float = 1e-10,
                        abs_tol: float = 1e-12) -> Trajectory:
    """Integrate ``u' = z, z' = -P F u + (P'/P + Q) z``; values are ``(u, z)`` pairs."""

    def f(t, s):
        p = coeffs.P.evaluate(t)
        a21 = -p * coeffs.F.evaluate(t)
        a22 = coeffs.dP.evaluate(t) / p + coeffs.Q.evaluate(t)
        return (s[1], a21 * s[0] + a22 * s[1])

    return dopri5(f, t0, (u0, z0), grid.values(), rel_tol, abs_tol,
                  blowup=math.inf, min_step=MIN_STEP)


@dataclass(frozen=True)
class CompareReport:
    max_abs_err: float
    first_pole: float | None
    compared: int
    skipped: int
    termination: str
    t_stop: float


def _near(t, poles, radius):
    return any(abs(t - p) < radius for p in poles)


def compare(solution: ClosedFormSolution, grid: Grid, rel_tol: float = 1e-10,
            abs_tol: float = 1e-12, pole_radius: float = POLE_RADIUS,
            coeffs: Coefficients | None = None) -> CompareReport:
    """Max ``|closed - numeric|`` on grid points reached before any pole.

    ``coeffs`` overrides the equation handed to the integrator (default: the
    solution's own), which is how a solution is checked against an equation
    it was not built from.  ``first_pole`` is the first pole after ``t0``,
    wherever it lies.
    """
    coeffs = coeffs or solution.coeffs
    y0 = solution.evaluate(solution.t0)
    traj = rk_integrate(coeffs, solution.t0, y0, grid, rel_tol, abs_tol)
    poles = solution.pole_times(grid.start - pole_radius, grid.end + pole_radius)
    worst, compared = 0.0, 0
    for t, y_num in traj.points:
        if _near(t, poles, pole_radius):
            continue
        try:
            y_closed = solution.evaluate(t)
        except (PoleError, EvalError):
            continue
        worst = max(worst, abs(y_closed - y_num))
        compared += 1
    return CompareReport(worst, solution.next_pole(), compared,
                         grid.points - compared, traj.termination, traj.t_stop)


def richardson_derivative(fn: Callable[[float], float], t: float, h: float = 1e-4) -> float:
    """Central difference with one Richardson extrapolation level (error O(h^4))."""
    d1 = (fn(t + h) - fn(t - h)) / (2 * h)
    h2 = 0.5 * h
    d2 = (fn(t + h2) - fn(t - h2)) / (2 * h2)
    return (4 * d2 - d1) / 3


def residual(solution: ClosedFormSolution, grid: Grid,
             pole_radius: float = POLE_RADIUS, h: float = 1e-4,
             coeffs: Coefficients | None = None) -> float:
    """Max over the grid of ``|y' - (P y^2 + Q y + F)| / (1 + |y'|)``."""
    coeffs = coeffs or solution.coeffs
    poles = solution.pole_times(grid.start - pole_radius - h,
                                grid.end + pole_radius + h)
    worst = None
    for t in grid.values():
        if _near(t, poles, pole_radius):
            continue
        dy = richardson_derivative(solution.evaluate, t, h)
        r = abs(dy - coeffs.rhs(t, solution.evaluate(t))) / (1 + abs(dy))
        worst = r if worst is None else max(worst, r)
    if worst is None:
        raise EmptyGrid("every grid point lies in a pole neighbourhood")
    return worst


def find_poles(solution: ClosedFormSolution, a: float, b: float,
               subintervals: int = 1000, xtol: float = 1e-12) -> list[float]:
    """Poles in ``[a, b]`` as sign changes of ``u``, refined by bisection."""
    if not a < b:
        raise ValueError("need a < b")
    u = solution.u
    h = (b - a) / subintervals
    ts = [a + k * h for k in range(subintervals)] + [b]
    us = [u(t) for t in ts]
    poles = []
    for i in range(subintervals):
        lo, hi, ulo, uhi = ts[i], ts[i + 1], us[i], us[i + 1]
        if ulo == 0.0:
            if not poles or poles[-1] != lo:
                poles.append(lo)
            continue
        if uhi == 0.0:
            if i == subintervals - 1:
                poles.append(hi)
            continue
        if (ulo < 0) == (uhi < 0):
            continue
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            um = u(mid)
            if um == 0.0:
                lo = hi = mid
                break
            if (um < 0) == (ulo < 0):
                lo, ulo = mid, um
            else:
                hi = mid
        poles.append(0.5 * (lo + hi))
    return poles
