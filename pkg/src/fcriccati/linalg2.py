"""Real 2x2 matrix algebra for matrices of the form ``a11*I + a12*N``.

``N`` is the companion matrix ``[[0, 1], [c1, c2]]``.  Every matrix of that
shape commutes with every other one for the same ``(c1, c2)``, so the
fundamental matrix of ``X' = A(t) X`` is the exponential of the integral of
``A``, which reduces to a scalar exponential times ``exp(q*N)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

from .expr import Expr, antiderivative, const

__all__ = [
    "Mat2", "Vec2", "Form5", "MatrixFunction", "CommuteReport",
    "IDENTITY", "commutator", "funcomm_check", "expm_companion",
    "expm_structured", "fundamental_matrix", "DEGENERATE_DISCRIMINANT",
]

#: below this |c2^2 + 4 c1| the repeated-root formula is used
DEGENERATE_DISCRIMINANT = 1e-12


@dataclass(frozen=True)
class Vec2:
    u: float
    z: float

    def norm(self) -> float:
        return math.hypot(self.u, self.z)


@dataclass(frozen=True)
class Mat2:
    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in self.entries()):
            raise ValueError(f"non-finite matrix entry in {self}")

    @classmethod
    def from_rows(cls, rows) -> "Mat2":
        (a, b), (c, d) = rows
        return cls(float(a), float(b), float(c), float(d))

    def entries(self):
        return (self.a11, self.a12, self.a21, self.a22)

    def rows(self):
        return ((self.a11, self.a12), (self.a21, self.a22))

    def __add__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.a11 + other.a11, self.a12 + other.a12,
                    self.a21 + other.a21, self.a22 + other.a22)

    def __sub__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.a11 - other.a11, self.a12 - other.a12,
                    self.a21 - other.a21, self.a22 - other.a22)

    def scale(self, s: float) -> "Mat2":
        return Mat2(s * self.a11, s * self.a12, s * self.a21, s * self.a22)

    def __matmul__(self, other):
        if isinstance(other, Vec2):
            return Vec2(self.a11 * other.u + self.a12 * other.z,
                        self.a21 * other.u + self.a22 * other.z)
        return Mat2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def trace(self) -> float:
        return self.a11 + self.a22

    def frobenius(self) -> float:
        return math.sqrt(sum(x * x for x in self.entries()))

    def max_abs(self) -> float:
        return max(abs(x) for x in self.entries())


IDENTITY = Mat2(1.0, 0.0, 0.0, 1.0)
ZERO_MAT = Mat2(0.0, 0.0, 0.0, 0.0)


def commutator(m: Mat2, n: Mat2) -> Mat2:
    """``MN - NM``."""
    return (m @ n) - (n @ m)


@dataclass(frozen=True)
class Form5:
    """``[[a11, a12], [c1*a12, a11 + c2*a12]]`` with ``a11``, ``a12`` functions of t."""

    a11: Expr
    a12: Expr
    c1: float
    c2: float

    def at(self, t: float) -> Mat2:
        p = self.a11.evaluate(t)
        q = self.a12.evaluate(t)
        return Mat2(p, q, self.c1 * q, p + self.c2 * q)


@dataclass(frozen=True)
class MatrixFunction:
    """A general matrix function given entrywise, row-major."""

    a11: Expr
    a12: Expr
    a21: Expr
    a22: Expr

    def at(self, t: float) -> Mat2:
        return Mat2(self.a11.evaluate(t), self.a12.evaluate(t),
                    self.a21.evaluate(t), self.a22.evaluate(t))


@dataclass(frozen=True)
class CommuteReport:
    max_commutator_norm: float
    max_entry: float
    threshold: float
    passed: bool


MatrixSource = Union[Form5, MatrixFunction, Callable[[float], Mat2]]


def _sampler(a: MatrixSource) -> Callable[[float], Mat2]:
    return a.at if hasattr(a, "at") else a


def funcomm_check(a: MatrixSource, samples: Sequence[float]) -> CommuteReport:
    """Check ``A(t')A(t'') = A(t'')A(t')`` over all pairs of sample points.

    Passes when the largest commutator Frobenius norm is at most
    ``1e-10 * (1 + m**2)``, ``m`` the largest entry magnitude seen; the
    commutator is bilinear in the entries, hence the square.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise ValueError("funcomm_check needs at least 2 sample points")
    at = _sampler(a)
    mats = [at(float(t)) for t in samples]
    worst = 0.0
    for m, n in itertools.combinations(mats, 2):
        worst = max(worst, commutator(m, n).frobenius())
    biggest = max(m.max_abs() for m in mats)
    threshold = 1e-10 * (1.0 + biggest * biggest)
    return CommuteReport(worst, biggest, threshold, worst <= threshold)


def _companion_regime(c1, c2, regime=None):
    disc = c2 * c2 + 4.0 * c1
    if regime is None:
        if abs(disc) <= DEGENERATE_DISCRIMINANT:
            regime = "degenerate"
        elif disc > 0:
            regime = "hyperbolic"
        else:
            regime = "trigonometric"
    return regime, disc


def companion_coefficients(c1: float, c2: float, tau: float, regime: str | None = None):
    """Return ``(g, s)`` with ``exp(tau*N) = g*I + s*(N - lam*I)``, ``lam = c2/2``.

    ``regime`` forces one branch ("hyperbolic", "degenerate",
    "trigonometric"); by default it follows the sign of the discriminant.
    """
    regime, disc = _companion_regime(c1, c2, regime)
    lam = 0.5 * c2
    omega = 0.5 * math.sqrt(abs(disc))
    try:
        scale = math.exp(lam * tau)
        if regime == "hyperbolic":
            wt = omega * tau
            g = math.cosh(wt)
            s = math.sinh(wt) / omega if omega > 0 else tau
        elif regime == "trigonometric":
            wt = omega * tau
            g = math.cos(wt)
            s = math.sin(wt) / omega if omega > 0 else tau
        elif regime == "degenerate":
            g, s = 1.0, tau
        else:
            raise ValueError(f"unknown regime {regime!r}")
    except OverflowError:
        raise OverflowError(f"exp({tau}*N) overflows for c1={c1}, c2={c2}") from None
    return scale * g, scale * s


def expm_companion(c1: float, c2: float, tau: float, regime: str | None = None) -> Mat2:
    """``exp(tau * [[0, 1], [c1, c2]])`` in closed form.

    With ``lam = c2/2`` the shifted matrix ``M = N - lam*I`` squares to
    ``disc/4 * I`` (``disc = c2**2 + 4*c1``), which splits the series into
    cosh/sinh, polynomial, or cos/sin parts.
    """
    g, s = companion_coefficients(c1, c2, tau, regime)
    lam = 0.5 * c2
    entries = (g - s * lam, s, s * c1, g + s * lam)
    if not all(math.isfinite(x) for x in entries):
        raise OverflowError(f"exp({tau}*N) overflows for c1={c1}, c2={c2}")
    return Mat2(*entries)


def expm_structured(p: float, q: float, c1: float, c2: float) -> Mat2:
    """``exp(p*I + q*N) = e**p * exp(q*N)``."""
    try:
        ep = math.exp(p)
    except OverflowError:
        raise OverflowError(f"exp({p}) overflows") from None
    m = expm_companion(c1, c2, q)
    entries = tuple(ep * x for x in m.entries())
    if not all(math.isfinite(x) for x in entries):
        raise OverflowError("structured exponential overflows")
    return Mat2(*entries)


def fundamental_matrix(a: Form5, t: float, tol: float = 1e-10) -> Mat2:
    """Fundamental matrix ``X(t)`` of ``X' = A(t) X`` with ``X(0) = I``."""
    p = antiderivative(a.a11, 0.0, t, tol)
    q = antiderivative(a.a12, 0.0, t, tol)
    return expm_structured(p, q, a.c1, a.c2)


def form5(a11, a12, c1: float, c2: float) -> Form5:
    """Convenience constructor accepting numbers or expressions for the entries."""
    wrap = (lambda x: x if isinstance(x, Expr) else const(x))
    return Form5(wrap(a11), wrap(a12), float(c1), float(c2))


def sample_points(start: float, end: float, n: int) -> list[float]:
    if n < 2:
        raise ValueError("need at least 2 samples")
    h = (end - start) / (n - 1)
    return [start + k * h for k in range(n - 1)] + [float(end)]


def companion(c1: float, c2: float) -> Mat2:
    return Mat2(0.0, 1.0, float(c1), float(c2))
