"""Closed-form solutions of Riccati equations whose linearization has a constant companion matrix."""

__version__ = "0.1.0"

from .errors import (EmptyGrid, EvalError, ExprSyntaxError, FitError,  # noqa: E402
                     InvalidConstant, PoleError, QuadratureError, RegimeError)
from .expr import antiderivative, differentiate, evaluate, parse, to_text  # noqa: E402
from .linalg2 import (Form5, Mat2, Vec2, commutator, expm_companion,  # noqa: E402
                      expm_structured, funcomm_check, fundamental_matrix)
from .riccati import (ClosedFormSolution, Coefficients, FamilySpec, Kind,  # noqa: E402
                      NotIntegrableForm, crosscheck_paper_formula, detect_family,
                      make_family_F, make_family_P, make_family_Q,
                      paper_solution_F, paper_solution_P, paper_solution_Q,
                      riccati_to_linear, solve_closed_form)
from .verify import Grid, compare, find_poles, residual, rk_integrate  # noqa: E402
