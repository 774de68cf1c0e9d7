"""Exception types shared across the package."""


class FcRiccatiError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(FcRiccatiError, SyntaxError):
    """Malformed expression text. ``offset`` is the 0-based byte offset."""

    def __init__(self, message, text="", offset=0):
        self.text_input = text
        self.pos = offset
        super().__init__(f"{message} at offset {offset}")
        # SyntaxError uses these for display
        self.offset = offset
        self.text = text


class EvalError(FcRiccatiError, ArithmeticError):
    """Non-finite result while evaluating an expression node."""

    def __init__(self, reason, node=None, t=None):
        self.reason = reason
        self.node = node
        self.t = t
        where = f" in {node}" if node is not None else ""
        at = f" at t={t!r}" if t is not None else ""
        super().__init__(f"{reason}{where}{at}")


class QuadratureError(FcRiccatiError, ArithmeticError):
    pass


class InvalidConstant(FcRiccatiError, ValueError):
    pass


class PoleError(FcRiccatiError, ArithmeticError):
    """Evaluation requested at (or numerically indistinguishable from) a pole."""

    def __init__(self, message, t=None):
        self.t = t
        super().__init__(message)


class RegimeError(FcRiccatiError, ValueError):
    """Printed closed-form formula used outside its hyperbolic regime."""


class FitError(FcRiccatiError, ArithmeticError):
    pass


class EmptyGrid(FcRiccatiError, ValueError):
    pass
