"""Exception hierarchy shared by all modules."""


class HviError(Exception):
    """Base class for errors raised by hvifem."""


class InvalidArgumentError(HviError, ValueError):
    pass


class OutOfDomainError(HviError, ValueError):
    pass


class GeometryError(HviError, ValueError):
    pass


class ExprSyntaxError(HviError, ValueError):
    """Malformed expression text; ``column`` is 1-based."""

    def __init__(self, message, column):
        super().__init__(f"{message} (column {column})")
        self.column = column


class ExprNameError(HviError, NameError):
    def __init__(self, name, column):
        super().__init__(f"unknown identifier {name!r} (column {column})")
        self.name = name
        self.column = column


class ExprDomainError(HviError, ArithmeticError):
    """Non-finite value produced while evaluating an expression."""

    def __init__(self, subexpression):
        super().__init__(f"non-finite value in subexpression {subexpression}")
        self.subexpression = subexpression


class ProblemLookupError(HviError, LookupError):
    def __init__(self, name, registered):
        self.name = name
        self.registered = tuple(registered)
        super().__init__(
            f"unknown problem {name!r}; registered: {', '.join(self.registered)}")

    def __str__(self):
        return self.args[0]


class EllipticityError(HviError, ValueError):
    pass


class ConfigError(HviError, ValueError):
    pass


class SolverError(HviError, RuntimeError):
    pass


class CGConvergenceError(SolverError):
    def __init__(self, residual, iterations):
        super().__init__(
            f"CG did not converge in {iterations} iterations "
            f"(relative residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


class NonConvergenceError(SolverError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


class DiagnosticsError(SolverError):
    pass
