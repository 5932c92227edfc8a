"""Exception types. The CLI maps each family to an exit code."""


class SpecError(ValueError):
    """Problem with the text or structure of a specification."""


class SpecSyntaxError(SyntaxError):
    def __init__(self, msg, line, col):
        super().__init__(f"{msg} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnknownSymbol(SpecError):
    pass


class NonPositiveCoefficient(SpecError):
    pass


class ValidationError(SpecError):
    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class NoExcursion(SpecError):
    pass


class EmptySizeClass(ValueError):
    pass


class CapExceeded(ValueError):
    pass


class BadEndpoint(ValueError):
    pass


class MalformedExcursion(ValueError):
    pass


class NumericFailure(ArithmeticError):
    """Base class for solver and sampler numeric failures."""


class NoConvergence(NumericFailure):
    pass


class DivergentSystem(NumericFailure):
    pass


class OutsideSubcriticalBall(NumericFailure):
    pass


class SizeTooSmall(NumericFailure):
    def __init__(self, n_min, msg=""):
        super().__init__(msg or f"size too small for the accelerated sampler (need n >= {n_min})")
        self.n_min = n_min


class InvariantBreach(NumericFailure):
    pass


class DepthRunaway(NumericFailure):
    pass


class RestartBudgetExceeded(NumericFailure):
    pass
