"""Exception types shared across nashkit."""


class NashkitError(Exception):
    """Base class for all nashkit errors."""


class NonFinitePayoff(NashkitError, ValueError):
    pass


class ShapeMismatch(NashkitError, ValueError):
    pass


class DimensionMismatch(NashkitError, ValueError):
    pass


class EmptySupport(NashkitError, ValueError):
    pass


class NumericalFailure(NashkitError, ArithmeticError):
    """An iterative numerical routine could not meet its tolerances."""


class PivotCapExceeded(NumericalFailure):
    def __init__(self, cap, trace_length):
        super().__init__(f"pivot cap {cap} exceeded after {trace_length} pivots")
        self.cap = cap
        self.trace_length = trace_length


class BudgetZero(NashkitError, ValueError):
    pass


class UnknownFixture(NashkitError, KeyError):
    pass


class FileError(NashkitError, OSError):
    pass


class ParseError(NashkitError, ValueError):
    def __init__(self, message, line, column=1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ConfigError(NashkitError, ValueError):
    def __init__(self, message, field=None):
        prefix = f"{field}: " if field else ""
        super().__init__(prefix + message)
        self.field = field
