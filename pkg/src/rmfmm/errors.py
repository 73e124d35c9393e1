"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Operand shapes are inconsistent."""


class EmptyMask(ValueError):
    """No observed entries where at least one is required."""


class InfeasibleFactors(ValueError):
    """Factor entries violate the problem's constraint set."""


class InfeasibleInit(InfeasibleFactors):
    """Initial factors violate the problem's constraint set."""


class InfeasibleDirection(ValueError):
    """A probe direction leaves the feasible set."""


class EmptyTrace(ValueError):
    """Trace has too few entries to analyse."""


class NonFiniteObjective(RuntimeError):
    """NaN/Inf encountered during an outer run; carries the trace so far."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class NonFiniteInnerState(RuntimeError):
    """NaN/Inf in the inner solver's iterates."""


class NegativeGamma(ValueError):
    """Shrinkage threshold must be nonnegative."""


class RankTooLarge(ValueError):
    """Requested factorization rank exceeds what the matrix admits."""


class InvalidFraction(ValueError):
    """A fraction parameter lies outside its valid range."""


class ParseError(ValueError):
    """Malformed text input; reports 1-based line and token positions."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)
        self.line = line
        self.column = column


class ShapeHeaderMismatch(ParseError):
    """Declared matrix shape disagrees with the file body."""


class NonFiniteValue(ParseError):
    """A NaN or infinity where only finite values are allowed."""
