"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Matrix shapes cannot support the requested factorisation."""


class CandidateRangeError(ValueError):
    """A split candidate lies outside the admissible range of its segment."""


class NumericalError(ArithmeticError):
    """An objective or statistic became non-finite during iteration."""


class DegenerateSeriesError(ValueError):
    """The data are too degenerate to tune on (zero spread, rank collapse)."""


class InsufficientSplitsError(RuntimeError):
    """Greedy segmentation ran out of admissible splits before the requested count."""
