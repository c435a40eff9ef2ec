class RatchetPricingError(Exception):
    """Base exception class for ratchet pricing errors."""

    pass


class InvalidInputError(RatchetPricingError):
    """Raised when invalid input is provided."""

    pass


class InvalidBoundsError(InvalidInputError):
    """Raised when an interval has lo >= hi or a grid is too small."""

    pass


class EmptyTruncationError(RatchetPricingError):
    """Raised when a truncation retains no probability mass."""

    pass


class EmptyEventError(RatchetPricingError):
    """Raised when a conditioning event has zero mass and is not a support point."""

    pass


class GridMismatchError(InvalidInputError):
    """Raised when distributions or kernels that must share a grid do not."""

    pass


class UnsupportedKindError(InvalidInputError):
    """Raised when a check needs a density grid but gets a discrete one (or vice versa)."""

    pass


class ZeroDensityError(RatchetPricingError):
    """Raised when a prior cell has zero mass where a hazard rate is needed."""

    pass


class ConstraintViolatedError(InvalidInputError):
    """Raised when a relaxation is evaluated at p_A < p_R."""

    pass


class AssumptionViolatedError(RatchetPricingError):
    """Raised when an instance fails a distributional assumption a solver needs."""

    def __init__(self, message: str, reports=None):
        super().__init__(message)
        self.reports = reports or []


class MultipleCrossingsError(RatchetPricingError):
    """Raised when the buyer's acceptance set is not an upper set of types."""

    pass


class NonMonotoneBoundaryError(RatchetPricingError):
    """Raised when the boundary curve increases in the first-period type."""

    pass


class NoFixedPointError(RatchetPricingError):
    """Raised when no first-period price admits a continuation equilibrium."""

    def __init__(self, message: str, offending_prices=None):
        super().__init__(message)
        self.offending_prices = offending_prices or []


class SizeLimitExceededError(RatchetPricingError):
    """Raised when a finite game is too large to enumerate."""

    pass


class HorizonLimitError(RatchetPricingError):
    """Raised when a multi-period horizon exceeds the configured limit."""

    pass


class BudgetExceededError(RatchetPricingError):
    """Raised when a brute-force oracle query would exceed its evaluation budget."""

    pass


class ScenarioParseError(RatchetPricingError):
    """Raised when a scenario file cannot be read or is not valid JSON."""

    pass


class ScenarioValidationError(RatchetPricingError):
    """Raised when a scenario parses but fails schema validation."""

    def __init__(self, message: str, field_path: str = ""):
        super().__init__(message)
        self.field_path = field_path


class ReproductionAssertionError(RatchetPricingError):
    """Raised when a reproduced example does not match its expected numbers."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
