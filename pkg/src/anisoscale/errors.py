class InvalidParametersException(Exception):
    """Raised if model or scaling parameters fall outside their admissible range."""
    pass

class BoundaryRejectionException(InvalidParametersException):
    """The parameters sit on a region boundary where no limit is implemented."""

class ExistenceConditionException(Exception):
    """The requested limit field is not well defined for these exponents."""

class TruncationException(Exception):
    """A truncation radius is too small for the requested tail tolerance."""

class QuadratureException(Exception):
    """Adaptive quadrature did not reach its target error."""

class WindowTooSmallException(Exception):
    """The partial-sum rectangle does not fit inside the simulated window."""

class InsufficientRangeException(Exception):
    """Too few scales or lags for a stable fit."""

class NotAValidCheckException(Exception):
    """Raised if the passed in check does not exist."""

class MissingConfigException(Exception):
    """Raised if a check needs configuration values that are missing."""

class NotAvailableForFamilyException(Exception):
    """This limit family does not provide the requested quantity."""
