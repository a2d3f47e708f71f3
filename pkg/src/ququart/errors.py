"""Exception types raised by the toolkit.

All of them derive from ``ValueError`` so callers that only care about
"bad input" can catch the builtin.
"""


class QuquartError(ValueError):
    """Base class for toolkit errors."""


class WavelengthRangeError(QuquartError):
    pass


class ContractViolation(QuquartError):
    """A matrix or record breaks an invariant the operation relies on."""


class ProtocolError(QuquartError):
    pass


class UnsupportedBasisError(QuquartError):
    pass


class DegenerateDataError(QuquartError):
    """Counts carry no information (e.g. every record is zero)."""
