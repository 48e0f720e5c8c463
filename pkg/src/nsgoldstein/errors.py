"""Exception hierarchy.

Every error carries a stable upper-case ``code`` so that the CLI and JSON
reports can name the violated contract without parsing messages.
"""


class NSGoldsteinError(Exception):
    code = "ERROR"

    def __init__(self, message="", **context):
        super().__init__(message or self.code)
        self.context = context


class UnknownFunction(NSGoldsteinError):
    code = "UNKNOWN_FUNCTION"


class MalformedParameters(NSGoldsteinError):
    code = "MALFORMED_PARAMETERS"


class DifferentiabilityFailure(NSGoldsteinError):
    """Raised by an oracle at a point where the gradient does not exist."""

    code = "DIFFERENTIABILITY_FAILURE"


class PersistentNondifferentiability(NSGoldsteinError):
    code = "PERSISTENT_NONDIFFERENTIABILITY"


class ZeroDirection(NSGoldsteinError):
    code = "ZERO_DIRECTION"


class NormExceedsL(NSGoldsteinError):
    code = "NORM_EXCEEDS_L"


class DimensionMismatch(NSGoldsteinError):
    code = "DIMENSION_MISMATCH"


class CertificateError(NSGoldsteinError):
    """A stationarity certificate failed re-verification.

    The ``code`` is set per instance to the violated invariant, one of
    ``WITNESS_OUTSIDE_BALL``, ``WEIGHTS_NOT_SIMPLEX``, ``COMBINATION_MISMATCH``,
    ``GRADIENT_MISMATCH``, ``NORM_MISMATCH`` or ``DIGEST_MISMATCH``.
    """

    def __init__(self, code, message="", **context):
        self.code = code
        super().__init__(message or code, **context)


class ZeroNormal(NSGoldsteinError):
    code = "ZERO_NORMAL"


class PointNotInterior(NSGoldsteinError):
    code = "POINT_NOT_INTERIOR"


class EmptyInterior(NSGoldsteinError):
    code = "EMPTY_INTERIOR"


class OracleBudgetExhausted(NSGoldsteinError):
    code = "ORACLE_BUDGET_EXHAUSTED"


class RhoAbsent(NSGoldsteinError):
    code = "RHO_ABSENT"


class ConfigInvalid(NSGoldsteinError):
    code = "CONFIG_INVALID"


class MissingTraces(NSGoldsteinError):
    code = "MISSING_TRACES"
