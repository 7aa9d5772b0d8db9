"""Exception types shared across the package."""


class CausalCTMError(Exception):
    pass


class InvalidParameter(CausalCTMError, ValueError):
    pass


class DimensionMismatch(CausalCTMError, ValueError):
    pass


class EnumerationTooLarge(CausalCTMError):
    pass


class OutOfRange(CausalCTMError, ValueError):
    pass


class EmptyJoint(CausalCTMError):
    pass


class EmptyInput(CausalCTMError, ValueError):
    pass


class DivisionByZeroSupport(CausalCTMError, ZeroDivisionError):
    pass


class MissingGroundTruth(CausalCTMError):
    pass


class SpecInfeasible(CausalCTMError):
    pass


class ConfigError(CausalCTMError):
    pass


class EstimationFailure(CausalCTMError):
    pass
