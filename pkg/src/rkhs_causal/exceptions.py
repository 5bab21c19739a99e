"""Exception hierarchy. CLI exit codes are keyed off these classes."""


class RKHSCausalError(Exception):
    """Base class for all library errors."""


class ConfigurationError(RKHSCausalError, ValueError):
    """Invalid kernel, penalty or grid configuration."""


class SchemaError(RKHSCausalError, ValueError):
    """Dataset is missing a required block or has mismatched dimensions."""


class ShapeError(RKHSCausalError, ValueError):
    pass


class InsufficientDataError(RKHSCausalError, ValueError):
    pass


class UnsupportedOperationError(RKHSCausalError):
    """Operation is undefined for the configured kernel family."""


class NumericalError(RKHSCausalError, ArithmeticError):
    pass


class DegenerateHatMatrixError(NumericalError):
    """A validation loss divides by a zero hat-matrix quantity."""


class TuningError(NumericalError):
    pass
