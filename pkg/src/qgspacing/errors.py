"""Exception hierarchy shared by all modules."""


class QGraphError(Exception):
    """Base class for every error raised by the package."""


class InvalidInputError(QGraphError, ValueError):
    pass


class BasisMismatchError(QGraphError, ValueError):
    pass


class UnsupportedVariantError(QGraphError):
    pass


class NumericalError(QGraphError, ArithmeticError):
    """A numerical procedure failed to converge or lost track of a root."""


class MissingLevelsError(NumericalError):
    def __init__(self, message, interval=None, deviation=None):
        super().__init__(message)
        self.interval = interval
        self.deviation = deviation


class InsufficientDataError(QGraphError, ValueError):
    pass


class AmbiguousSheetsError(NumericalError):
    pass


class SumRuleError(NumericalError):
    pass


class ContinuationError(NumericalError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class InversionError(NumericalError):
    def __init__(self, message, delta=None):
        super().__init__(message)
        self.delta = delta


class ConfigError(QGraphError, ValueError):
    pass
