"""Exception hierarchy shared by every module."""


class SquidCouplerError(Exception):
    """Base class for all package errors."""


class InvalidParametersError(SquidCouplerError, ValueError):
    pass


class NoMetastableWellError(SquidCouplerError):
    pass


class ConvergenceError(SquidCouplerError):
    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class UnstableModeError(SquidCouplerError):
    pass


class NearDegenerateDenominatorError(SquidCouplerError, ZeroDivisionError):
    def __init__(self, term, value):
        super().__init__(f"denominator of {term} is {value!r}, inside the guard band")
        self.term = term
        self.value = value


class BoundUndefinedError(SquidCouplerError):
    pass


class NoBarrierError(SquidCouplerError):
    pass


class UnknownQuantityError(SquidCouplerError, KeyError):
    pass


class UnknownIdentityError(SquidCouplerError, KeyError):
    pass


class ConfigError(SquidCouplerError):
    """Problem in a configuration file; ``location`` is ``(line, col)`` or a key path."""

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location
