"""Exception types raised across the package."""


class BasisMismatchError(ValueError):
    """An operator, state or parameter set does not match the basis it is used with."""


class DimensionCapError(MemoryError):
    """A dense materialization would exceed the configured dimension cap."""


class UnfoldingError(ValueError):
    pass


class FitError(ValueError):
    pass


class RegularBathError(FitError):
    """The bath correlation function shows no decay (integrable / U=0 bath)."""


class NoExponentialRegime(FitError):
    pass


class PositivityError(ArithmeticError):
    pass


class ConfigError(ValueError):
    pass
