"""Exception types raised across loopforge."""


class LoopforgeError(ValueError):
    """Base class for all loopforge errors."""


class InvalidCoefficients(LoopforgeError):
    pass


class ImproperSystem(LoopforgeError):
    pass


class NegativeDelay(LoopforgeError):
    pass


class NonFiniteResult(LoopforgeError):
    pass


class GridMismatch(LoopforgeError):
    pass


class LengthMismatch(LoopforgeError):
    pass


class ShapeMismatch(LoopforgeError):
    pass


class ZeroGain(LoopforgeError):
    pass


class NonPositiveTauC(LoopforgeError):
    pass


class InvalidTarget(LoopforgeError):
    """Target response is unusable (diverged or never reaches the set-point)."""


class ConfigError(LoopforgeError):
    """Scenario or CLI configuration is invalid."""
