from config.weakwire_config import ConfigError


class WeakwireError(Exception):
    pass


class WireRangeError(WeakwireError, IndexError):
    pass


class DomainError(WeakwireError, ValueError):
    pass


class ForbiddenOutcomeError(DomainError):
    """The transition amplitude vanishes, so no weak value exists."""


class GateTypeError(WeakwireError, TypeError):
    pass


class UsageError(WeakwireError, ValueError):
    """A check or operation was called outside its precondition."""


class DivergenceError(WeakwireError, ArithmeticError):
    pass


class PairingError(DomainError):
    pass


class CircuitFormatError(WeakwireError, ValueError):
    pass


__all__ = [
    "ConfigError",
    "WeakwireError",
    "WireRangeError",
    "DomainError",
    "ForbiddenOutcomeError",
    "GateTypeError",
    "UsageError",
    "DivergenceError",
    "PairingError",
    "CircuitFormatError",
]
