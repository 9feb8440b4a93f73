"""Exception types shared across the package."""

from __future__ import annotations


class ThinOrbitError(Exception):
    """Base class; ``bound`` names the violated precondition, if any."""

    def __init__(self, message: str, bound: str | None = None):
        super().__init__(message)
        self.bound = bound


class InputError(ThinOrbitError, ValueError):
    pass


class ParameterError(ThinOrbitError, ValueError):
    pass


class DegenerateInputError(ThinOrbitError, ValueError):
    pass


class ConfigurationError(ThinOrbitError, ValueError):
    pass


class AliasingError(ThinOrbitError, ValueError):
    pass


class ResourceError(ThinOrbitError, RuntimeError):
    """Raised when an enumeration exceeds its element cap."""

    def __init__(self, message: str, partial_count: int):
        super().__init__(message)
        self.partial_count = partial_count
