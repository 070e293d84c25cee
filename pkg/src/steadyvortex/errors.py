"""Exception and warning types shared across the package."""

from __future__ import annotations


class SteadyVortexError(Exception):
    """Base class for all package errors."""


class FitFailed(SteadyVortexError):
    pass


class InvalidDomain(SteadyVortexError):
    pass


class CoincidentPoints(SteadyVortexError):
    pass


class OutsideDomain(SteadyVortexError):
    pass


class TooCloseToBoundary(SteadyVortexError):
    pass


class CoincidentVortices(SteadyVortexError):
    pass


class NoConvergence(SteadyVortexError):
    pass


class LeftDomain(SteadyVortexError):
    pass


class CollisionDetected(SteadyVortexError):
    pass


class InvalidExponent(SteadyVortexError):
    pass


class NoRoot(SteadyVortexError):
    pass


class CoreOverlap(SteadyVortexError):
    pass


class EmptyCore(SteadyVortexError):
    pass


class OpenContour(SteadyVortexError):
    pass


class BallExitsDomain(SteadyVortexError):
    pass


class ConfigInvalid(SteadyVortexError):
    """Configuration failed validation; ``field`` names the offending key."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ResolutionWarning(UserWarning):
    """Grid spacing is too coarse for the expected core radius."""


class CapActive(UserWarning):
    """The vorticity cap was reached by the energy maximizer."""
