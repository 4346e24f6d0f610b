"""Exception types raised across the package."""


class Susy2Error(Exception):
    """Base class for all package errors."""


class GridMismatch(Susy2Error, ValueError):
    pass


class AmbiguousAsymptotics(Susy2Error):
    """The truncation window cannot tell growth, decay and oscillation apart (L too small)."""


class KernelInput(Susy2Error):
    """The input lies in the kernel of the intertwiner; ``image`` holds the (zero) result."""

    def __init__(self, message, image=None):
        super().__init__(message)
        self.image = image


class InconsistentSpec(Susy2Error, ValueError):
    pass


class AsymmetricGrid(Susy2Error, ValueError):
    pass


class NoConvergence(Susy2Error):
    pass


class ResampleError(Susy2Error, ValueError):
    pass


class ConstraintViolation(Susy2Error, ValueError):
    pass
