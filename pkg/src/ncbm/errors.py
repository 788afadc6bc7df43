"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class NonConvergenceError(RuntimeError):
    """A numerical procedure failed to reach its requested tolerance."""


class SkewSymmetryError(ValueError):
    """A matrix expected to be skew-symmetric is not.

    Carries the worst offending index pair in ``indices``.
    """

    def __init__(self, message, indices=None, residual=None):
        super().__init__(message)
        self.indices = indices
        self.residual = residual


class SelfDualityError(ValueError):
    """A quaternion matrix expected to be self-dual is not."""

    def __init__(self, message, block=None, residual=None):
        super().__init__(message)
        self.block = block
        self.residual = residual
