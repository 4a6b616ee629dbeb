"""Exception types raised by the choice-model routines."""


class ChoiceModelError(Exception):
    """Base class for numerical failures in this package."""


class SpectralRadiusViolation(ChoiceModelError):
    """The transient block of the absorbing chain does not have spectral radius < 1."""


class SingularSystemError(ChoiceModelError):
    """A linear solve failed or its residual exceeded tolerance."""


class NonTerminationError(ChoiceModelError):
    """A simulated walk hit the hard step cap without being absorbed."""


class PreconditionError(ValueError):
    """Inputs do not satisfy the hypotheses of a bound being checked."""
