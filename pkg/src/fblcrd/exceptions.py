"""Exception hierarchy for the fblcrd toolkit."""


class FblcrdError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FblcrdError):
    """A model file or problem instance violates a structural invariant."""


class InfeasibleDistortionError(FblcrdError):
    """The requested distortion level lies below the feasibility floor."""


class ConvergenceError(FblcrdError):
    """An iterative routine stopped without reaching its tolerance.

    The residual achieved when the routine gave up is stored on ``gap``.
    """

    def __init__(self, message: str, gap: float | None = None):
        super().__init__(message)
        self.gap = gap
