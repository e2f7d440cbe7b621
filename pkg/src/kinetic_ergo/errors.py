"""Structured exceptions shared across the library."""


class KineticErgoError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(KineticErgoError):
    """Inputs do not share the expected phase-space dimension."""


class MeasureArgumentError(KineticErgoError):
    """A measure argument was required (or forbidden) for this drift."""


class CertificateError(KineticErgoError):
    """Ill-formed dissipativity certificate or degenerate check setup."""


class InteractionBudgetError(KineticErgoError):
    """Interaction strength exhausts the dissipativity rate at system level."""


class DivergenceError(KineticErgoError):
    """State blew up during integration.

    Carries the first offending step index and time.
    """

    def __init__(self, step, t, message=None):
        self.step = step
        self.t = t
        super().__init__(message or f"state diverged at step {step} (t={t:.6g})")


class SolverInputError(KineticErgoError):
    """Invalid input to a numerical solver (non-Hurwitz matrix, singular covariance, ...)."""


class SizeCapError(KineticErgoError):
    """Problem size exceeds the solver cap; subsample the ensembles first."""


class EstimatorInputError(KineticErgoError):
    """Invalid estimator configuration (neighbor order, sample sizes, windows)."""


class UnderdeclaredBoundError(KineticErgoError):
    """A declared Lipschitz/Jacobian bound is smaller than a measured probe."""


class NonContractionError(KineticErgoError):
    """Fixed-point iteration gaps grew repeatedly; carries the gap history."""

    def __init__(self, history, message=None):
        self.history = list(history)
        super().__init__(message or "fixed-point iteration is not contracting")


class ConfigError(KineticErgoError):
    """Experiment configuration failed validation."""
