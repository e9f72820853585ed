"""Exception hierarchy shared by all modules."""


class AmoError(Exception):
    """Base class for every error raised by this package."""


class RationalInput(AmoError):
    """The continued-fraction expansion terminated before the requested depth."""


class PrecisionExhausted(AmoError):
    """The working precision cannot resolve the next partial quotient."""


class DepthOverflow(AmoError):
    """The next convergent denominator would exceed the digit budget."""


class HorizonExceeded(AmoError):
    """An integer multiple of the frequency lies beyond the resolved horizon."""


class InsufficientDepth(AmoError):
    """Not enough convergents for the requested estimate."""


class NotUnimodular(AmoError):
    """A matrix expected to have determinant one does not."""


class RangeOverflow(AmoError):
    """A log-space comparison could not be carried out."""


class AffinityCheckFailed(AmoError):
    """The trace of a periodic product is not affine in cos(2 pi q theta)."""


class ConvergenceFailure(AmoError):
    """An eigensolver failed to produce an accurate decomposition."""


class RegimeMismatch(AmoError):
    """Parameters lie outside the regime where a diagnostic is meaningful."""


class NotDecaying(AmoError):
    """An eigenvector lacks the decay needed for a Fourier transport."""


class DivisorUnderflow(AmoError):
    """A small divisor vanished to working precision."""


class IncompleteDiagnostics(AmoError):
    """A phase-diagram cell is missing a diagnostic needed to classify it."""


class SweepIncomplete(AmoError):
    """A sweep stopped early; completed cells were flushed to disk."""

    def __init__(self, message: str, manifest_path=None):
        super().__init__(message)
        self.manifest_path = manifest_path
