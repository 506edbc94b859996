"""Exception types raised by the solver.

The hierarchy separates problems a caller can fix (bad arguments, bad
configuration) from numerical failures that indicate either an unusable
contour or a loss of convergence. CLI code maps ConfigError to exit code 2
and the numerical family to exit code 3.
"""


class OpenCoaxError(Exception):
    """Base class for all package-specific errors."""


class DomainError(OpenCoaxError, ValueError):
    """Function argument outside the mathematical domain (zero, NaN, ...)."""


class NonFiniteError(OpenCoaxError, ArithmeticError):
    """A scaled quantity overflowed or turned NaN where it must not."""


class ModelError(OpenCoaxError, ValueError):
    """Physically inconsistent layer stack or frequency."""


class ConfigError(OpenCoaxError, ValueError):
    """Unreadable or invalid configuration file."""


class ContourError(OpenCoaxError, RuntimeError):
    """Base class for contour-integration failures."""


class CutCrossedError(ContourError):
    """Search contour intersects a branch cut; counts would be meaningless."""


class ContourTooCloseError(ContourError):
    """A zero or pole sits too close to the contour for stable sampling."""


class NotSimpleZeroError(ContourError):
    """Region did not contain exactly one simple zero."""


class ContourLeakError(ContourError):
    """Residue value changed when the contour was shrunk; something else
    is inside the rectangle."""


class PoleBetweenContoursError(ContourError):
    """A determinant zero sits in the strip swept by a contour
    deformation, so the deformed integral is not equal to the original."""


class NoConvergenceError(OpenCoaxError, RuntimeError):
    """An iterative refinement failed to reach its tolerance."""


class ContinuationBreakError(NoConvergenceError):
    """Mode tracking lost the mode between frequency steps."""


class IllConditionedError(OpenCoaxError, RuntimeError):
    """Field-coefficient least-squares residual above threshold."""


class DegenerateExcitationError(OpenCoaxError, RuntimeError):
    """Calibration denominator vanished; the truncated decomposition
    carries no current at the reference distance."""


class GridMismatchError(OpenCoaxError, ValueError):
    """Spectrum or window length does not match the frequency grid."""
