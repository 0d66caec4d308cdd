"""Error taxonomy for the library.

Every numerical failure mode has its own exception class so that callers (and
the CLI, which maps them to exit code 2) can react without string matching.
``CatastrophicCancellation`` is a warning, not an error: the Weyl sum is
allowed to lose digits, but never silently.
"""


class WhittakerError(Exception):
    """Base class for all numerical errors raised by this package."""


class PoleError(WhittakerError):
    """A Gamma/Pochhammer argument is at (or within tolerance of) a pole."""


class NonConvergence(WhittakerError):
    """Successive refinements failed to agree within tolerance."""


class DivergentSeries(WhittakerError):
    """A series route was requested outside its convergence region."""


class SizeError(WhittakerError):
    """Rank or enumeration size outside the supported range."""


class SingularCoefficient(WhittakerError):
    """Some q(m, nu) needed by the coefficient recurrence is too close to 0."""


class TailNotConverged(WhittakerError):
    """The series tail bound stayed above tolerance at the maximal box."""


class InvalidContour(WhittakerError):
    """Contour abscissas violate the strict admissibility inequalities."""


class PoleOnContour(WhittakerError):
    """A Gamma argument falls on (or near) a pole at a contour node."""


class InnerEvalError(WhittakerError):
    """The inner lower-rank factor of a recursive integral failed."""


class CatastrophicCancellation(UserWarning):
    """The Weyl sum lost more than the configured number of digits."""
