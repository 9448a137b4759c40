"""Exception hierarchy.

Input problems derive from ``ValueError``; numerical breakdowns derive from
``NumericalFailure`` so callers (the CLI in particular) can map them to
distinct exit codes.
"""


class CausalGeometryError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(CausalGeometryError, ValueError):
    """Malformed or out-of-domain input."""


class DimensionMismatch(InvalidInput):
    pass


class NotInChartDomain(InvalidInput):
    """A point does not lie in the chart component ``x0 > 0``."""


class NotNull(InvalidInput):
    """A vector that should lie on the null cone does not."""


class ImageNotBall(InvalidInput):
    """The pole of a Moebius map lies in a ball, so the image is unbounded."""


class NotConal(CausalGeometryError):
    """A map claimed to be order preserving was caught violating the order."""


class NoAdmissibleConjugator(CausalGeometryError):
    pass


class NumericalFailure(CausalGeometryError, ArithmeticError):
    pass


class SingularInversion(NumericalFailure):
    """Jordan inversion of a (near) null vector."""


class ChartSingularity(NumericalFailure):
    """Hyperboloid point on the hyperplane ``y0 + yn = 0``."""


class DegenerateConfiguration(NumericalFailure):
    """Sample points do not determine a unique Moebius map."""


class ToleranceNotMet(NumericalFailure):
    pass
