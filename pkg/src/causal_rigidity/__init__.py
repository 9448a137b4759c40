"""Causal geometry of SO0(1,n)/SO0(1,n-1) and rigidity of conal maps."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CausalGeometryError,
    ChartSingularity,
    DegenerateConfiguration,
    DimensionMismatch,
    ImageNotBall,
    InvalidInput,
    NoAdmissibleConjugator,
    NotConal,
    NotInChartDomain,
    NotNull,
    NumericalFailure,
    SingularInversion,
    ToleranceNotMet,
)

__all__ = [
    "__version__",
    "CausalGeometryError",
    "ChartSingularity",
    "DegenerateConfiguration",
    "DimensionMismatch",
    "ImageNotBall",
    "InvalidInput",
    "NoAdmissibleConjugator",
    "NotConal",
    "NotInChartDomain",
    "NotNull",
    "NumericalFailure",
    "SingularInversion",
    "ToleranceNotMet",
]
