"""Numerical geometry of the Siegel upper half space and the Siegel-Jacobi space."""
from .errors import (
    Diverges,
    DistanceOutOfRange,
    InvariantViolation,
    NoConvergence,
    NormalizationViolated,
    NotPositiveDefinite,
    SJLabError,
    Singular,
    StepOverflow,
)
from .kernels import BACKEND
from .numerics import FDConfig
from .siegel import (
    SiegelMetricParams,
    SiegelPoint,
    SiegelTangent,
    SymplecticElement,
    siegel_distance,
    sp_act,
)
from .jacobi import (
    HeisenbergElement,
    JacobiElement,
    JacobiMetricParams,
    JacobiTangent,
    SiegelJacobiPoint,
    jacobi_act,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "FDConfig",
    "SiegelPoint", "SiegelTangent", "SymplecticElement", "SiegelMetricParams", "sp_act",
    "siegel_distance",
    "HeisenbergElement", "JacobiElement", "SiegelJacobiPoint", "JacobiTangent",
    "JacobiMetricParams", "jacobi_act",
    "SJLabError", "InvariantViolation", "NotPositiveDefinite", "Singular", "NoConvergence",
    "Diverges", "DistanceOutOfRange", "NormalizationViolated", "StepOverflow",
]
