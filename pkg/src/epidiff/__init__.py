"""Subderivatives, parabolic subderivatives and twice epi-differentiability
checks for piecewise twice differentiable functions and composite penalties."""

from .errors import (
    DerivativeMismatchError, DimensionError, EpidiffError, ExtRealError,
    InconsistentPwtdError, InvalidRecipeError, NoMultiplierError,
    NotASubgradientError, PointOutsideDomainError, PointOutsideSetError,
    PreconditionError, RegularityUnknownError, SubdifferentialUnavailableError,
    VertexEnumerationError,
)
from .extreal import INF, NEG_INF
from .polyhedra import Polyhedron
from .pwtd import PwtdFunction, SeparableSum, SmoothPiece
from .inner_maps import (
    BlockInnerMap, GroupQNormMap, GroupStructure, QConeResidualMap, SmoothMap,
    jacobi_eigh, pinv_sym, polynomial_map,
)
from .composite import CompositeFunction, RegularityReport, weak_duality_gap
from .oracle import (
    OracleEstimate, Schedule, estimate_parabolic_subderivative,
    estimate_second_subderivative, estimate_subderivative,
)
from . import instances

__version__ = "0.1.0"
