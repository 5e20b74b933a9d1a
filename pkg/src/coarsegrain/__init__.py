"""Sufficiency of quantum channels for pairs of states, recovery maps and Markov structure."""

__version__ = "0.1.0"

from .errors import (CoarseGrainError, CriteriaDisagreementError, DimensionError,
                     FactorizationError, InvalidInputError, NotHermitianError,
                     NumericalBreakdownError, PreconditionError, SingularMatrixError)
from .channels import KrausMap, LinearMap, petz_dual, transpose_alpha
from .algebra import StarAlgebra, block_structure, fixed_point_algebra, factor_tensor_unitary
from .sufficiency import (Config, InstanceSpec, check_sufficiency, extract_structure,
                          pull_back_structure, synthesize_sufficient_instance)
from .entropy import (MarkovSpec, TripartiteState, build_markov_state, ssa_equality_structure,
                      ssa_gap)

__all__ = [
    "__version__",
    "CoarseGrainError", "CriteriaDisagreementError", "DimensionError", "FactorizationError",
    "InvalidInputError", "NotHermitianError", "NumericalBreakdownError", "PreconditionError",
    "SingularMatrixError",
    "KrausMap", "LinearMap", "petz_dual", "transpose_alpha",
    "StarAlgebra", "block_structure", "fixed_point_algebra", "factor_tensor_unitary",
    "Config", "InstanceSpec", "check_sufficiency", "extract_structure", "pull_back_structure",
    "synthesize_sufficient_instance",
    "MarkovSpec", "TripartiteState", "build_markov_state", "ssa_equality_structure", "ssa_gap",
]
