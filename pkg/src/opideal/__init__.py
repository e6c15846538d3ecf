"""Summing-type operator ideal norms on finite-dimensional instances."""
from .errors import (
    DegenerateFamilyError,
    EstimationError,
    InputError,
    OpIdealError,
    ParameterError,
    SearchError,
)
from .kernels import BACKEND
from .measures import AtomicMeasure, ScalarWeighting, embedding_constant, lp_norm
from .optim import EstimateReport, Oracle, SearchConfig, maximize_family_ratio, maximize_over_ball
from .spaces import DualPoint, NormedSpace, Operator, dual, norm, norming_functional, retract_to_ball
from .vvfun import (
    Decomposition,
    SimpleFunction,
    bochner_norm,
    composition_norm_lb,
    convex_seminorm_ub,
    phi_seminorm,
)
from .rs_core import (
    RsSystem,
    RsWitness,
    amplify_witness,
    inclusion_condition,
    rs_constant_lb,
    rs_lhs,
    rs_rhs,
)
from .sigma_summing import (
    SummingParams,
    corollary_inclusion_check,
    pi1_upper_oracle,
    pi_norm_lb,
    sigma_lhs,
    sigma_ratio,
    sigma_rhs,
)

__version__ = "0.1.0"
