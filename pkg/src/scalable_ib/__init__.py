"""Relevance-complexity region of the scalable Gaussian information
bottleneck with degraded decoder side information.

The library computes the T-stage region bounds (relevance per stage,
cumulative rates), sweeps and optimizes the scalar and vector boundary,
and independently verifies every formula against an explicit
joint-covariance oracle, Monte-Carlo sampling, and a finite-alphabet
variational testbed. All information quantities are in bits.
"""

from .errors import (
    ChainNotStrictlyInterior,
    Delta1Infeasible,
    Delta2Infeasible,
    DeltaInfeasible,
    DimensionMismatch,
    EmptyRange,
    FeasibilityError,
    FormatError,
    InfeasibleChain,
    InfeasiblePair,
    InvalidDistribution,
    ModelValidationError,
    NonConvergence,
    ParseError,
    RelevanceExceedsBound,
    ScalableIBError,
    SigmaOutOfRange,
    SingularConditioning,
    TargetInfeasible,
)
from .frontier import (
    Delta1Result,
    Delta2Result,
    FrontierCurve,
    FrontierSample,
    MinSumRateResult,
    RegionPoint,
    ScalarTwoStageParams,
    TwoStagePoint,
    max_delta1_given,
    max_delta2_given,
    min_sum_rate_vector,
    sigma_si_feasible_range,
    symmetric_two_stage_point,
)
from .model import (
    ChainCheck,
    GaussianScalableModel,
    OmegaChain,
    Stage,
    Violation,
    check_omega_chain,
    conditional_noise_cov,
    model_violations,
    validate_model,
)
from .oracle import (
    FisherCheckReport,
    JointCovariance,
    MCEstimate,
    build_joint_covariance,
    fisher_mmse_check,
    mc_mi_estimate,
    mc_mi_multi,
    mi_logdet,
    random_instance,
)
from .region import (
    min_cum_rate,
    rate_bound_terms,
    relevance_bound,
    scalar_T1_no_si,
    scalar_T1_with_si,
    si_mutual_information,
    vector_T1_region,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ScalableIBError",
    "DimensionMismatch",
    "ModelValidationError",
    "FeasibilityError",
    "InfeasibleChain",
    "RelevanceExceedsBound",
    "DeltaInfeasible",
    "Delta1Infeasible",
    "Delta2Infeasible",
    "InfeasiblePair",
    "EmptyRange",
    "SigmaOutOfRange",
    "TargetInfeasible",
    "NonConvergence",
    "ChainNotStrictlyInterior",
    "SingularConditioning",
    "InvalidDistribution",
    "FormatError",
    "ParseError",
    # model
    "Stage",
    "GaussianScalableModel",
    "OmegaChain",
    "Violation",
    "ChainCheck",
    "validate_model",
    "model_violations",
    "conditional_noise_cov",
    "check_omega_chain",
    # region
    "si_mutual_information",
    "relevance_bound",
    "rate_bound_terms",
    "min_cum_rate",
    "scalar_T1_with_si",
    "scalar_T1_no_si",
    "vector_T1_region",
    # frontier
    "ScalarTwoStageParams",
    "TwoStagePoint",
    "RegionPoint",
    "FrontierSample",
    "FrontierCurve",
    "symmetric_two_stage_point",
    "Delta1Result",
    "max_delta1_given",
    "Delta2Result",
    "max_delta2_given",
    "sigma_si_feasible_range",
    "MinSumRateResult",
    "min_sum_rate_vector",
    # oracle
    "JointCovariance",
    "MCEstimate",
    "FisherCheckReport",
    "build_joint_covariance",
    "mi_logdet",
    "mc_mi_estimate",
    "mc_mi_multi",
    "fisher_mmse_check",
    "random_instance",
]
