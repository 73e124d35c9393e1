"""Robust matrix factorization with an l1 loss, solved by majorant surrogate schedules."""

from .datagen import (
    GroundTruthBundle,
    SyntheticSpec,
    generate,
    ground_truth_error,
    observed_error,
)
from .kernels import masked_l1, shrink, shrink_positive, spectral_norm, truncated_svd_init
from .ladmpsap import InnerConfig, InnerResult, InnerState, StepSizes, solve_inner
from .matrixio import (
    load_factors,
    load_masked_matrix,
    save_factors,
    save_masked_matrix,
)
from .mm import (
    DescentTrace,
    IterationReport,
    MajorizationCertificate,
    MmMode,
    TraceEntry,
    certify_majorization,
    check_asymptotic_smoothness,
    check_sufficient_descent,
    run_mm,
)
from .model import (
    FactorPair,
    InnerProblem,
    MaskedMatrix,
    RmfProblem,
    SurrogateParams,
    Variant,
    build_inner_problem,
    objective,
    rho_bounds,
    surrogate_value,
)

__all__ = [
    "DescentTrace",
    "FactorPair",
    "GroundTruthBundle",
    "InnerConfig",
    "InnerProblem",
    "InnerResult",
    "InnerState",
    "IterationReport",
    "MajorizationCertificate",
    "MaskedMatrix",
    "MmMode",
    "RmfProblem",
    "StepSizes",
    "SurrogateParams",
    "SyntheticSpec",
    "TraceEntry",
    "Variant",
    "build_inner_problem",
    "certify_majorization",
    "check_asymptotic_smoothness",
    "check_sufficient_descent",
    "generate",
    "ground_truth_error",
    "load_factors",
    "load_masked_matrix",
    "masked_l1",
    "objective",
    "observed_error",
    "rho_bounds",
    "run_mm",
    "save_factors",
    "save_masked_matrix",
    "shrink",
    "shrink_positive",
    "solve_inner",
    "spectral_norm",
    "surrogate_value",
    "truncated_svd_init",
]
