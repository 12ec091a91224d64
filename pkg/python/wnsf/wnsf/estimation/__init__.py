from .hoarx import MarkovEstimate, build_regressors, estimate_hoarx, best_order, select_order
from .nullspace import (
    HankelStack,
    WeightingMatrix,
    build_hankel,
    residual_coefficients,
    toeplitz_a,
    build_kn_a,
    kron_gram_weight,
    a_weighting,
    ols_a,
    wls_a,
)
from .bkfit import (
    ObservabilityMatrix,
    extended_observability,
    build_phi,
    ols_eta,
    sensitivity_Sn,
    composite_transform,
    wls_eta,
)
from .baseline import ho_kalman

__all__ = [
    "MarkovEstimate",
    "build_regressors",
    "estimate_hoarx",
    "best_order",
    "select_order",
    "HankelStack",
    "WeightingMatrix",
    "build_hankel",
    "residual_coefficients",
    "toeplitz_a",
    "build_kn_a",
    "kron_gram_weight",
    "a_weighting",
    "ols_a",
    "wls_a",
    "ObservabilityMatrix",
    "extended_observability",
    "build_phi",
    "ols_eta",
    "sensitivity_Sn",
    "composite_transform",
    "wls_eta",
    "ho_kalman",
]
