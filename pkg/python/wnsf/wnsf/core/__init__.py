from .model import (
    StateSpaceModel,
    to_predictor_form,
    markov_parameters,
    model_markov,
    stack_markov,
    impulse_response,
    predict_one_step,
    prediction_error,
    h2_norm,
)
from .dataset import Dataset, split_index
from .canonical import (
    CanonicalStructure,
    ParameterVector,
    Admissibility,
    enumerate_kronecker_indices,
    generic_structure,
    assemble_from_parameters,
    extract_parameters,
    check_admissibility,
    block_hankel,
    to_canonical,
)
from .armax import ArmaxPolynomials, armax_to_model, model_to_armax, armax_jacobian
from .loop import Controller, ShapingFilter, closed_loop_system, realize_siso

__all__ = [
    "StateSpaceModel",
    "to_predictor_form",
    "markov_parameters",
    "model_markov",
    "stack_markov",
    "impulse_response",
    "predict_one_step",
    "prediction_error",
    "h2_norm",
    "Dataset",
    "split_index",
    "CanonicalStructure",
    "ParameterVector",
    "Admissibility",
    "enumerate_kronecker_indices",
    "generic_structure",
    "assemble_from_parameters",
    "extract_parameters",
    "check_admissibility",
    "block_hankel",
    "to_canonical",
    "ArmaxPolynomials",
    "armax_to_model",
    "model_to_armax",
    "armax_jacobian",
    "Controller",
    "ShapingFilter",
    "closed_loop_system",
    "realize_siso",
]
