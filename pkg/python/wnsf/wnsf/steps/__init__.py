from .context import FitContext
from .step_base import Step
from .fit_steps import (
    HoarxStep,
    HankelStep,
    OlsAStep,
    WlsAStep,
    OlsEtaStep,
    WlsEtaStep,
    AssembleStep,
    SelectStep,
)

__all__ = [
    "FitContext",
    "Step",
    "HoarxStep",
    "HankelStep",
    "OlsAStep",
    "WlsAStep",
    "OlsEtaStep",
    "WlsEtaStep",
    "AssembleStep",
    "SelectStep",
]
