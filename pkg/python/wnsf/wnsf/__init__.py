"""State-space system identification by weighted null space fitting."""
from wnsf.config import ExperimentConfig, FitConfig, RandomSystemConstraints
from wnsf.core import Dataset, StateSpaceModel, CanonicalStructure
from wnsf.executor import WNSFExecutor, monte_carlo
from wnsf.crlb import crlb
from wnsf.simulate import simulate, random_system

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "FitConfig",
    "RandomSystemConstraints",
    "Dataset",
    "StateSpaceModel",
    "CanonicalStructure",
    "WNSFExecutor",
    "monte_carlo",
    "crlb",
    "simulate",
    "random_system",
]
