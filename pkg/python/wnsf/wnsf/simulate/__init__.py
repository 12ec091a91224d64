from .excitation import generate_excitation, excitation_variance
from .simulator import make_rng, spawn_rngs, simulate
from .random_system import random_system

__all__ = [
    "generate_excitation",
    "excitation_variance",
    "make_rng",
    "spawn_rngs",
    "simulate",
    "random_system",
]
