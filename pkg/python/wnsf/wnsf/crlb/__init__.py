from .riccati import solve_lyapunov, solve_riccati, sensitivity_lyapunov, gain_sensitivity, noise_covariances
from .bound import SensitivitySet, CramerRaoBound, build_sensitivities, crlb, crlb_armax
from .frequency import frequency_crlb_siso

__all__ = [
    "solve_lyapunov",
    "solve_riccati",
    "sensitivity_lyapunov",
    "gain_sensitivity",
    "noise_covariances",
    "SensitivitySet",
    "CramerRaoBound",
    "build_sensitivities",
    "crlb",
    "crlb_armax",
    "frequency_crlb_siso",
]
