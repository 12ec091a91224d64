from .executor import WNSFExecutor
from .montecarlo import monte_carlo

__all__ = ["WNSFExecutor", "monte_carlo"]
