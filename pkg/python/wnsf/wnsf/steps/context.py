from dataclasses import dataclass, field

import numpy as np

from wnsf.core.canonical import Admissibility, CanonicalStructure
from wnsf.core.dataset import Dataset
from wnsf.core.model import StateSpaceModel
from wnsf.estimation.hoarx import MarkovEstimate
from wnsf.estimation.nullspace import HankelStack


@dataclass
class FitContext:
    """State handed from step to step; each step fills in its own fields."""
    n_x: int
    dataset: Dataset | None = None
    markov: MarkovEstimate | None = None
    order: int | None = None
    structure: CanonicalStructure | None = None
    hankel: HankelStack | None = None
    admissibility: Admissibility | None = None
    a_ols: list[np.ndarray] | None = None
    a_wls: list[np.ndarray] | None = None
    eta_ols: np.ndarray | None = None
    eta_wls: np.ndarray | None = None
    model: StateSpaceModel | None = None
    criterion: float | None = None
    candidates: dict[str, "FitContext"] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)
    scores: dict[str, float | None] = field(default_factory=dict)

    def require(self, *names: str):
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ValueError(f"context is missing {', '.join(missing)}; an earlier step did not run")

    @property
    def theta(self) -> np.ndarray:
        """[a rows, eta] of the final estimate."""
        self.require("a_wls", "eta_wls")
        return np.concatenate([*self.a_wls, self.eta_wls])

    @property
    def theta_ols(self) -> np.ndarray:
        self.require("a_ols")
        return np.concatenate(self.a_ols)
