import os
from typing import Annotated, Literal, Union

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from wnsf.core.canonical import CanonicalStructure, enumerate_kronecker_indices
from wnsf.core.loop import Controller, ShapingFilter
from wnsf.core.model import StateSpaceModel

load_dotenv()

SCHEMA_VERSION = "1.0"


def _int_env(name: str, default: int) -> int:
    value = os.getenv(name, "").strip()
    if not value:
        return default
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"environment variable {name} must be an integer, got '{value}'")


class Settings:
    WNSF_THREADS = _int_env("WNSF_THREADS", 0)
    WNSF_LOG_LEVEL = os.getenv("WNSF_LOG_LEVEL", "WARNING").strip().upper() or "WARNING"

    @classmethod
    def max_workers(cls) -> int | None:
        return cls.WNSF_THREADS if cls.WNSF_THREADS > 0 else None


class _Config(BaseModel):
    model_config = ConfigDict(extra="forbid")


# -------------------- LOOPS --------------------
class OpenLoop(_Config):
    kind: Literal["open"] = "open"
    reference_gain: float = 1.0

    def controller(self, n_u: int, n_y: int) -> Controller | None:
        return None


class StaticFeedback(_Config):
    """u = g_r r - F y with a constant n_u x n_y gain F."""
    kind: Literal["static"] = "static"
    gain: list[list[float]]
    reference_gain: float = 1.0

    def controller(self, n_u: int, n_y: int) -> Controller:
        controller = Controller.static(self.gain)
        if controller.D.shape != (n_u, n_y):
            raise ValueError(f"feedback gain must be {n_u}x{n_y}, got {controller.D.shape}")
        return controller


class RationalFeedback(_Config):
    """SISO u = g_r r - (num/den)(q) y with q^-1 coefficient lists."""
    kind: Literal["rational"] = "rational"
    num: list[float]
    den: list[float]
    reference_gain: float = 1.0

    @field_validator("num", "den")
    @classmethod
    def _non_empty(cls, value):
        if not value:
            raise ValueError("polynomial must have at least one coefficient")
        return value

    def controller(self, n_u: int, n_y: int) -> Controller:
        if (n_u, n_y) != (1, 1):
            raise ValueError("rational feedback requires a single-input single-output model")
        return Controller.rational(self.num, self.den)


LoopConfig = Annotated[Union[OpenLoop, StaticFeedback, RationalFeedback], Field(discriminator="kind")]


# -------------------- EXCITATIONS --------------------
class WhiteExcitation(_Config):
    kind: Literal["white"] = "white"
    variance: float = Field(1.0, ge=0)


class FilteredWhiteExcitation(_Config):
    """White noise of the given variance through num/den (q^-1 coefficients)."""
    kind: Literal["filtered_white"] = "filtered_white"
    num: list[float]
    den: list[float] = [1.0]
    variance: float = Field(1.0, ge=0)


class MultisineExcitation(_Config):
    """Per channel: sum of a_j sin(w_j k + phi_j) plus white dither; frequencies in rad/sample."""
    kind: Literal["multisine"] = "multisine"
    frequencies: list[list[float]]
    amplitudes: list[list[float]]
    phases: list[list[float]] | None = None
    dither_variance: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _matching_shapes(self):
        if len(self.frequencies) != len(self.amplitudes) or any(
                len(f) != len(a) for f, a in zip(self.frequencies, self.amplitudes)):
            raise ValueError("frequencies and amplitudes must have matching shapes")
        if self.phases is not None and [len(p) for p in self.phases] != [len(f) for f in self.frequencies]:
            raise ValueError("phases must match frequencies")
        return self


class ImpulseExcitation(_Config):
    kind: Literal["impulse"] = "impulse"
    channel: int = Field(0, ge=0)
    amplitude: float = 1.0


ExcitationConfig = Annotated[
    Union[WhiteExcitation, FilteredWhiteExcitation, MultisineExcitation, ImpulseExcitation],
    Field(discriminator="kind"),
]


class ExperimentConfig(_Config):
    schema_version: str = SCHEMA_VERSION
    sample_count: int = Field(gt=0)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    loop: LoopConfig = OpenLoop()
    excitation: ExcitationConfig = WhiteExcitation()
    innovation_variance: float | None = Field(None, ge=0)
    burn_in: int = Field(0, ge=0)

    def shaping(self, n_u: int) -> ShapingFilter:
        """Stationary description of the reference for the CRLB."""
        excitation = self.excitation
        if isinstance(excitation, WhiteExcitation):
            return ShapingFilter.white(n_u, excitation.variance)
        if isinstance(excitation, FilteredWhiteExcitation):
            return ShapingFilter(n_u, excitation.variance, np.asarray(excitation.num), np.asarray(excitation.den))
        raise ValueError(f"CRLB requires a white or filtered white reference, got '{excitation.kind}'")


class RandomSystemConstraints(_Config):
    pole_cap: float = Field(0.97, gt=0, lt=1)
    min_pole: float = Field(0.5, ge=0, lt=1)
    predictor_cap: float = Field(0.97, gt=0, lt=1)
    h2_min: float = Field(2.0, gt=0)
    h2_max: float = Field(4.0, gt=0)
    sigma_e2: float = Field(1.0, ge=0)
    max_rejections: int = Field(10_000, gt=0)
    canonical: bool = False

    @model_validator(mode="after")
    def _ordered(self):
        if self.h2_min >= self.h2_max:
            raise ValueError("h2_min must be below h2_max")
        if self.min_pole > self.pole_cap:
            raise ValueError("min_pole must not exceed pole_cap")
        return self


class FitConfig(_Config):
    schema_version: str = SCHEMA_VERSION
    n_x: int = Field(gt=0)
    order: int | None = Field(None, gt=1)
    order_grid: list[int] | None = None
    structure: Literal["auto"] | list[int] = "auto"
    a_iterations: int = Field(1, ge=1)
    eta_iterations: int = Field(1, ge=1)
    weighting: Literal["optimal", "identity"] = "optimal"
    ridge: float | Literal["auto"] = 0.0
    admissibility_tol: float | None = None
    noise_aware: bool = True

    @model_validator(mode="after")
    def _consistent(self):
        if self.order is not None and self.order_grid is not None:
            raise ValueError("give either order or order_grid, not both")
        orders = [self.order] if self.order is not None else (self.order_grid or [])
        if any(n <= self.n_x for n in orders):
            raise ValueError(f"every order must exceed n_x = {self.n_x}")
        if isinstance(self.structure, list) and sum(self.structure) != self.n_x:
            raise ValueError("Kronecker index must sum to n_x")
        return self

    def orders(self, sample_count: int) -> list[int]:
        """Explicit order, explicit grid, or 2 n_x .. min(10 n_x, N/10) in steps of n_x."""
        if self.order is not None:
            return [self.order]
        if self.order_grid:
            return sorted(set(self.order_grid))
        upper = min(10 * self.n_x, sample_count // 10)
        grid = list(range(2 * self.n_x, upper + 1, self.n_x))
        return grid or [2 * self.n_x]

    def structures(self, n_y: int, n_u: int) -> list[CanonicalStructure]:
        if self.structure == "auto":
            return enumerate_kronecker_indices(self.n_x, n_y, n_u)
        if len(self.structure) != n_y:
            raise ValueError(f"Kronecker index needs {n_y} entries, got {len(self.structure)}")
        return [CanonicalStructure(tuple(self.structure), n_u=n_u)]


# -------------------- DOCUMENTS --------------------
class CanonicalDocument(_Config):
    kronecker_index: list[int]


class ModelDocument(_Config):
    A: list[list[float]]
    B: list[list[float]]
    C: list[list[float]]
    K: list[list[float]]
    sigma_e2: float = Field(1.0, ge=0)
    canonical: CanonicalDocument | None = None

    @classmethod
    def from_model(cls, model: StateSpaceModel, structure: CanonicalStructure | None = None) -> "ModelDocument":
        return cls(A=model.A.tolist(), B=model.B.tolist(), C=model.C.tolist(), K=model.K.tolist(),
                   sigma_e2=model.sigma_e2,
                   canonical=CanonicalDocument(kronecker_index=list(structure.kronecker_index)) if structure else None)

    def to_model(self) -> StateSpaceModel:
        n_x = len(self.A)
        B = np.asarray(self.B, dtype=float).reshape(n_x, -1) if n_x and any(self.B) else np.zeros((n_x, 0))
        return StateSpaceModel(np.asarray(self.A, dtype=float), B, np.asarray(self.C, dtype=float),
                               np.asarray(self.K, dtype=float), self.sigma_e2)

    def structure(self) -> CanonicalStructure | None:
        if self.canonical is None:
            return None
        n_u = len(self.B[0]) if self.B and self.B[0] else 0
        return CanonicalStructure(tuple(self.canonical.kronecker_index), n_u=n_u)


class FitReport(_Config):
    schema_version: str = SCHEMA_VERSION
    n_x: int
    order: int
    kronecker_index: list[int]
    sigma_e2_hat: float
    selection_criterion: str
    criterion_value: float | None = None
    candidates: dict[str, float | None] = {}
    failures: dict[str, str] = {}
    parameters: dict[str, float]
    flagged: bool = False
    logs: list[dict] = []


class CRLBDocument(_Config):
    schema_version: str = SCHEMA_VERSION
    labels: list[str]
    sigma_e2: float
    information: list[list[float]]
    covariance: list[list[float]] | None = None
    singular: bool = False


DOCUMENTS = {
    "experiment": ExperimentConfig,
    "random-system": RandomSystemConstraints,
    "fit": FitConfig,
    "model": ModelDocument,
    "report": FitReport,
    "crlb": CRLBDocument,
}
