import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.signal

from wnsf.core.linalg import observability_blocks, spectral_radius
from wnsf.exceptions import UnstableSystemError

logger = logging.getLogger("wnsf.model")

STABILITY_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Innovations-form model x+ = A x + B u + K e, y = C x + e with Cov(e) = sigma_e2 * I.

    Construction checks dimensions and predictor stability rho(A - K C) < 1.
    Pass `allow_unstable=True` to keep an unstable predictor for inspection;
    the verdict is then available as `predictor_stable`.
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    K: np.ndarray
    sigma_e2: float = 1.0
    allow_unstable: bool = field(default=False, repr=False)
    _A_K: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        n_x = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n_x, -1) if np.size(self.B) else np.zeros((n_x, 0))
        K = np.asarray(self.K, dtype=float).reshape(n_x, -1)

        if A.shape != (n_x, n_x):
            raise ValueError(f"A must be square, got {A.shape}")
        if C.shape[1] != n_x:
            raise ValueError(f"C must have {n_x} columns, got {C.shape}")
        if K.shape != (n_x, C.shape[0]):
            raise ValueError(f"K must be {n_x}x{C.shape[0]}, got {K.shape}")
        if self.sigma_e2 < 0:
            raise ValueError("sigma_e2 must be non-negative")

        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "sigma_e2", float(self.sigma_e2))

        A_K = self._A_K if self._A_K is not None else A - K @ C
        object.__setattr__(self, "_A_K", np.asarray(A_K, dtype=float))

        if not self.predictor_stable and not self.allow_unstable:
            raise UnstableSystemError(
                f"predictor is unstable: rho(A - K C) = {spectral_radius(self._A_K):.6f}")

    @classmethod
    def from_predictor(cls, A_K, B_K, C, n_u: int, sigma_e2: float = 1.0, allow_unstable: bool = False):
        """Builds the innovations form from (A_K, [B K], C), keeping A_K exactly."""
        A_K = np.atleast_2d(np.asarray(A_K, dtype=float))
        B_K = np.asarray(B_K, dtype=float).reshape(A_K.shape[0], -1)
        C = np.atleast_2d(np.asarray(C, dtype=float))
        B, K = B_K[:, :n_u], B_K[:, n_u:]
        return cls(A=A_K + K @ C, B=B, C=C, K=K, sigma_e2=sigma_e2,
                   allow_unstable=allow_unstable, _A_K=A_K)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    @property
    def n_z(self) -> int:
        return self.n_u + self.n_y

    @property
    def predictor_stable(self) -> bool:
        return spectral_radius(self._A_K) < 1.0 - STABILITY_SLACK

    def with_sigma(self, sigma_e2: float) -> "StateSpaceModel":
        return StateSpaceModel(self.A, self.B, self.C, self.K, sigma_e2,
                               allow_unstable=self.allow_unstable, _A_K=self._A_K)

    def __repr__(self):
        return (f"<StateSpaceModel n_x={self.n_x} n_u={self.n_u} n_y={self.n_y} "
                f"sigma_e2={self.sigma_e2:.4g} stable={self.predictor_stable}>")


def to_predictor_form(model: StateSpaceModel) -> tuple[np.ndarray, np.ndarray]:
    """(A_K, B_K) with A_K = A - K C and B_K = [B | K]."""
    return model._A_K.copy(), np.hstack([model.B, model.K])


def markov_parameters(A_K, B_K, C, n: int) -> list[np.ndarray]:
    """Predictor Markov parameters g_i = C A_K^{i-1} B_K for i = 1..n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    B_K = np.asarray(B_K, dtype=float)
    return [block @ B_K for block in observability_blocks(A_K, C, n)]


def stack_markov(markov) -> np.ndarray:
    """[g_1 ... g_n] as one (n_y x n n_z) array from a sequence of blocks or an array."""
    if isinstance(markov, np.ndarray):
        return np.atleast_2d(markov)
    return np.hstack([np.atleast_2d(g) for g in markov])


def model_markov(model: StateSpaceModel, n: int) -> np.ndarray:
    A_K, B_K = to_predictor_form(model)
    return stack_markov(markov_parameters(A_K, B_K, model.C, n))


def impulse_response(model: StateSpaceModel, horizon: int, path: str = "input") -> np.ndarray:
    """Impulse response C A^{i-1} B (path="input") or C A^{i-1} K (path="noise"), i = 1..horizon.

    Returns an array of shape (horizon, n_y, n_u) or (horizon, n_y, n_y).
    """
    if path not in ("input", "noise"):
        raise ValueError("path must be 'input' or 'noise'")
    gain = model.B if path == "input" else model.K
    return np.stack([block @ gain for block in observability_blocks(model.A, model.C, horizon)])


def predict_one_step(model: StateSpaceModel, dataset) -> tuple[np.ndarray, np.ndarray]:
    """One-step-ahead predictor x+ = A_K x + B u + K y, y_hat = C x, from zero initial state.

    Returns (y_hat, residuals).
    """
    A_K, B_K = to_predictor_form(model)
    z = np.hstack([dataset.u, dataset.y])
    D = np.zeros((model.n_y, model.n_z))
    _, y_hat, _ = scipy.signal.dlsim((A_K, B_K, model.C, D, 1), z)
    y_hat = np.asarray(y_hat).reshape(dataset.y.shape)
    return y_hat, dataset.y - y_hat


def prediction_error(model: StateSpaceModel, dataset) -> float:
    """Mean squared one-step-ahead prediction error per output channel."""
    _, residuals = predict_one_step(model, dataset)
    return float(np.mean(residuals ** 2))


def h2_norm(model: StateSpaceModel) -> float:
    """H2 norm of G(q) = C (qI - A)^{-1} B from the observability Gramian."""
    if model.n_u == 0:
        return 0.0
    if spectral_radius(model.A) >= 1.0:
        raise UnstableSystemError("H2 norm undefined for unstable A")
    gramian = scipy.linalg.solve_discrete_lyapunov(model.A.T, model.C.T @ model.C)
    return float(np.sqrt(max(np.trace(model.B.T @ gramian @ model.B), 0.0)))
