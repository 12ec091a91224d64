import logging
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import scipy.linalg

from wnsf.core.dataset import Dataset
from wnsf.core.model import StateSpaceModel, model_markov, prediction_error, stack_markov
from wnsf.exceptions import InsufficientDataError, SingularMatrixError, WNSFError

logger = logging.getLogger("wnsf.hoarx")

SINGULAR_RATIO = 1e-14


@dataclass(frozen=True, eq=False)
class MarkovEstimate:
    """Step-1 output: g_hat = [g_1 ... g_n] with Gram matrix R_n and noise variance estimate.

    Cov(Vec_row(g_hat - g)) is sigma_e2_hat / N * kron(I_{n_y}, R_n^{-1}).
    """
    g_hat: np.ndarray
    gram: np.ndarray
    effective_samples: int
    sigma_e2_hat: float
    order: int
    n_u: int
    _gram_factor: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        g = stack_markov(self.g_hat).astype(float)
        gram = np.asarray(self.gram, dtype=float)
        dim = self.order * (self.n_u + g.shape[0])
        if g.shape[1] != dim or gram.shape != (dim, dim):
            raise ValueError(f"g_hat must be n_y x {dim} and gram {dim} x {dim}")
        if not np.allclose(gram, gram.T, atol=1e-12 * max(1.0, np.abs(gram).max())):
            raise ValueError("gram must be symmetric")
        if self._gram_factor is None:
            try:
                factor = scipy.linalg.cholesky(0.5 * (gram + gram.T), lower=True)
            except np.linalg.LinAlgError:
                raise SingularMatrixError("R_n is not positive definite",
                                          smallest_eigenvalue=float(np.linalg.eigvalsh(gram)[0]))
            object.__setattr__(self, "_gram_factor", factor)
        object.__setattr__(self, "g_hat", g)
        object.__setattr__(self, "gram", gram)

    @property
    def n_y(self) -> int:
        return self.g_hat.shape[0]

    @property
    def n_z(self) -> int:
        return self.n_u + self.n_y

    @property
    def gram_factor(self) -> np.ndarray:
        """Lower Cholesky factor L of R_n."""
        return self._gram_factor

    def blocks(self) -> list[np.ndarray]:
        return [self.g_hat[:, i * self.n_z:(i + 1) * self.n_z] for i in range(self.order)]

    def covariance(self) -> np.ndarray:
        """Full covariance of Vec_row(g_hat); only for small problems and checks."""
        inv = scipy.linalg.cho_solve((self._gram_factor, True), np.eye(self.gram.shape[0]))
        return self.sigma_e2_hat / self.effective_samples * np.kron(np.eye(self.n_y), inv)

    @classmethod
    def from_model(cls, model: StateSpaceModel, n: int, effective_samples: int = 1,
                   gram=None) -> "MarkovEstimate":
        """Exact Markov parameters of `model`, the noise-free limit of Step 1."""
        dim = n * model.n_z
        gram = np.eye(dim) if gram is None else gram
        return cls(model_markov(model, n), gram, effective_samples, model.sigma_e2, n, model.n_u)


def build_regressors(dataset: Dataset, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Targets y_k and regressors [z_{k-1}, ..., z_{k-n}] for k = n..N (one-based).

    Gives N - n + 1 rows. The first row reaches back to the pre-sample
    z_0 = 0 of a system started at rest; every other lag is a recorded sample.
    """
    N_bar = dataset.sample_count
    if n < 1:
        raise ValueError("order n must be at least 1")
    if n >= N_bar:
        raise InsufficientDataError(f"insufficient data for order n = {n} (N = {N_bar})")

    z = dataset.z
    padded = np.vstack([np.zeros((1, z.shape[1])), z])
    regressors = np.hstack([padded[n - j:N_bar - j + 1] for j in range(1, n + 1)])
    targets = dataset.y[n - 1:]
    return targets, regressors


def _resolve_ridge(ridge, gram) -> float:
    if ridge == "auto":
        return 1e-10 * np.trace(gram) / gram.shape[0]
    ridge = float(ridge)
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    return ridge


def estimate_hoarx(dataset: Dataset, n: int, ridge: float | str = 0.0) -> MarkovEstimate:
    """OLS estimate g_hat = r_n (R_n + ridge I)^{-1} of the first n predictor Markov parameters."""
    targets, regressors = build_regressors(dataset, n)
    N = targets.shape[0]
    gram = regressors.T @ regressors / N
    cross = targets.T @ regressors / N
    ridge = _resolve_ridge(ridge, gram)
    system = gram + ridge * np.eye(gram.shape[0])

    eigenvalues = np.linalg.eigvalsh(system)
    if eigenvalues[-1] <= 0 or eigenvalues[0] <= SINGULAR_RATIO * eigenvalues[-1]:
        raise SingularMatrixError(
            f"regressor Gram matrix is numerically singular for n = {n} "
            f"(smallest eigenvalue {eigenvalues[0]:.3e}); data not persistently exciting",
            smallest_eigenvalue=float(eigenvalues[0]))

    factor = scipy.linalg.cho_factor(system, lower=True)
    g_hat = scipy.linalg.cho_solve(factor, cross.T).T

    residuals = targets - regressors @ g_hat.T
    sigma_e2_hat = float(np.sum(residuals ** 2) / (N * dataset.n_y))
    logger.debug("HOARX n=%d N=%d sigma_e2_hat=%.4e min_eig=%.3e", n, N, sigma_e2_hat, eigenvalues[0])

    gram_factor = np.tril(factor[0])
    return MarkovEstimate(g_hat, gram, N, sigma_e2_hat, n, dataset.n_u, _gram_factor=gram_factor)


def best_order(errors: dict[int, float], rtol: float = 1e-9, atol: float = 1e-12) -> int:
    """Order with the smallest prediction error; near-ties go to the smaller order."""
    if not errors:
        raise WNSFError("no order in the grid produced a model")
    best = min(errors.values())
    return min(n for n, value in errors.items() if np.isclose(value, best, rtol=rtol, atol=atol))


def select_order(dataset: Dataset | None, grid, fitter: Callable[[Dataset, int], Any],
                 score: Callable[[Any, Dataset], float] = prediction_error) -> int:
    """Picks the HOARX order whose final model predicts the estimation data best.

    `fitter(dataset, n)` runs the full identification for one order and
    `score(result, dataset)` rates it, the one-step prediction error by
    default. Orders whose fit fails are skipped.
    """
    grid = sorted(set(int(n) for n in grid))
    if not grid:
        raise ValueError("order grid is empty")
    errors = {}
    for n in grid:
        try:
            errors[n] = score(fitter(dataset, n), dataset)
        except WNSFError as e:
            logger.warning("order n=%d skipped: %s", n, e)
    return best_order(errors)
