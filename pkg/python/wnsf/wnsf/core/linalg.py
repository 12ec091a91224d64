import logging
import warnings

import numpy as np
import scipy.linalg

from wnsf.exceptions import SingularMatrixError

logger = logging.getLogger("wnsf.linalg")


def vec_row(X) -> np.ndarray:
    """Vectorization by row: stacks the rows of X into one flat array."""
    return np.asarray(X, dtype=float).reshape(-1)


def unvec_row(v, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(rows, cols)


def spectral_radius(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def matrix_powers(A, count: int) -> list[np.ndarray]:
    """[I, A, A^2, ..., A^(count-1)] by repeated multiplication."""
    A = np.asarray(A, dtype=float)
    powers = [np.eye(A.shape[0])]
    for _ in range(1, count):
        powers.append(powers[-1] @ A)
    return powers[:count]


def observability_blocks(A, C, count: int) -> list[np.ndarray]:
    """[C, CA, ..., CA^(count-1)], each block obtained from the previous one."""
    A = np.asarray(A, dtype=float)
    block = np.asarray(C, dtype=float)
    blocks = []
    for _ in range(count):
        blocks.append(block)
        block = block @ A
    return blocks


def stacked_to_row_permutation(n: int, n_y: int, n_z: int) -> np.ndarray:
    """Permutation Π with x_row = x_stacked @ Π.

    x_stacked is Vec_row of the block column [g_1; ...; g_n] (order block,
    output, column); x_row is Vec_row of [g_1 ... g_n] (order output, block,
    column).
    """
    size = n * n_y * n_z
    perm = np.zeros((size, size))
    for k in range(n):
        for i in range(n_y):
            for m in range(n_z):
                stacked = (k * n_y + i) * n_z + m
                row = i * n * n_z + k * n_z + m
                perm[stacked, row] = 1.0
    return perm


def cholesky_factor(S, name: str = "matrix", regularize: bool = True):
    """Lower Cholesky factor of a symmetric matrix.

    When the plain factorization fails and `regularize` is set, a ridge of
    1e-12 * trace/dim is added once and a warning is emitted.
    """
    S = 0.5 * (np.asarray(S, dtype=float) + np.asarray(S, dtype=float).T)
    try:
        return scipy.linalg.cholesky(S, lower=True)
    except np.linalg.LinAlgError:
        if not regularize:
            raise SingularMatrixError(
                f"{name} is not positive definite",
                smallest_eigenvalue=float(np.linalg.eigvalsh(S)[0]),
            )

    dim = S.shape[0]
    ridge = 1e-12 * np.trace(S) / max(dim, 1)
    message = f"{name} numerically singular; adding ridge {ridge:.3e}"
    logger.warning(message)
    warnings.warn(message, RuntimeWarning, stacklevel=2)
    try:
        return scipy.linalg.cholesky(S + ridge * np.eye(dim), lower=True)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(
            f"{name} is singular even after regularization",
            smallest_eigenvalue=float(np.linalg.eigvalsh(S)[0]),
        )


def truncated_whitener(S, drop: int = 0, rtol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    """F with S^+ = F^T F, S^+ the pseudo-inverse keeping the well-conditioned eigen-directions.

    The `drop` smallest eigenvalues are discarded whatever their size, and so
    is every eigenvalue below rtol times the largest.
    """
    S = 0.5 * (np.asarray(S, dtype=float) + np.asarray(S, dtype=float).T)
    eigenvalues, vectors = scipy.linalg.eigh(S)
    top = eigenvalues[-1] if eigenvalues.size else 0.0
    if top <= 0.0:
        raise SingularMatrixError(f"{name} has no positive eigenvalue", smallest_eigenvalue=float(top))
    keep = eigenvalues > rtol * top
    keep[:drop] = False
    if not keep.any():
        raise SingularMatrixError(f"{name} has no direction left after truncation",
                                  smallest_eigenvalue=float(eigenvalues[0]))
    logger.debug("%s: kept %d of %d eigen-directions", name, int(keep.sum()), keep.size)
    return vectors[:, keep].T / np.sqrt(eigenvalues[keep])[:, None]


def whiten(L, X) -> np.ndarray:
    """L^{-1} X for a lower triangular L."""
    return scipy.linalg.solve_triangular(L, X, lower=True)


def weighted_lstsq(regressor, target, weight_factor=None, whitener=None) -> np.ndarray:
    """Solve theta @ regressor ~ target in the weighted LS sense.

    `regressor` is (d x m), `target` is (m,), the weighting is W = Λ^{-1}
    with Λ = L L^T given by its lower Cholesky factor L, or W = F^T F for an
    explicit `whitener` F. Without either the problem is ordinary least squares.
    """
    regressor = np.asarray(regressor, dtype=float)
    target = np.asarray(target, dtype=float)
    if whitener is not None:
        design, rhs = whitener @ regressor.T, whitener @ target
    elif weight_factor is None:
        design, rhs = regressor.T, target
    else:
        design = whiten(weight_factor, regressor.T)
        rhs = whiten(weight_factor, target)
    solution, *_ = scipy.linalg.lstsq(design, rhs)
    return solution


def check_full_row_rank(X, name: str, tol: float = 1e-12) -> float:
    """Raise SingularMatrixError unless X has full row rank; returns the condition number."""
    X = np.asarray(X, dtype=float)
    sv = np.linalg.svd(X, compute_uv=False)
    if sv.size < X.shape[0] or sv[0] == 0.0 or sv[-1] <= tol * sv[0]:
        cond = np.inf if sv.size == 0 or sv[-1] == 0.0 else float(sv[0] / sv[-1])
        raise SingularMatrixError(f"{name} does not have full row rank (condition {cond:.3e})",
                                  condition_number=cond)
    return float(sv[0] / sv[-1])
