"""SVD-based realization from Markov parameters, the comparison method for null-space fitting."""
import logging
import warnings

import numpy as np
import scipy.linalg

from wnsf.core.canonical import block_hankel
from wnsf.core.linalg import check_full_row_rank
from wnsf.core.model import StateSpaceModel
from wnsf.estimation.hoarx import MarkovEstimate
from wnsf.exceptions import InsufficientDataError

logger = logging.getLogger("wnsf.baseline")

GAP_WARNING = 1.5


def _fix_signs(U, Vt):
    """Largest-magnitude entry of every left singular vector made positive."""
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, Vt * signs[:, None]


def ho_kalman(markov: MarkovEstimate, n_x: int, f: int | None = None, p: int | None = None,
              W1=None, W2=None) -> StateSpaceModel:
    """Balanced realization of (A_K, B_K, C) from the f x p block Hankel matrix of g_hat.

    Optional weightings W1 (f n_y square) and W2 (p n_z square) are applied
    as W1 H W2 before the truncated SVD and removed from the factors after.
    """
    n, n_y, n_z = markov.order, markov.n_y, markov.n_z
    if f is None:
        f = (n + 1) // 2
    if p is None:
        p = min(f, n - f + 1)
    if f < 2 or p < 1:
        raise ValueError(f"need f >= 2 and p >= 1, got f={f}, p={p}")
    if f + p - 1 > n:
        raise InsufficientDataError(f"{f}x{p} block Hankel needs {f + p - 1} Markov parameters, got {n}")
    if (f - 1) * n_y < n_x or p * n_z < n_x:
        raise ValueError(f"Hankel of {f}x{p} blocks cannot carry order n_x = {n_x}")

    H = block_hankel(markov.g_hat, n_y, n_z, f, p)
    W1 = np.eye(H.shape[0]) if W1 is None else np.asarray(W1, dtype=float)
    W2 = np.eye(H.shape[1]) if W2 is None else np.asarray(W2, dtype=float)
    check_full_row_rank(W1, "W1")
    check_full_row_rank(W2, "W2")

    U, sv, Vt = scipy.linalg.svd(W1 @ H @ W2, full_matrices=False)
    U, Vt = _fix_signs(U[:, :n_x], Vt[:n_x])
    if sv.size > n_x and sv[n_x] > 0 and sv[n_x - 1] / sv[n_x] < GAP_WARNING:
        message = (f"ambiguous order: singular value gap sigma_{n_x}/sigma_{n_x + 1} = "
                   f"{sv[n_x - 1] / sv[n_x]:.3f}")
        logger.warning(message)
        warnings.warn(message, RuntimeWarning, stacklevel=2)

    root = np.sqrt(sv[:n_x])
    O = np.linalg.solve(W1, U * root)
    controllability = np.linalg.solve(W2.T, (root[:, None] * Vt).T).T

    A_K, *_ = scipy.linalg.lstsq(O[:-n_y], O[n_y:])
    C = O[:n_y]
    B_K = controllability[:, :n_z]
    logger.debug("Ho-Kalman n_x=%d f=%d p=%d sigma=%s", n_x, f, p, np.round(sv[:n_x + 1], 6).tolist())

    model = StateSpaceModel.from_predictor(A_K, B_K, C, n_u=markov.n_u, sigma_e2=markov.sigma_e2_hat,
                                           allow_unstable=True)
    if not model.predictor_stable:
        logger.warning("realized predictor has rho(A_K) >= 1")
    return model
