import logging
import warnings

import numpy as np
import scipy.linalg

from wnsf.exceptions import ConvergenceError

logger = logging.getLogger("wnsf.riccati")

DIRECT_LIMIT = 50
MAX_ITERATIONS = 100_000


def _lyapunov_residual(A, Q, X) -> float:
    return float(np.linalg.norm(A @ X @ A.T + Q - X) / max(1.0, np.linalg.norm(X)))


def _smith_doubling(A, Q, tol: float, max_iterations: int = 200):
    X, A_k = Q.copy(), A.copy()
    for iteration in range(max_iterations):
        update = A_k @ X @ A_k.T
        X = X + update
        A_k = A_k @ A_k
        if np.linalg.norm(update) <= tol * max(1.0, np.linalg.norm(X)):
            return X, iteration + 1
    raise ConvergenceError("Smith doubling did not converge", iterations=max_iterations)


def solve_lyapunov(A, Q, tol: float = 1e-10) -> np.ndarray:
    """X with X = A X A^T + Q for a stable A.

    Small problems use the direct solver, larger ones the bilinear
    transformation; a doubling iteration takes over when the plug-back
    residual is too large.
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if A.size == 0:
        return np.zeros_like(Q)
    method = "direct" if A.shape[0] <= DIRECT_LIMIT else "bilinear"
    try:
        X = scipy.linalg.solve_discrete_lyapunov(A, Q, method=method)
        if _lyapunov_residual(A, Q, X) < tol:
            return 0.5 * (X + X.T)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.debug("Lyapunov %s solve failed: %s", method, e)

    message = f"Lyapunov {method} solve inaccurate for dim {A.shape[0]}; switching to doubling"
    logger.warning(message)
    warnings.warn(message, RuntimeWarning, stacklevel=2)
    X, iterations = _smith_doubling(A, Q, tol * 1e-2)
    if _lyapunov_residual(A, Q, X) >= tol:
        raise ConvergenceError("Lyapunov equation could not be solved to tolerance", iterations=iterations)
    return 0.5 * (X + X.T)


def noise_covariances(model) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(R1, R12, R2) of the innovations form: sigma2 K K^T, sigma2 K, sigma2 I."""
    s2 = model.sigma_e2
    return s2 * model.K @ model.K.T, s2 * model.K, s2 * np.eye(model.n_y)


def solve_riccati(model, tol: float = 1e-12, max_iterations: int = MAX_ITERATIONS):
    """Fixed-point iteration of the filter Riccati equation from P = 0.

    P = A P A^T + R1 - (A P C^T + R12) Q^{-1} (A P C^T + R12)^T with Q = C P C^T + R2.
    Returns (P, Q, gain).
    """
    A, C = model.A, model.C
    R1, R12, R2 = noise_covariances(model)
    P = np.zeros((model.n_x, model.n_x))
    if model.sigma_e2 == 0.0:
        return P, np.zeros((model.n_y, model.n_y)), model.K.copy()

    for iteration in range(max_iterations):
        Q = C @ P @ C.T + R2
        cross = A @ P @ C.T + R12
        P_next = A @ P @ A.T + R1 - cross @ np.linalg.solve(Q, cross.T)
        P_next = 0.5 * (P_next + P_next.T)
        if np.linalg.norm(P_next - P) <= tol * max(1.0, np.linalg.norm(P_next)):
            P = P_next
            Q = C @ P @ C.T + R2
            gain = np.linalg.solve(Q.T, (A @ P @ C.T + R12).T).T
            logger.debug("Riccati converged in %d iterations", iteration + 1)
            return P, Q, gain
        P = P_next
    raise ConvergenceError("Riccati iteration did not converge", iterations=max_iterations)


def sensitivity_lyapunov(model, sens, P) -> list[tuple[np.ndarray, np.ndarray]]:
    """(P_i, Q_i) per parameter from P_i = A_K P_i A_K^T + forcing_i.

    forcing_i = A_i P A_K^T + A_K P A_i^T + R1_i - K R12_i^T - R12_i K^T with
    R1_i = sigma2 (K_i K^T + K K_i^T) and R12_i = sigma2 K_i.
    """
    A_K, K, C = model._A_K, model.K, model.C
    s2 = model.sigma_e2
    result = []
    for A_i, K_i in zip(sens.A, sens.K):
        R1_i = s2 * (K_i @ K.T + K @ K_i.T)
        R12_i = s2 * K_i
        forcing = A_i @ P @ A_K.T + A_K @ P @ A_i.T + R1_i - K @ R12_i.T - R12_i @ K.T
        P_i = solve_lyapunov(A_K, 0.5 * (forcing + forcing.T))
        result.append((P_i, C @ P_i @ C.T))
    return result


def gain_sensitivity(model, sens, P, Q, gain, lyapunov) -> list[np.ndarray]:
    """d gain / d theta_i = (A_i P C^T + A P_i C^T + R12_i - gain Q_i) Q^{-1}."""
    A, C = model.A, model.C
    result = []
    for A_i, K_i, (P_i, Q_i) in zip(sens.A, sens.K, lyapunov):
        rhs = A_i @ P @ C.T + A @ P_i @ C.T + model.sigma_e2 * K_i - gain @ Q_i
        result.append(np.linalg.solve(Q.T, rhs.T).T)
    return result
