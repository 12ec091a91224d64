import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from wnsf.core.canonical import CanonicalStructure
from wnsf.core.linalg import (
    check_full_row_rank,
    matrix_powers,
    observability_blocks,
    stacked_to_row_permutation,
    truncated_whitener,
    vec_row,
    weighted_lstsq,
)
from wnsf.estimation.hoarx import MarkovEstimate
from wnsf.estimation.nullspace import HankelStack, WeightingMatrix, a_weighting, build_kn_a, kron_gram_weight

logger = logging.getLogger("wnsf.bkfit")


@dataclass(frozen=True, eq=False)
class ObservabilityMatrix:
    """O = [C; C A_K; ...; C A_K^{n-1}] stacked block by block."""
    O: np.ndarray
    n_y: int
    source: str = "a_hat"

    @property
    def order(self) -> int:
        return self.O.shape[0] // self.n_y

    @property
    def n_x(self) -> int:
        return self.O.shape[1]

    def block(self, k: int) -> np.ndarray:
        return self.O[k * self.n_y:(k + 1) * self.n_y]

    def output_rows(self, i: int) -> np.ndarray:
        """O_i with rows C_i A_K^k, k = 0..n-1."""
        return self.O[i::self.n_y]


def extended_observability(A_K, C, n: int, source: str = "a_hat") -> ObservabilityMatrix:
    if n < 1:
        raise ValueError("n must be at least 1")
    C = np.atleast_2d(np.asarray(C, dtype=float))
    return ObservabilityMatrix(np.vstack(observability_blocks(A_K, C, n)), C.shape[0], source)


def build_phi(O: ObservabilityMatrix, n_z: int) -> np.ndarray:
    """Phi_n with Vec_row(g_n) = eta @ Phi_n; one O_i^T kron I_{n_z} block per output."""
    eye = np.eye(n_z)
    return np.hstack([np.kron(O.output_rows(i).T, eye) for i in range(O.n_y)])


def ols_eta(markov: MarkovEstimate, O: ObservabilityMatrix) -> np.ndarray:
    phi = build_phi(O, markov.n_z)
    check_full_row_rank(phi, "Phi_n")
    return weighted_lstsq(phi, vec_row(markov.g_hat))


def sensitivity_Sn(a_rows, n: int, structure: CanonicalStructure) -> np.ndarray:
    """First-order map from a perturbation of the free A_K parameters to Vec_row of O.

    Returns [0, S_1, ..., S_{n-1}] with S_k = J sum_{i<k} (C A_K^i)^T kron A_K^{k-i-1},
    J the parameter-to-Vec_row(A_K) jacobian of the structure.
    """
    A_K = structure.a_matrix(a_rows)
    C = structure.c_matrix()
    J = structure.a_jacobian()
    powers = matrix_powers(A_K, max(n - 1, 1))
    blocks = observability_blocks(A_K, C, max(n - 1, 1))

    width = structure.n_y * structure.n_x
    columns = [np.zeros((structure.a_count, width))]
    for k in range(1, n):
        total = sum(np.kron(blocks[i].T, powers[k - i - 1]) for i in range(k))
        columns.append(J @ total)
    return np.hstack(columns)


def composite_transform(markov: MarkovEstimate, hankel: HankelStack, a_rows, eta,
                        a_weights: list[WeightingMatrix] | None = None) -> np.ndarray:
    """K_n(a, eta) such that Vec_row(g_hat) - eta Phi_n(a_hat) ~ Vec_row(g_tilde) K_n(a, eta).

    Sums the propagation of g_tilde through each relation's weighted
    solve of Step 3 and the observability sensitivity.
    """
    s = hankel.structure
    n = markov.order
    if a_weights is None:
        a_weights = a_weighting(s, a_rows, markov, hankel.p)

    plus = hankel.plus
    B_K = np.asarray(eta, dtype=float).reshape(s.n_x, s.n_z)
    S_n = sensitivity_Sn(a_rows, n, s)
    propagate = S_n @ np.kron(np.eye(n * s.n_y), B_K) @ stacked_to_row_permutation(n, s.n_y, s.n_z)

    transform = np.eye(s.n_y * n * s.n_z)
    for r, K_r in enumerate(build_kn_a(a_rows, n, hankel.p, s)):
        W_plus = a_weights[r].solve(plus.T)
        M_r = plus @ W_plus
        gain = np.linalg.solve(M_r, W_plus.T).T
        rows = slice(r * s.n_x, (r + 1) * s.n_x)
        transform += K_r @ gain @ propagate[rows]
    return transform


def wls_eta(markov: MarkovEstimate, hankel: HankelStack, a_wls, eta_init, iterations: int = 1,
            weighting: Literal["optimal", "identity"] = "optimal", rtol: float = 1e-10) -> np.ndarray:
    """Weighted refinement of eta = Vec_row([B K]) with A_K fixed at a_wls.

    Lambda_n(a, eta) has an a_count-dimensional null space: Markov perturbations
    along the model's own a-directions move a_hat and leave the residual
    unchanged. The weighting is the pseudo-inverse on the remaining directions.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    s = hankel.structure
    O = extended_observability(s.a_matrix(a_wls), s.c_matrix(), markov.order)
    phi = build_phi(O, s.n_z)
    check_full_row_rank(phi, "Phi_n")
    target = vec_row(markov.g_hat)
    if weighting == "identity":
        return weighted_lstsq(phi, target)

    a_weights = a_weighting(s, a_wls, markov, hankel.p)
    eta = np.asarray(eta_init, dtype=float)
    for iteration in range(iterations):
        transform = composite_transform(markov, hankel, a_wls, eta, a_weights)
        whitener = truncated_whitener(kron_gram_weight(transform, markov), drop=s.a_count,
                                      rtol=rtol, name="Lambda_n(a, eta)")
        eta = weighted_lstsq(phi, target, whitener=whitener)
        logger.debug("WLS eta iteration %d: |eta|=%.6f", iteration + 1, float(np.linalg.norm(eta)))
    return eta
