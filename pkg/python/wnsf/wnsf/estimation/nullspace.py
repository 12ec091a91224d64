import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from wnsf.core.canonical import CanonicalStructure, block_hankel
from wnsf.core.linalg import check_full_row_rank, cholesky_factor, weighted_lstsq, whiten
from wnsf.estimation.hoarx import MarkovEstimate
from wnsf.exceptions import InsufficientDataError

logger = logging.getLogger("wnsf.nullspace")


@dataclass(frozen=True, eq=False)
class HankelStack:
    """(n_x+1)-block-row Hankel matrix of Markov parameters with its basis-row selection."""
    full: np.ndarray
    p: int
    structure: CanonicalStructure

    @property
    def plus_rows(self) -> tuple[int, ...]:
        return self.structure.plus_rows

    @property
    def minus_rows(self) -> tuple[int, ...]:
        return self.structure.minus_rows

    @property
    def plus(self) -> np.ndarray:
        return self.full[list(self.plus_rows), :]

    @property
    def minus(self) -> np.ndarray:
        return self.full[list(self.minus_rows), :]

    def target(self, relation: int) -> np.ndarray:
        return self.full[self.structure.target_rows[relation], :]


@dataclass(frozen=True, eq=False)
class WeightingMatrix:
    """Lambda = K^T (I kron R_n^{-1}) K for one relation, with its lower Cholesky factor."""
    lam: np.ndarray
    factor: np.ndarray | None
    source: str

    @classmethod
    def identity(cls, dim: int) -> "WeightingMatrix":
        return cls(np.eye(dim), None, "ols")

    def solve(self, X) -> np.ndarray:
        """Lambda^{-1} X."""
        if self.factor is None:
            return np.asarray(X, dtype=float)
        return scipy.linalg.cho_solve((self.factor, True), X)


def build_hankel(markov: MarkovEstimate, structure: CanonicalStructure) -> HankelStack:
    n = markov.order
    if n <= structure.n_x:
        raise InsufficientDataError(f"HOARX order n = {n} must exceed n_x = {structure.n_x}")
    if markov.n_y != structure.n_y or markov.n_u != structure.n_u:
        raise ValueError("Markov estimate and structure disagree on dimensions")
    p = n - structure.n_x
    full = block_hankel(markov.g_hat, structure.n_y, structure.n_z, structure.n_x + 1, p)
    return HankelStack(full, p, structure)


def residual_coefficients(structure: CanonicalStructure, a_rows) -> list[np.ndarray]:
    """c_r over the Hankel rows, so that the relation residual is c_r @ H."""
    coefficients = []
    for r in range(structure.relation_count):
        c = np.zeros((structure.n_x + 1) * structure.n_y)
        c[list(structure.plus_rows)] = np.asarray(a_rows[r], dtype=float)
        c[structure.target_rows[r]] -= structure.sign
        coefficients.append(c)
    return coefficients


def toeplitz_a(a, n: int, p: int) -> np.ndarray:
    """T_{n,p}(a): first column [a, 1, 0, ...], first row [a_nx, 0, ...]."""
    a = np.asarray(a, dtype=float)
    column = np.zeros(n)
    column[:a.size + 1] = np.append(a, 1.0)[:n]
    row = np.zeros(p)
    row[0] = column[0]
    return scipy.linalg.toeplitz(column, row)


def build_kn_a(a_rows, n: int, p: int, structure: CanonicalStructure) -> list[np.ndarray]:
    """K_n(a) for each relation: c_r @ Hankel(dg) == Vec_row(dg) @ K_r for every dg."""
    n_y, n_z = structure.n_y, structure.n_z
    if structure.n_y == 1:
        return [np.kron(toeplitz_a(a_rows[0], n, p), np.eye(n_z))]

    matrices = []
    cols = np.arange(p * n_z)
    for c in residual_coefficients(structure, a_rows):
        K = np.zeros((n_y * n * n_z, p * n_z))
        for row in np.flatnonzero(c):
            k, i = divmod(int(row), n_y)
            K[i * n * n_z + k * n_z + cols, cols] += c[row]
        matrices.append(K)
    return matrices


def kron_gram_weight(K, markov: MarkovEstimate) -> np.ndarray:
    """K^T (I_{n_y} kron R_n^{-1}) K through triangular solves with the Gram factor."""
    block = markov.order * markov.n_z
    lam = np.zeros((K.shape[1], K.shape[1]))
    for i in range(markov.n_y):
        X = whiten(markov.gram_factor, K[i * block:(i + 1) * block])
        lam += X.T @ X
    return 0.5 * (lam + lam.T)


def a_weighting(structure: CanonicalStructure, a_rows, markov: MarkovEstimate, p: int) -> list[WeightingMatrix]:
    """Lambda_n(a_r) = K_r^T (I_{n_y} kron R_n^{-1}) K_r per relation."""
    weights = []
    for r, K in enumerate(build_kn_a(a_rows, markov.order, p, structure)):
        lam = kron_gram_weight(K, markov)
        weights.append(WeightingMatrix(lam, cholesky_factor(lam, name=f"Lambda_n(a_{r + 1})"), "wls"))
    return weights


def ols_a(hankel: HankelStack) -> list[np.ndarray]:
    """theta_r H+ = s h_target solved per relation by least squares."""
    s = hankel.structure
    plus = hankel.plus
    cond = check_full_row_rank(plus, "H+(nu)")
    logger.debug("OLS a: cond(H+)=%.3e", cond)
    return [weighted_lstsq(plus, s.sign * hankel.target(r)) for r in range(s.relation_count)]


def wls_a(hankel: HankelStack, markov: MarkovEstimate, a_init, iterations: int = 2,
          weighting: Literal["optimal", "identity"] = "optimal") -> list[np.ndarray]:
    """Weighted refinement of the free rows of A_K; the weighting is rebuilt from the previous estimate."""
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    s = hankel.structure
    plus = hankel.plus
    check_full_row_rank(plus, "H+(nu)")
    a_rows = [np.asarray(a, dtype=float) for a in a_init]
    for iteration in range(iterations):
        if weighting == "identity":
            weights = [WeightingMatrix.identity(plus.shape[1])] * s.relation_count
        else:
            weights = a_weighting(s, a_rows, markov, hankel.p)
        a_rows = [weighted_lstsq(plus, s.sign * hankel.target(r), weights[r].factor)
                  for r in range(s.relation_count)]
        logger.debug("WLS a iteration %d: %s", iteration + 1, [np.round(a, 6).tolist() for a in a_rows])
    return a_rows
