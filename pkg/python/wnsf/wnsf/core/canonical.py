import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from wnsf.core.linalg import observability_blocks, vec_row
from wnsf.core.model import StateSpaceModel, markov_parameters, stack_markov, to_predictor_form
from wnsf.exceptions import InsufficientDataError, NotAdmissibleError

logger = logging.getLogger("wnsf.canonical")


@dataclass(frozen=True)
class CanonicalStructure:
    """Kronecker index and the free-parameter layout it induces.

    Single-output structures use the observer canonical form (free first
    column of A_K, coefficients a = [a_nx, ..., a_1] of the characteristic
    polynomial). Multi-output structures use the observability form: states
    are ordered by output block i of size nu_i, rows inside a block shift,
    the last row of each block is free and C picks the first state of each
    block.
    """
    kronecker_index: tuple[int, ...]
    n_u: int = 1
    n_x: int = field(init=False)
    n_y: int = field(init=False)
    free_row_indices: tuple[int, ...] = field(init=False)
    basis_row_indices: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        index = tuple(int(v) for v in self.kronecker_index)
        if not index or any(v < 1 for v in index):
            raise ValueError(f"Kronecker index must hold positive integers, got {self.kronecker_index}")
        if self.n_u < 0:
            raise ValueError("n_u must be non-negative")
        n_y, n_x = len(index), sum(index)
        object.__setattr__(self, "kronecker_index", index)
        object.__setattr__(self, "n_x", n_x)
        object.__setattr__(self, "n_y", n_y)

        basis = tuple(k * n_y + i for i in range(n_y) for k in range(index[i]))
        object.__setattr__(self, "basis_row_indices", basis)

        if n_y == 1:
            free_rows = tuple(range(n_x))
        else:
            free_rows = tuple(self.block_starts[i] + index[i] - 1 for i in range(n_y))
        object.__setattr__(self, "free_row_indices", free_rows)

    @property
    def form(self) -> str:
        return "observer" if self.n_y == 1 else "observability"

    @property
    def n_z(self) -> int:
        return self.n_u + self.n_y

    @property
    def block_starts(self) -> tuple[int, ...]:
        return tuple(int(s) for s in np.concatenate([[0], np.cumsum(self.kronecker_index)[:-1]]))

    @property
    def plus_rows(self) -> tuple[int, ...]:
        """Hankel rows forming H+(nu); equal to the basis rows in state order."""
        return self.basis_row_indices

    @property
    def minus_rows(self) -> tuple[int, ...]:
        """Hankel rows forming H-(nu): each basis row shifted by one block."""
        if self.n_y == 1:
            return (self.n_x,)
        return tuple(row + self.n_y for row in self.basis_row_indices)

    @property
    def target_rows(self) -> tuple[int, ...]:
        """Hankel row reproduced by each free-parameter relation."""
        if self.n_y == 1:
            return (self.n_x,)
        return tuple(self.kronecker_index[i] * self.n_y + i for i in range(self.n_y))

    @property
    def sign(self) -> float:
        """s in theta_r H+ = s h_target."""
        return -1.0 if self.n_y == 1 else 1.0

    @property
    def relation_count(self) -> int:
        return 1 if self.n_y == 1 else self.n_y

    @property
    def a_count(self) -> int:
        return self.n_x * self.relation_count

    @property
    def eta_count(self) -> int:
        return self.n_x * self.n_z

    @property
    def parameter_count(self) -> int:
        return self.a_count + self.eta_count

    def a_matrix(self, a_rows) -> np.ndarray:
        n_x = self.n_x
        A_K = np.zeros((n_x, n_x))
        if self.n_y == 1:
            A_K[:, 0] = -np.asarray(a_rows[0], dtype=float)[::-1]
            A_K[:-1, 1:] = np.eye(n_x - 1)
            return A_K
        for i, start in enumerate(self.block_starts):
            for k in range(self.kronecker_index[i] - 1):
                A_K[start + k, start + k + 1] = 1.0
            A_K[self.free_row_indices[i], :] = np.asarray(a_rows[i], dtype=float)
        return A_K

    def c_matrix(self) -> np.ndarray:
        C = np.zeros((self.n_y, self.n_x))
        for i, start in enumerate(self.block_starts):
            C[i, start] = 1.0
        return C

    def a_rows_from(self, A_K) -> list[np.ndarray]:
        A_K = np.asarray(A_K, dtype=float)
        if self.n_y == 1:
            return [-A_K[::-1, 0]]
        return [A_K[row, :].copy() for row in self.free_row_indices]

    def a_jacobian(self) -> np.ndarray:
        """J with Vec_row(dA_K) = d_theta_a @ J."""
        n_x = self.n_x
        J = np.zeros((self.a_count, n_x * n_x))
        if self.n_y == 1:
            for q in range(n_x):
                J[q, (n_x - 1 - q) * n_x] = -1.0
            return J
        for i, row in enumerate(self.free_row_indices):
            for j in range(n_x):
                J[i * n_x + j, row * n_x + j] = 1.0
        return J

    def parameter_labels(self) -> list[str]:
        if self.n_y == 1:
            labels = [f"a{self.n_x - q}" for q in range(self.n_x)]
        else:
            labels = [f"a{i + 1}[{j + 1}]" for i in range(self.n_y) for j in range(self.n_x)]
        for row in range(self.n_x):
            labels += [f"B[{row + 1},{c + 1}]" for c in range(self.n_u)]
            labels += [f"K[{row + 1},{c + 1}]" for c in range(self.n_y)]
        return labels

    def __repr__(self):
        return f"<CanonicalStructure nu={list(self.kronecker_index)} n_u={self.n_u} form={self.form}>"


@dataclass(frozen=True, eq=False)
class ParameterVector:
    """Free rows of A_K and eta = Vec_row([B K]) for a canonical structure."""
    a_rows: tuple[np.ndarray, ...]
    eta: np.ndarray
    structure: CanonicalStructure

    def __post_init__(self):
        rows = tuple(np.asarray(r, dtype=float).reshape(-1) for r in self.a_rows)
        eta = np.asarray(self.eta, dtype=float).reshape(-1)
        s = self.structure
        if len(rows) != s.relation_count or any(r.size != s.n_x for r in rows):
            raise ValueError(f"expected {s.relation_count} free rows of length {s.n_x}")
        if eta.size != s.eta_count:
            raise ValueError(f"eta must have length (n_u + n_y) n_x = {s.eta_count}, got {eta.size}")
        object.__setattr__(self, "a_rows", rows)
        object.__setattr__(self, "eta", eta)

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([*self.a_rows, self.eta])

    @classmethod
    def from_theta(cls, theta, structure: CanonicalStructure) -> "ParameterVector":
        theta = np.asarray(theta, dtype=float)
        n_x = structure.n_x
        rows = tuple(theta[r * n_x:(r + 1) * n_x] for r in range(structure.relation_count))
        return cls(rows, theta[structure.a_count:], structure)


def enumerate_kronecker_indices(n_x: int, n_y: int, n_u: int = 1) -> list[CanonicalStructure]:
    """All compositions of n_x into n_y positive parts, in lexicographic order."""
    if n_y < 1 or n_x < 1:
        raise ValueError("n_x and n_y must be positive")
    if n_y > n_x:
        raise ValueError(f"no Kronecker index exists for n_y = {n_y} > n_x = {n_x}")

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(1, total - parts + 2):
            for rest in compositions(total - first, parts - 1):
                yield (first, *rest)

    structures = [CanonicalStructure(index, n_u=n_u) for index in compositions(n_x, n_y)]
    return structures


def generic_structure(n_x: int, n_y: int, n_u: int = 1) -> CanonicalStructure:
    """Index admissible for almost every system: the first n_x rows of [C; CA; ...] in order."""
    if n_y > n_x:
        raise ValueError(f"no Kronecker index exists for n_y = {n_y} > n_x = {n_x}")
    base, extra = divmod(n_x, n_y)
    return CanonicalStructure(tuple(base + (1 if i < extra else 0) for i in range(n_y)), n_u=n_u)


def assemble_from_parameters(params: ParameterVector, sigma_e2: float = 1.0) -> StateSpaceModel:
    """Canonical (A_K, C) plus [B K] from eta, returned in innovations form A = A_K + K C.

    An unstable predictor is kept (flagged through `predictor_stable`) and warned about.
    """
    s = params.structure
    A_K = s.a_matrix(params.a_rows)
    B_K = params.eta.reshape(s.n_x, s.n_z)
    model = StateSpaceModel.from_predictor(A_K, B_K, s.c_matrix(), n_u=s.n_u,
                                           sigma_e2=sigma_e2, allow_unstable=True)
    if not model.predictor_stable:
        message = "assembled predictor has rho(A_K) >= 1"
        logger.warning(message)
        warnings.warn(message, RuntimeWarning, stacklevel=2)
    return model


def extract_parameters(model: StateSpaceModel, structure: CanonicalStructure) -> ParameterVector:
    """Reads the free parameters of a model already in the canonical form of `structure`."""
    A_K, B_K = to_predictor_form(model)
    return ParameterVector(tuple(structure.a_rows_from(A_K)), vec_row(B_K), structure)


def block_hankel(g, n_y: int, n_z: int, row_blocks: int, col_blocks: int) -> np.ndarray:
    """Block Hankel matrix with block (i, j) = g_{i+j-1} from g = [g_1 ... g_n]."""
    g = stack_markov(g)
    n = g.shape[1] // n_z
    if row_blocks + col_blocks - 1 > n:
        raise InsufficientDataError(
            f"{row_blocks}x{col_blocks} block Hankel needs {row_blocks + col_blocks - 1} Markov parameters, got {n}")
    return np.vstack([g[:, k * n_z:(k + col_blocks) * n_z] for k in range(row_blocks)])


@dataclass(frozen=True)
class Admissibility:
    admissible: bool
    condition_number: float
    min_singular_value: float
    projection_residual: float
    tolerance: float
    failed_test: str | None = None

    def __bool__(self):
        return self.admissible


def check_admissibility(markov, structure: CanonicalStructure, tol: float | None = None,
                        noise_aware: bool = False, margin: float = 10.0) -> Admissibility:
    """Tests whether the basis rows of the n_x-block Hankel span the (n_x+1)-block Hankel.

    Two tests: the smallest singular value of the selected rows exceeds tol,
    and projecting every Hankel row onto their span leaves a residual below
    tol. With `noise_aware` the span test allows `margin` times the
    (n_x+1)-th singular value of the Hankel matrix, which is zero for exact
    Markov parameters.
    """
    g = stack_markov(markov)
    s = structure
    n = g.shape[1] // s.n_z
    if n <= s.n_x:
        raise InsufficientDataError(f"admissibility check needs n > n_x = {s.n_x} Markov parameters, got {n}")
    H = block_hankel(g, s.n_y, s.n_z, s.n_x + 1, n - s.n_x)
    sv_full = np.linalg.svd(H, compute_uv=False)
    sigma_max = float(sv_full[0]) if sv_full.size else 0.0
    base_tol = 1e-8 * sigma_max if tol is None else float(tol)
    span_tol = base_tol
    if noise_aware and sv_full.size > s.n_x:
        span_tol += margin * float(sv_full[s.n_x])

    S = H[list(s.basis_row_indices), :]
    sv = np.linalg.svd(S, compute_uv=False)
    sigma_min = float(sv[-1]) if sv.size == s.n_x else 0.0
    cond = float(sv[0] / sigma_min) if sigma_min > 0 else np.inf

    if not sigma_min > base_tol:
        return Admissibility(False, cond, sigma_min, np.inf, base_tol, failed_test="basis rank")

    coeffs, *_ = np.linalg.lstsq(S.T, H.T, rcond=None)
    residual = float(np.max(np.linalg.norm(H - coeffs.T @ S, axis=1)))
    if not residual < span_tol:
        return Admissibility(False, cond, sigma_min, residual, span_tol, failed_test="row span")
    return Admissibility(True, cond, sigma_min, residual, span_tol)


def to_canonical(model: StateSpaceModel, structure: CanonicalStructure) -> StateSpaceModel:
    """Similarity transform of `model` to the canonical form of `structure`."""
    s = structure
    if (model.n_x, model.n_y, model.n_u) != (s.n_x, s.n_y, s.n_u):
        raise ValueError("model dimensions do not match the structure")
    A_K, B_K = to_predictor_form(model)
    blocks = observability_blocks(A_K, model.C, s.n_x + 1)

    if s.n_y == 1:
        O = np.vstack(blocks[:-1])
        if np.linalg.matrix_rank(O) < s.n_x:
            raise NotAdmissibleError("(A_K, C) is not observable", test="basis rank")
        a, *_ = np.linalg.lstsq(O.T, -blocks[-1].reshape(-1), rcond=None)
        a_rows = [a]
        O_canon = np.vstack(observability_blocks(s.a_matrix(a_rows), s.c_matrix(), s.n_x))
        g = np.vstack(markov_parameters(A_K, B_K, model.C, s.n_x))
        B_K_canon = np.linalg.solve(O_canon, g)
    else:
        T = np.vstack([blocks[k][i] for i in range(s.n_y) for k in range(s.kronecker_index[i])])
        if np.linalg.matrix_rank(T) < s.n_x:
            raise NotAdmissibleError(f"basis rows of nu = {list(s.kronecker_index)} are dependent",
                                     test="basis rank")
        A_canon = np.linalg.solve(T.T, (T @ A_K).T).T
        a_rows = s.a_rows_from(A_canon)
        B_K_canon = T @ B_K

    params = ParameterVector(tuple(a_rows), vec_row(B_K_canon), s)
    return assemble_from_parameters(params, sigma_e2=model.sigma_e2)
