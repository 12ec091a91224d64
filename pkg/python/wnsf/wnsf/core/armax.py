"""ARMAX view of single-output canonical models.

The observer canonical form with characteristic polynomial
A(q) = 1 + a_1 q^-1 + ... + a_nx q^-nx is the ARMAX model
F(q) y = B(q) u + A(q) e with f_i = a_i - k_i and b_i the rows of B.
"""
from dataclasses import dataclass

import numpy as np

from wnsf.core.canonical import CanonicalStructure, ParameterVector, assemble_from_parameters, extract_parameters
from wnsf.core.model import StateSpaceModel


@dataclass(frozen=True, eq=False)
class ArmaxPolynomials:
    f: np.ndarray
    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float).reshape(-1)
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if f.size != a.size or b.size not in (0, a.size):
            raise ValueError("f and a must have equal length n_x; b must be empty or of length n_x")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    @property
    def n_x(self) -> int:
        return self.a.size

    @property
    def n_u(self) -> int:
        return 1 if self.b.size else 0

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.f, self.b, self.a])

    def polynomials(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(F, B, A) as q^-1 coefficient arrays ready for scipy.signal."""
        F = np.concatenate([[1.0], self.f])
        B = np.concatenate([[0.0], self.b]) if self.b.size else np.zeros(1)
        A = np.concatenate([[1.0], self.a])
        return F, B, A

    def labels(self) -> list[str]:
        n = self.n_x
        return ([f"f{i + 1}" for i in range(n)] + [f"b{i + 1}" for i in range(self.b.size)]
                + [f"a{i + 1}" for i in range(n)])


def armax_to_model(poly: ArmaxPolynomials, sigma_e2: float = 1.0) -> StateSpaceModel:
    structure = CanonicalStructure((poly.n_x,), n_u=poly.n_u)
    k = poly.a - poly.f
    B_K = np.column_stack([poly.b, k]) if poly.n_u else k[:, None]
    params = ParameterVector((poly.a[::-1],), B_K.reshape(-1), structure)
    return assemble_from_parameters(params, sigma_e2=sigma_e2)


def model_to_armax(model: StateSpaceModel) -> ArmaxPolynomials:
    """Reads (F, B, A) from a single-output model in observer canonical form."""
    if model.n_y != 1 or model.n_u > 1:
        raise ValueError("ARMAX view requires one output and at most one input")
    params = extract_parameters(model, CanonicalStructure((model.n_x,), n_u=model.n_u))
    a = params.a_rows[0][::-1]
    B_K = params.eta.reshape(model.n_x, model.n_z)
    b = B_K[:, 0] if model.n_u else np.zeros(0)
    return ArmaxPolynomials(f=a - B_K[:, -1], b=b, a=a)


def armax_jacobian(n_x: int, n_u: int = 1) -> np.ndarray:
    """d theta_armax / d theta_canonical for theta_armax = [f, b, a].

    Canonical order is [a_nx, ..., a_1, Vec_row([B K])]. Information
    matrices transform as M_canonical = J^T M_armax J.
    """
    if n_u not in (0, 1):
        raise ValueError("ARMAX view requires at most one input")
    n_z = n_u + 1
    dim = n_x + n_x * n_z
    J = np.zeros((n_x * (2 + n_u), dim))
    for r in range(n_x):
        a_col = n_x - 1 - r
        k_col = n_x + r * n_z + n_u
        J[r, a_col] = 1.0
        J[r, k_col] = -1.0
        if n_u:
            J[n_x + r, n_x + r * n_z] = 1.0
        J[n_x * (1 + n_u) + r, a_col] = 1.0
    return J
