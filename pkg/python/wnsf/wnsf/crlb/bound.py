import logging
import warnings
from dataclasses import dataclass

import numpy as np

from wnsf.core.armax import armax_jacobian
from wnsf.core.canonical import CanonicalStructure, to_canonical
from wnsf.core.loop import Controller, ShapingFilter
from wnsf.core.model import StateSpaceModel
from wnsf.crlb.riccati import gain_sensitivity, sensitivity_lyapunov, solve_lyapunov, solve_riccati
from wnsf.exceptions import SingularMatrixError

logger = logging.getLogger("wnsf.crlb")

SINGULAR_RCOND = 1e-12


@dataclass(frozen=True, eq=False)
class SensitivitySet:
    """One-hot parameter derivatives of (A_K, A, B, K) for every free canonical parameter."""
    D: list[np.ndarray]
    A: list[np.ndarray]
    B: list[np.ndarray]
    K: list[np.ndarray]
    labels: list[str]

    def __len__(self):
        return len(self.labels)


def build_sensitivities(structure: CanonicalStructure) -> SensitivitySet:
    s = structure
    n_x, n_u, n_y = s.n_x, s.n_u, s.n_y
    C = s.c_matrix()
    D, A, B, K = [], [], [], []

    for row in s.a_jacobian():
        D_i = row.reshape(n_x, n_x)
        D.append(D_i)
        A.append(D_i)
        B.append(np.zeros((n_x, n_u)))
        K.append(np.zeros((n_x, n_y)))

    for index in range(s.eta_count):
        r, c = divmod(index, s.n_z)
        B_i, K_i = np.zeros((n_x, n_u)), np.zeros((n_x, n_y))
        if c < n_u:
            B_i[r, c] = 1.0
        else:
            K_i[r, c - n_u] = 1.0
        D.append(np.zeros((n_x, n_x)))
        A.append(K_i @ C)
        B.append(B_i)
        K.append(K_i)
    return SensitivitySet(D, A, B, K, s.parameter_labels())


@dataclass(frozen=True, eq=False)
class CramerRaoBound:
    """M_CR with the convention Cov(sqrt(N) (theta_hat - theta)) -> sigma_e2 M_CR^{-1}."""
    information: np.ndarray
    sigma_e2: float
    labels: list[str]
    singular: bool = False

    def covariance(self, N: int) -> np.ndarray:
        if self.singular:
            raise SingularMatrixError("M_CR is singular; parameters are not identifiable",
                                      condition_number=float(np.linalg.cond(self.information)))
        return self.sigma_e2 * np.linalg.inv(self.information) / N

    def variances(self, N: int) -> np.ndarray:
        return np.diag(self.covariance(N))


def _finish(information, sigma_e2, labels) -> CramerRaoBound:
    information = 0.5 * (information + information.T)
    eigenvalues = np.linalg.eigvalsh(information)
    singular = bool(eigenvalues[-1] <= 0 or eigenvalues[0] <= SINGULAR_RCOND * eigenvalues[-1])
    if singular:
        message = f"M_CR is singular (smallest eigenvalue {eigenvalues[0]:.3e}); parameters not identifiable"
        logger.warning(message)
        warnings.warn(message, RuntimeWarning, stacklevel=3)
    return CramerRaoBound(information, sigma_e2, labels, singular)


def crlb(model: StateSpaceModel, structure: CanonicalStructure, controller: Controller | None = None,
         shaping: ShapingFilter | None = None, reference_gain: float = 1.0) -> CramerRaoBound:
    """Time-domain M_CR of the free canonical parameters from an augmented Lyapunov equation.

    The augmented state [x, c, rho, dx_hat/dtheta_1, ...] collects the plant,
    the controller, the reference shaping filter and the predictor state
    sensitivities, all driven by [e; v] with v unit white noise shaping r.
    Without a controller the loop is open (u = g_r r).
    """
    if model.sigma_e2 <= 0:
        raise ValueError("CRLB needs sigma_e2 > 0")
    model = to_canonical(model, structure)
    n_x, n_u, n_y = model.n_x, model.n_u, model.n_y
    controller = controller or Controller.zero(n_u, n_y)
    shaping = shaping or ShapingFilter.white(n_u)
    if shaping.channels != n_u:
        raise ValueError(f"shaping filter must have {n_u} channels")

    sens = build_sensitivities(structure)
    P, Q, gain = solve_riccati(model)
    lyapunov = sensitivity_lyapunov(model, sens, P)
    gains = gain_sensitivity(model, sens, P, Q, gain, lyapunov)

    A, B, C, K, A_K = model.A, model.B, model.C, model.K, model._A_K
    Ac, Bc, Cc, Dc = controller.A, controller.B, controller.C, controller.D
    Ar, Br, Cr, Dr = shaping.state_space()
    g = float(reference_gain)
    n_c, n_r, n_v = Ac.shape[0], Ar.shape[0], Br.shape[1]

    # u = U_x x + U_c c + U_r rho + U_e e + U_v v
    U_x, U_c, U_r, U_e, U_v = -Dc @ C, -Cc, g * Cr, -Dc, g * Dr

    base = n_x + n_c + n_r
    dim = base + len(sens) * n_x
    xs, cs, rs = slice(0, n_x), slice(n_x, n_x + n_c), slice(n_x + n_c, base)
    es, vs = slice(0, n_y), slice(n_y, n_y + n_v)

    A_aug = np.zeros((dim, dim))
    B_aug = np.zeros((dim, n_y + n_v))
    A_aug[xs, xs] = A + B @ U_x
    A_aug[xs, cs] = B @ U_c
    A_aug[xs, rs] = B @ U_r
    A_aug[cs, xs] = Bc @ C
    A_aug[cs, cs] = Ac
    A_aug[rs, rs] = Ar
    B_aug[xs, es] = B @ U_e + K
    B_aug[xs, vs] = B @ U_v
    B_aug[cs, es] = Bc
    B_aug[rs, vs] = Br

    for i in range(len(sens)):
        block = slice(base + i * n_x, base + (i + 1) * n_x)
        B_i = sens.B[i]
        A_aug[block, xs] = sens.D[i] + B_i @ U_x + gains[i] @ C
        A_aug[block, cs] = B_i @ U_c
        A_aug[block, rs] = B_i @ U_r
        A_aug[block, block] = A_K
        B_aug[block, es] = B_i @ U_e + gains[i]
        B_aug[block, vs] = B_i @ U_v

    noise = np.zeros((n_y + n_v, n_y + n_v))
    noise[es, es] = model.sigma_e2 * np.eye(n_y)
    noise[vs, vs] = np.eye(n_v)
    P_aug = solve_lyapunov(A_aug, B_aug @ noise @ B_aug.T)

    Q_inv = np.linalg.inv(Q)
    count = len(sens)
    information = np.zeros((count, count))
    for i in range(count):
        rows = slice(base + i * n_x, base + (i + 1) * n_x)
        for j in range(i, count):
            cols = slice(base + j * n_x, base + (j + 1) * n_x)
            value = np.trace(Q_inv @ C @ P_aug[cols, rows] @ C.T)
            value += 0.5 * np.trace(Q_inv @ lyapunov[i][1] @ Q_inv @ lyapunov[j][1])
            information[i, j] = information[j, i] = model.sigma_e2 * value
    logger.debug("CRLB: %d parameters, augmented dim %d", count, dim)
    return _finish(information, model.sigma_e2, sens.labels)


def crlb_armax(model: StateSpaceModel, controller: Controller | None = None,
               shaping: ShapingFilter | None = None, reference_gain: float = 1.0) -> CramerRaoBound:
    """M_CR in ARMAX coordinates [f, b, a] for a single-output model."""
    if model.n_y != 1 or model.n_u > 1:
        raise ValueError("ARMAX coordinates require one output and at most one input")
    structure = CanonicalStructure((model.n_x,), n_u=model.n_u)
    canonical = crlb(model, structure, controller, shaping, reference_gain)
    J_inv = np.linalg.inv(armax_jacobian(model.n_x, model.n_u))
    information = J_inv.T @ canonical.information @ J_inv
    n = model.n_x
    labels = ([f"f{i + 1}" for i in range(n)] + [f"b{i + 1}" for i in range(n * model.n_u)]
              + [f"a{i + 1}" for i in range(n)])
    return _finish(information, model.sigma_e2, labels)
