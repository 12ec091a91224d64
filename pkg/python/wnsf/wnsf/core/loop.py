"""Feedback controllers, reference shaping filters and the closed loop they form with a model.

Polynomials are q^-1 coefficient arrays, leading coefficient first.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from wnsf.core.linalg import spectral_radius
from wnsf.core.model import StateSpaceModel
from wnsf.exceptions import UnstableSystemError


def _pad(num, den) -> tuple[np.ndarray, np.ndarray]:
    num = np.atleast_1d(np.asarray(num, dtype=float))
    den = np.atleast_1d(np.asarray(den, dtype=float))
    if den[0] == 0:
        raise ValueError("denominator must have a non-zero leading coefficient")
    size = max(num.size, den.size)
    num = np.concatenate([num, np.zeros(size - num.size)]) / den[0]
    den = np.concatenate([den, np.zeros(size - den.size)]) / den[0]
    return num, den


def realize_siso(num, den) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """State-space realization of num(q^-1)/den(q^-1)."""
    num, den = _pad(num, den)
    if num.size == 1:
        return np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), num.reshape(1, 1)
    A, B, C, D = scipy.signal.tf2ss(num, den)
    return A, B, C, D


@dataclass(frozen=True, eq=False)
class Controller:
    """Feedback F_y(q) from y to the subtracted part of u, realized as c+ = A c + B y, v = C c + D y."""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    num: np.ndarray | None = field(default=None, repr=False)
    den: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def static(cls, gain) -> "Controller":
        D = np.atleast_2d(np.asarray(gain, dtype=float))
        n_u, n_y = D.shape
        return cls(np.zeros((0, 0)), np.zeros((0, n_y)), np.zeros((n_u, 0)), D)

    @classmethod
    def rational(cls, num, den) -> "Controller":
        A, B, C, D = realize_siso(num, den)
        num, den = _pad(num, den)
        return cls(A, B, C, D, num=num, den=den)

    @classmethod
    def zero(cls, n_u: int, n_y: int) -> "Controller":
        return cls.static(np.zeros((n_u, n_y)))

    @property
    def n_c(self) -> int:
        return self.A.shape[0]

    @property
    def is_zero(self) -> bool:
        return self.n_c == 0 and not np.any(self.D)

    def polynomials(self) -> tuple[np.ndarray, np.ndarray]:
        """(N_f, D_f) of a SISO controller."""
        if self.num is not None:
            return self.num, self.den
        if self.D.shape != (1, 1):
            raise ValueError("polynomial view requires a SISO controller")
        return self.D.reshape(1), np.ones(1)


@dataclass(frozen=True, eq=False)
class ShapingFilter:
    """Reference r = sqrt(variance) * num/den * v per channel, v unit white noise."""
    channels: int
    variance: float = 1.0
    num: np.ndarray = field(default_factory=lambda: np.ones(1))
    den: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be non-negative")
        num, den = _pad(self.num, self.den)
        roots = np.roots(den)
        if roots.size and np.max(np.abs(roots)) >= 1.0:
            raise UnstableSystemError("shaping filter denominator must be stable")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def white(cls, channels: int, variance: float = 1.0) -> "ShapingFilter":
        return cls(channels, variance)

    def state_space(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        A, B, C, D = realize_siso(self.num, self.den)
        eye = np.eye(self.channels)
        scale = np.sqrt(self.variance)
        return np.kron(eye, A), np.kron(eye, B) * scale, np.kron(eye, C), np.kron(eye, D) * scale

    def spectrum(self, w) -> np.ndarray:
        """Per-channel spectral density variance * |num/den|^2 on the grid w."""
        _, h = scipy.signal.freqz(self.num, self.den, worN=np.asarray(w, dtype=float))
        return self.variance * np.abs(h) ** 2


def closed_loop_system(model: StateSpaceModel, controller: Controller | None = None,
                       reference_gain: float = 1.0):
    """Augmented system with state [x; c], input [r; e] and output [y; u] for u = g_r r - F_y(q) y."""
    n_x, n_u, n_y = model.n_x, model.n_u, model.n_y
    controller = controller or Controller.zero(n_u, n_y)
    if controller.D.shape != (n_u, n_y):
        raise ValueError(f"controller must map {n_y} outputs to {n_u} inputs")
    A, B, C, K = model.A, model.B, model.C, model.K
    Ac, Bc, Cc, Dc = controller.A, controller.B, controller.C, controller.D
    n_c = controller.n_c
    g = float(reference_gain)

    A_cl = np.zeros((n_x + n_c, n_x + n_c))
    A_cl[:n_x, :n_x] = A - B @ Dc @ C
    A_cl[:n_x, n_x:] = -B @ Cc
    A_cl[n_x:, :n_x] = Bc @ C
    A_cl[n_x:, n_x:] = Ac

    B_cl = np.zeros((n_x + n_c, n_u + n_y))
    B_cl[:n_x, :n_u] = g * B
    B_cl[:n_x, n_u:] = K - B @ Dc
    B_cl[n_x:, n_u:] = Bc

    C_cl = np.zeros((n_y + n_u, n_x + n_c))
    C_cl[:n_y, :n_x] = C
    C_cl[n_y:, :n_x] = -Dc @ C
    C_cl[n_y:, n_x:] = -Cc

    D_cl = np.zeros((n_y + n_u, n_u + n_y))
    D_cl[:n_y, n_u:] = np.eye(n_y)
    D_cl[n_y:, :n_u] = g * np.eye(n_u)
    D_cl[n_y:, n_u:] = -Dc

    if spectral_radius(A_cl) >= 1.0:
        raise UnstableSystemError(f"closed loop is unstable: rho = {spectral_radius(A_cl):.6f}")
    return A_cl, B_cl, C_cl, D_cl
