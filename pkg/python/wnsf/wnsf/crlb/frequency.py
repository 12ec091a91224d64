"""Frequency-domain M_CR for single-input single-output ARMAX models.

Used as an independent check of the time-domain bound: the prediction
error gradients are written as transfer functions of r and e and their
spectra are integrated on a uniform grid of the unit circle.
"""
import logging

import numpy as np
import scipy.signal

from wnsf.core.armax import ArmaxPolynomials
from wnsf.core.loop import Controller, ShapingFilter
from wnsf.exceptions import UnstableSystemError

logger = logging.getLogger("wnsf.frequency")

DEFAULT_GRID = 2 ** 14


def _check_stable(poly, name: str):
    roots = np.roots(np.trim_zeros(np.asarray(poly, dtype=float), "b"))
    if roots.size and np.max(np.abs(roots)) >= 1.0:
        raise UnstableSystemError(f"{name} has roots on or outside the unit circle "
                                  f"(max |root| = {np.max(np.abs(roots)):.6f})")


def _response(num, den, w) -> np.ndarray:
    _, h = scipy.signal.freqz(num, den, worN=w)
    return h


def frequency_crlb_siso(poly: ArmaxPolynomials, sigma_e2: float = 1.0, controller: Controller | None = None,
                        shaping: ShapingFilter | None = None, reference_gain: float = 1.0,
                        grid: int = DEFAULT_GRID) -> np.ndarray:
    """M_CR over theta = [f, b, a] for F y = B u + A e, u = g_r r - F_y y.

    Same convention as the time-domain bound: M_CR = E[psi psi^T] for unit
    variance noise, scaled by sigma_e2 through the noise term.
    """
    if grid < 16:
        raise ValueError("grid must have at least 16 points")
    F, B, A = poly.polynomials()
    _check_stable(A, "A(q)")

    if poly.n_u and controller is not None and not controller.is_zero:
        N_f, D_f = controller.polynomials()
        _check_stable(np.polyadd(np.convolve(F, D_f)[::-1], np.convolve(N_f, B)[::-1])[::-1],
                      "closed-loop characteristic polynomial")
    else:
        N_f, D_f = np.zeros(1), np.ones(1)
        _check_stable(F, "F(q)")

    w = 2 * np.pi * np.arange(grid) / grid
    G = _response(B, F, w)
    H = _response(A, F, w)
    Fy = _response(N_f, D_f, w)
    A_w = _response(A, [1.0], w)
    S = 1.0 / (1.0 + Fy * G)
    g = float(reference_gain)

    Y_r, Y_e = g * S * G, S * H
    U_r, U_e = g * S, -Fy * S * H
    psi_r = (shaping or ShapingFilter.white(1)).spectrum(w) if poly.n_u else np.zeros(grid)

    n = poly.n_x
    lags = np.exp(-1j * np.outer(np.arange(1, n + 1), w))
    zero = np.zeros_like(lags)
    T_r = [-lags * Y_r / A_w]
    T_e = [-lags * Y_e / A_w]
    if poly.n_u:
        T_r.append(lags * U_r / A_w)
        T_e.append(lags * U_e / A_w)
    T_r.append(zero)
    T_e.append(lags / A_w)
    T_r, T_e = np.vstack(T_r), np.vstack(T_e)

    information = ((T_r * psi_r) @ T_r.conj().T + sigma_e2 * (T_e @ T_e.conj().T)).real / grid
    logger.debug("frequency CRLB on %d points", grid)
    return 0.5 * (information + information.T)
