import numpy as np
import scipy.signal

from wnsf.config import (
    ExcitationConfig,
    FilteredWhiteExcitation,
    ImpulseExcitation,
    MultisineExcitation,
    WhiteExcitation,
)

ENERGY_HORIZON = 10_000


def generate_excitation(excitation: ExcitationConfig, n_u: int, N: int, rng: np.random.Generator) -> np.ndarray:
    """Reference signal r of shape (N, n_u)."""
    if n_u == 0:
        return np.zeros((N, 0))

    if isinstance(excitation, WhiteExcitation):
        return np.sqrt(excitation.variance) * rng.standard_normal((N, n_u))

    if isinstance(excitation, FilteredWhiteExcitation):
        white = np.sqrt(excitation.variance) * rng.standard_normal((N, n_u))
        return scipy.signal.lfilter(excitation.num, excitation.den, white, axis=0)

    if isinstance(excitation, MultisineExcitation):
        if len(excitation.frequencies) != n_u:
            raise ValueError(f"multisine needs frequencies for {n_u} channels, got {len(excitation.frequencies)}")
        k = np.arange(N)
        r = np.zeros((N, n_u))
        for channel, (freqs, amps) in enumerate(zip(excitation.frequencies, excitation.amplitudes)):
            phases = excitation.phases[channel] if excitation.phases else [0.0] * len(freqs)
            for w, a, phi in zip(freqs, amps, phases):
                r[:, channel] += a * np.sin(w * k + phi)
        return r + np.sqrt(excitation.dither_variance) * rng.standard_normal((N, n_u))

    if isinstance(excitation, ImpulseExcitation):
        if excitation.channel >= n_u:
            raise ValueError(f"impulse channel {excitation.channel} out of range for {n_u} inputs")
        r = np.zeros((N, n_u))
        r[0, excitation.channel] = excitation.amplitude
        return r

    raise ValueError(f"unknown excitation {excitation!r}")


def excitation_variance(excitation: ExcitationConfig, n_u: int) -> np.ndarray:
    """Stationary per-channel variance of the reference."""
    if isinstance(excitation, WhiteExcitation):
        return np.full(n_u, excitation.variance)
    if isinstance(excitation, FilteredWhiteExcitation):
        impulse = np.zeros(ENERGY_HORIZON)
        impulse[0] = 1.0
        energy = np.sum(scipy.signal.lfilter(excitation.num, excitation.den, impulse) ** 2)
        return np.full(n_u, excitation.variance * energy)
    if isinstance(excitation, MultisineExcitation):
        return np.array([0.5 * np.sum(np.square(amps)) + excitation.dither_variance
                         for amps in excitation.amplitudes])
    raise ValueError(f"'{excitation.kind}' excitation has no stationary variance")
