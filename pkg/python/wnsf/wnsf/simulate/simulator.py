import logging

import numpy as np
import scipy.signal

from wnsf.config import ExperimentConfig
from wnsf.core.dataset import Dataset
from wnsf.core.loop import closed_loop_system
from wnsf.core.model import StateSpaceModel
from wnsf.exceptions import UnstableSystemError
from wnsf.simulate.excitation import generate_excitation

logger = logging.getLogger("wnsf.simulate")

DIVERGENCE_LIMIT = 1e12


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox stream for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rngs(seed, count: int) -> list[np.random.Generator]:
    """Independent child streams; `seed` may be an int or a SeedSequence."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in root.spawn(count)]


def simulate(model: StateSpaceModel, config: ExperimentConfig, rng: np.random.Generator | None = None) -> Dataset:
    """Trajectory of the model from rest under the configured loop and excitation.

    The loop u = g_r r - F_y(q) y is simulated as one augmented system driven
    by [r; e]. The first `burn_in` samples are dropped.
    """
    rng = rng if rng is not None else make_rng(config.seed)
    n_u, n_y = model.n_u, model.n_y
    total = config.sample_count + config.burn_in
    sigma_e2 = model.sigma_e2 if config.innovation_variance is None else config.innovation_variance

    r = generate_excitation(config.excitation, n_u, total, rng)
    e = np.sqrt(sigma_e2) * rng.standard_normal((total, n_y))

    controller = config.loop.controller(n_u, n_y)
    system = closed_loop_system(model, controller, config.loop.reference_gain)
    _, outputs, states = scipy.signal.dlsim((*system, 1), np.hstack([r, e]))
    outputs = np.asarray(outputs).reshape(total, n_y + n_u)
    states = np.asarray(states)

    if not np.all(np.isfinite(states)) or np.max(np.abs(states), initial=0.0) > DIVERGENCE_LIMIT:
        raise UnstableSystemError("simulation diverged: state norm exceeded 1e12")

    y, u = outputs[config.burn_in:, :n_y], outputs[config.burn_in:, n_y:]
    logger.debug("simulated %d samples (%s loop, %s excitation)", config.sample_count,
                 config.loop.kind, config.excitation.kind)
    return Dataset(u, y, loop="open" if controller is None else "closed",
                   controller=config.loop.model_dump())
