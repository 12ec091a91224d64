import logging

import numpy as np

from wnsf.config import RandomSystemConstraints
from wnsf.core.canonical import generic_structure, to_canonical
from wnsf.core.linalg import observability_blocks, spectral_radius
from wnsf.core.model import StateSpaceModel, h2_norm
from wnsf.exceptions import ConvergenceError, NotAdmissibleError
from wnsf.simulate.simulator import make_rng

logger = logging.getLogger("wnsf.randsys")

MAX_GAIN_HALVINGS = 60


def _is_minimal(A, B_K, C) -> bool:
    n_x = A.shape[0]
    controllability = np.vstack(observability_blocks(A.T, B_K.T, n_x))
    observability = np.vstack(observability_blocks(A, C, n_x))
    return np.linalg.matrix_rank(controllability) == n_x and np.linalg.matrix_rank(observability) == n_x


def _draw(n_x, n_u, n_y, rng, constraints: RandomSystemConstraints):
    A = rng.standard_normal((n_x, n_x))
    radius = spectral_radius(A)
    if radius == 0.0:
        return None
    A *= rng.uniform(constraints.min_pole, constraints.pole_cap) / radius
    B = rng.standard_normal((n_x, n_u))
    C = rng.standard_normal((n_y, n_x))
    K = rng.standard_normal((n_x, n_y))

    for _ in range(MAX_GAIN_HALVINGS):
        if spectral_radius(A - K @ C) <= constraints.predictor_cap:
            break
        K *= 0.5
    else:
        return None

    if not _is_minimal(A, np.hstack([B, K]), C):
        return None

    model = StateSpaceModel(A, B, C, K, constraints.sigma_e2)
    if n_u:
        norm = h2_norm(model)
        if norm == 0.0:
            return None
        margin = 0.025 * (constraints.h2_max - constraints.h2_min)
        target = rng.uniform(constraints.h2_min + margin, constraints.h2_max - margin)
        model = StateSpaceModel(A, B * (target / norm), C, K, constraints.sigma_e2)
    return model


def random_system(n_x: int, n_u: int, n_y: int, seed: int | np.random.Generator = 0,
                  constraints: RandomSystemConstraints | None = None) -> StateSpaceModel:
    """Rejection-sampled stable minimal innovations model within the pole and H2 constraints."""
    if n_x < 1 or n_y < 1 or n_u < 0:
        raise ValueError("need n_x >= 1, n_y >= 1 and n_u >= 0")
    constraints = constraints or RandomSystemConstraints()
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)

    for attempt in range(constraints.max_rejections):
        model = _draw(n_x, n_u, n_y, rng, constraints)
        if model is None:
            continue
        if constraints.canonical:
            try:
                model = to_canonical(model, generic_structure(n_x, n_y, n_u))
            except NotAdmissibleError:
                continue
        logger.debug("random system accepted after %d rejections", attempt)
        return model
    raise ConvergenceError(f"no system met the constraints after {constraints.max_rejections} draws",
                           iterations=constraints.max_rejections)
