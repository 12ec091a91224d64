import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Literal

import numpy as np
import pandas as pd

from wnsf.config import ExperimentConfig, FitConfig, Settings
from wnsf.core.armax import armax_jacobian
from wnsf.core.canonical import CanonicalStructure, extract_parameters, generic_structure, to_canonical
from wnsf.core.model import StateSpaceModel
from wnsf.crlb.bound import crlb, crlb_armax
from wnsf.exceptions import WNSFError
from wnsf.executor.executor import WNSFExecutor
from wnsf.metrics import mse_vs_crlb
from wnsf.simulate.simulator import simulate, spawn_rngs

logger = logging.getLogger("wnsf.montecarlo")

COLUMNS = ["N", "parameter", "stage", "trials", "mse", "crlb", "ratio"]


def _orders_for(grid_N, orders) -> list[int | None]:
    if orders is None or isinstance(orders, int):
        return [orders] * len(grid_N)
    if len(orders) != len(grid_N):
        raise ValueError("orders must be one int or one entry per sample size")
    return list(orders)


def monte_carlo(model: StateSpaceModel, experiment: ExperimentConfig, trials: int, grid_N: list[int],
                orders: int | list[int] | None = None, structure: CanonicalStructure | None = None,
                fit_config: FitConfig | None = None, max_workers: int | None = None,
                coordinates: Literal["canonical", "armax"] = "canonical") -> pd.DataFrame:
    """Sample MSE of WNSF estimates against the CRLB over seeded trials.

    Rows with stage "final" cover every free parameter of the final model;
    stage "ols" covers the Step-2 estimates of A_K. Trial i at the j-th
    sample size draws from its own Philox stream spawned from the
    experiment seed, so results do not depend on thread scheduling.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    if not grid_N:
        raise ValueError("grid_N is empty")
    orders = _orders_for(grid_N, orders)
    structure = structure or generic_structure(model.n_x, model.n_y, model.n_u)
    if coordinates == "armax" and (model.n_y != 1 or model.n_u > 1):
        raise ValueError("ARMAX coordinates require one output and at most one input")

    sigma_e2 = model.sigma_e2 if experiment.innovation_variance is None else experiment.innovation_variance
    model = to_canonical(model.with_sigma(sigma_e2), structure)
    truth = extract_parameters(model, structure).theta

    controller = experiment.loop.controller(model.n_u, model.n_y)
    shaping = experiment.shaping(model.n_u)
    gain = experiment.loop.reference_gain
    if coordinates == "armax":
        bound = crlb_armax(model, controller, shaping, gain)
        J = armax_jacobian(model.n_x, model.n_u)
        truth = J @ truth
        a_indices = np.arange(model.n_x * (1 + model.n_u), model.n_x * (2 + model.n_u))
    else:
        bound = crlb(model, structure, controller, shaping, gain)
        J = None
        a_indices = np.arange(structure.a_count)

    base = fit_config or FitConfig(n_x=model.n_x)
    configs = [FitConfig(**{**base.model_dump(), "n_x": model.n_x, "order": n, "order_grid": None,
                            "structure": list(structure.kronecker_index)}) for n in orders]

    roots = np.random.SeedSequence(experiment.seed).spawn(len(grid_N))

    def run_trial(j, rng):
        dataset = simulate(model, experiment.model_copy(update={"sample_count": grid_N[j]}), rng)
        executor = WNSFExecutor(configs[j], max_workers=1)
        executor.fit(dataset)
        return executor.context.theta, executor.context.theta_ols

    results = {}
    with ThreadPoolExecutor(max_workers=max_workers or Settings.max_workers()) as pool:
        futures = {}
        for j, root in enumerate(roots):
            for t, rng in enumerate(spawn_rngs(root, trials)):
                futures[pool.submit(run_trial, j, rng)] = (j, t)
        for future in as_completed(futures):
            key = futures[future]
            try:
                results[key] = future.result()
            except WNSFError as e:
                logger.warning("trial %d at N=%d failed: %s", key[1], grid_N[key[0]], e)

    tables = []
    for j, N in enumerate(grid_N):
        done = [results[(j, t)] for t in range(trials) if (j, t) in results]
        if len(done) < 2:
            raise WNSFError(f"fewer than two trials succeeded at N={N}")
        final = np.array([theta for theta, _ in done])
        ols = np.array([theta_ols for _, theta_ols in done])
        if J is not None:
            final = final @ J.T
            ols = ols[:, ::-1]

        for stage, estimates, indices in (("final", final, None), ("ols", ols, a_indices)):
            labels = bound.labels if indices is None else [bound.labels[i] for i in indices]
            table = mse_vs_crlb(estimates, truth if indices is None else truth[indices], bound.information,
                                sigma_e2, N, labels=labels, indices=indices)
            tables.append(table.assign(N=N, stage=stage, trials=len(done)))
        logger.info("N=%d: %d/%d trials", N, len(done), trials)

    return pd.concat(tables, ignore_index=True)[COLUMNS]
