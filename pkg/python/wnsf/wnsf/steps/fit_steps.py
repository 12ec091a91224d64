from typing import Literal

import numpy as np

from wnsf.core.canonical import CanonicalStructure, ParameterVector, assemble_from_parameters, check_admissibility
from wnsf.core.model import model_markov, prediction_error
from wnsf.estimation.bkfit import extended_observability, ols_eta, wls_eta
from wnsf.estimation.hoarx import estimate_hoarx, select_order
from wnsf.estimation.nullspace import build_hankel, ols_a, wls_a
from wnsf.exceptions import NotAdmissibleError, WNSFError
from wnsf.steps.context import FitContext
from wnsf.steps.step_base import Step

ILL_CONDITIONED = 1e8


def _rounded(values) -> list:
    return np.round(np.concatenate([np.atleast_1d(v) for v in values]), 8).tolist()


class HoarxStep(Step):
    """Step 1: high-order ARX estimate of the predictor Markov parameters."""

    @property
    def step_attributes(self) -> set:
        return {"order", "ridge"}

    def __init__(self, order: int, ridge: float | str = 0.0, name: str = "hoarx", **kwargs):
        super().__init__(name, description="high-order ARX least squares", **kwargs)
        self.order = order
        self.ridge = ridge

    def run(self, context: FitContext) -> FitContext:
        if context.dataset is None:
            context.require("markov")
            self.log_audit({"source": "supplied", "order": context.markov.order})
        else:
            context.markov = estimate_hoarx(context.dataset, self.order, self.ridge)
            self.log_audit({"source": "dataset", "order": self.order,
                            "effective_samples": context.markov.effective_samples})
        context.order = context.markov.order
        self.set_score(context.markov.sigma_e2_hat)
        self.log_audit({"sigma_e2_hat": context.markov.sigma_e2_hat})
        return context


class HankelStep(Step):
    """Step 2a: admissibility of the Kronecker index and the Hankel matrix of g_hat."""

    @property
    def step_attributes(self) -> set:
        return {"kronecker_index", "tol", "noise_aware"}

    def __init__(self, structure: CanonicalStructure, tol: float | None = None, noise_aware: bool = True,
                 name: str = "hankel", **kwargs):
        super().__init__(name, description="Hankel matrix and admissibility tests", **kwargs)
        self.structure = structure
        self.kronecker_index = list(structure.kronecker_index)
        self.tol = tol
        self.noise_aware = noise_aware

    def run(self, context: FitContext) -> FitContext:
        context.require("markov")
        verdict = check_admissibility(context.markov.g_hat, self.structure, self.tol, self.noise_aware)
        self.log_audit({"condition_number": verdict.condition_number,
                        "min_singular_value": verdict.min_singular_value,
                        "projection_residual": verdict.projection_residual,
                        "tolerance": verdict.tolerance})
        if not verdict:
            raise NotAdmissibleError(
                f"nu = {self.kronecker_index} is not admissible: {verdict.failed_test} test failed",
                test=verdict.failed_test)
        context.structure = self.structure
        context.admissibility = verdict
        context.hankel = build_hankel(context.markov, self.structure)
        self.set_score(verdict.condition_number)
        self.set_flag(verdict.condition_number > ILL_CONDITIONED)
        return context


class OlsAStep(Step):
    """Step 2b: OLS estimate of the free rows of A_K."""

    def __init__(self, name: str = "ols_a", **kwargs):
        super().__init__(name, description="least squares null-space fit", **kwargs)

    def run(self, context: FitContext) -> FitContext:
        context.require("hankel")
        context.a_ols = ols_a(context.hankel)
        self.log_audit({"a": _rounded(context.a_ols)})
        return context


class WlsAStep(Step):
    """Step 3: weighted refinement of the free rows of A_K."""

    @property
    def step_attributes(self) -> set:
        return {"iterations", "weighting"}

    def __init__(self, iterations: int = 1, weighting: Literal["optimal", "identity"] = "optimal",
                 name: str = "wls_a", **kwargs):
        super().__init__(name, description="weighted null-space fit", **kwargs)
        self.iterations = iterations
        self.weighting = weighting

    def run(self, context: FitContext) -> FitContext:
        context.require("hankel", "markov", "a_ols")
        context.a_wls = wls_a(context.hankel, context.markov, context.a_ols, self.iterations, self.weighting)
        change = float(np.linalg.norm(np.concatenate(context.a_wls) - np.concatenate(context.a_ols)))
        self.log_audit({"a": _rounded(context.a_wls), "change_from_ols": change})
        self.set_score(change)
        return context


class OlsEtaStep(Step):
    """Step 4: OLS estimate of [B K] through the extended observability matrix."""

    def __init__(self, name: str = "ols_eta", **kwargs):
        super().__init__(name, description="least squares fit of B and K", **kwargs)

    def run(self, context: FitContext) -> FitContext:
        context.require("markov", "structure", "a_wls")
        s = context.structure
        O = extended_observability(s.a_matrix(context.a_wls), s.c_matrix(), context.markov.order)
        context.eta_ols = ols_eta(context.markov, O)
        self.log_audit({"eta": _rounded([context.eta_ols])})
        return context


class WlsEtaStep(Step):
    """Step 5: weighted refinement of [B K] accounting for the error in A_K."""

    @property
    def step_attributes(self) -> set:
        return {"iterations", "weighting"}

    def __init__(self, iterations: int = 1, weighting: Literal["optimal", "identity"] = "optimal",
                 name: str = "wls_eta", **kwargs):
        super().__init__(name, description="weighted fit of B and K", **kwargs)
        self.iterations = iterations
        self.weighting = weighting

    def run(self, context: FitContext) -> FitContext:
        context.require("markov", "hankel", "a_wls", "eta_ols")
        context.eta_wls = wls_eta(context.markov, context.hankel, context.a_wls, context.eta_ols,
                                  self.iterations, self.weighting)
        change = float(np.linalg.norm(context.eta_wls - context.eta_ols))
        self.log_audit({"eta": _rounded([context.eta_wls]), "change_from_ols": change})
        self.set_score(change)
        return context


class AssembleStep(Step):
    """Builds the innovations model and scores it.

    The score is the one-step-ahead prediction error on the estimation data,
    or the relative Markov-parameter misfit when no data were given.
    """

    def __init__(self, name: str = "assemble", **kwargs):
        super().__init__(name, description="model assembly and scoring", **kwargs)

    def run(self, context: FitContext) -> FitContext:
        context.require("structure", "a_wls", "eta_wls", "markov")
        params = ParameterVector(tuple(context.a_wls), context.eta_wls, context.structure)
        context.model = assemble_from_parameters(params, sigma_e2=context.markov.sigma_e2_hat)

        if context.dataset is not None:
            context.criterion = prediction_error(context.model, context.dataset)
            criterion = "prediction_error"
        else:
            g_hat = context.markov.g_hat
            misfit = np.linalg.norm(g_hat - model_markov(context.model, context.markov.order))
            context.criterion = float(misfit / max(np.linalg.norm(g_hat), np.finfo(float).tiny))
            criterion = "markov_misfit"

        self.set_flag(not context.model.predictor_stable)
        self.set_score(context.criterion)
        self.log_audit({"criterion": criterion, "predictor_stable": context.model.predictor_stable})
        return context


class SelectStep(Step):
    """Keeps the best candidate produced by a parallel pipe.

    Orders are compared with the near-tie rule that prefers the smaller
    order; structures keep the first candidate within the same tolerance.
    """

    @property
    def step_attributes(self) -> set:
        return {"over"}

    def __init__(self, over: Literal["order", "structure"], name: str | None = None, **kwargs):
        super().__init__(name or f"select_{over}", description=f"candidate selection over {over}", **kwargs)
        self.over = over

    def run(self, context: FitContext) -> FitContext:
        fitted = {name: candidate for name, candidate in context.candidates.items()
                  if candidate.criterion is not None}
        scores = {name: candidate.criterion for name, candidate in fitted.items()}
        self.log_audit({"candidates": scores, "failures": dict(context.failures)})
        if not fitted:
            raise WNSFError(f"no {self.over} candidate produced a model: {context.failures}")

        if self.over == "order":
            by_order = {candidate.order: candidate for candidate in fitted.values()}
            winner_order = select_order(context.dataset, by_order, lambda _, n: by_order[n],
                                        score=lambda candidate, _: candidate.criterion)
            name = next(name for name, candidate in fitted.items() if candidate.order == winner_order)
        else:
            best = min(scores.values())
            name = next(name for name, value in scores.items()
                        if np.isclose(value, best, rtol=1e-9, atol=1e-12))

        winner = fitted[name]
        winner.scores = {**winner.scores, **context.scores, **scores}
        winner.failures = {**context.failures, **winner.failures}
        winner.candidates = {}
        self.log_audit({"selected": name})
        self.set_score(winner.criterion)
        return winner
