import logging
import os
import textwrap

from wnsf.config import FitConfig, FitReport
from wnsf.core.canonical import CanonicalStructure
from wnsf.core.dataset import Dataset
from wnsf.core.model import StateSpaceModel
from wnsf.estimation.hoarx import MarkovEstimate
from wnsf.exceptions import SerializationError
from wnsf.pipe import Pipe, SequentialPipe, ThreadPipe
from wnsf.steps import (AssembleStep, FitContext, HankelStep, HoarxStep, OlsAStep, OlsEtaStep, SelectStep,
                        WlsAStep, WlsEtaStep)
from wnsf.utils.serializer import SerializerUtils

logger = logging.getLogger("wnsf.executor")


def structure_name(structure: CanonicalStructure) -> str:
    return "nu_" + "_".join(str(v) for v in structure.kronecker_index)


class WNSFExecutor:
    """Runs the five WNSF steps over every (order, Kronecker index) candidate and keeps the best.

    The pipeline is a ThreadPipe over orders; each order branch estimates the
    HOARX model once and fans out over the candidate structures.
    """

    def __init__(self, config: FitConfig, max_workers: int | None = None):
        self.config = config
        self.max_workers = max_workers

        self.pipeline: Pipe | None = None
        self.context: FitContext | None = None
        self.logs = []

    def build_pipeline(self, orders: list[int], structures: list[CanonicalStructure]) -> Pipe:
        c = self.config
        order_pipes = []
        for n in orders:
            branches = [
                SequentialPipe(structure_name(s), [
                    HankelStep(s, tol=c.admissibility_tol, noise_aware=c.noise_aware),
                    OlsAStep(),
                    WlsAStep(c.a_iterations, c.weighting),
                    OlsEtaStep(),
                    WlsEtaStep(c.eta_iterations, c.weighting),
                    AssembleStep(),
                ], description=f"steps 2-5 for Kronecker index {list(s.kronecker_index)}")
                for s in structures
            ]
            order_pipes.append(SequentialPipe(f"order_{n}", [
                HoarxStep(n, ridge=c.ridge),
                ThreadPipe("structures", branches, max_workers=self.max_workers),
                SelectStep("structure"),
            ], description=f"HOARX order {n}"))

        return SequentialPipe("wnsf", [
            ThreadPipe("orders", order_pipes, max_workers=self.max_workers),
            SelectStep("order"),
        ], description="weighted null-space fitting")

    def _execute(self, context: FitContext, orders: list[int], structures: list[CanonicalStructure]):
        self.logs.clear()
        self.pipeline = self.build_pipeline(orders, structures)
        self.pipeline.assign_id(1)
        logger.info("fitting n_x=%d over orders %s and %d structure(s)", self.config.n_x, orders, len(structures))
        try:
            self.context = self.pipeline(context)
        finally:
            self.logs.append(self.pipeline.get_audit_log())
        return self.context.model

    def fit(self, dataset: Dataset) -> StateSpaceModel:
        """Steps 1-5 on measured data."""
        orders = self.config.orders(dataset.sample_count)
        structures = self.config.structures(dataset.n_y, dataset.n_u)
        return self._execute(FitContext(self.config.n_x, dataset=dataset), orders, structures)

    def fit_markov(self, markov: MarkovEstimate) -> StateSpaceModel:
        """Steps 2-5 on supplied Markov parameters; the order is the one of `markov`."""
        structures = self.config.structures(markov.n_y, markov.n_u)
        return self._execute(FitContext(self.config.n_x, markov=markov), [markov.order], structures)

    def get_logs(self):
        return self.logs

    def report(self) -> FitReport:
        if self.context is None or self.context.model is None:
            raise ValueError("no fit has run yet")
        ctx = self.context
        return FitReport(
            n_x=self.config.n_x,
            order=ctx.order,
            kronecker_index=list(ctx.structure.kronecker_index),
            sigma_e2_hat=ctx.markov.sigma_e2_hat,
            selection_criterion="prediction_error" if ctx.dataset is not None else "markov_misfit",
            criterion_value=ctx.criterion,
            candidates=ctx.scores,
            failures=ctx.failures,
            parameters=dict(zip(ctx.structure.parameter_labels(), ctx.theta.tolist())),
            flagged=bool(self.pipeline.get_flag()),
            logs=SerializerUtils.to_builtin(self.logs),
        )

    def print_logs(self):
        print("\n".join(self._format_log(log) for log in self.logs))

    def _format_log(self, log: dict, depth: int = 0) -> str:
        indent = " " * (4 * depth)
        skip = {"id", "name", "execution_time", "flag", "score", "status", "log", "steps",
                "traceback", "logged_time", "pipe_type"}
        kind = "PIPE" if "pipe_type" in log else "STEP"
        lines = [
            indent + f" {kind} {log.get('id')}: {log.get('name')} ".center(70 - 4 * depth, "-"),
            f"{indent}Execution Time: {log.get('execution_time')}",
            f"{indent}Flag: {log.get('flag')}",
            f"{indent}Status: {log.get('status')}",
        ]
        if kind == "STEP":
            lines.append(f"{indent}Score: {log.get('score')}")
        lines += [
            f"{indent}{k.title()}: " + textwrap.fill(str(v), width=100, subsequent_indent=indent + " " * (len(k) + 2))
            for k, v in log.items() if k not in skip
        ]
        lines.append(f"{indent}Logs:")
        for k, v in log.get("log", {}).items():
            if k == "traceback":
                continue
            wrapped_value = textwrap.fill(str(v), width=100, subsequent_indent=indent + " " * (len(k) + 6))
            lines.append(f"{indent}    {k}: {wrapped_value}")
        text = "\n".join(lines)
        for child in log.get("steps", []):
            text += "\n" + self._format_log(child, depth + 1)
        return text

    def save(self, path: str):
        """Writes model.json, report.json and report.yaml into `path`."""
        if self.context is None:
            raise SerializationError("nothing to save: no fit has run yet")
        if os.path.exists(path) and not os.path.isdir(path):
            raise SerializationError(f"Path {path} is not a directory.")
        os.makedirs(path, exist_ok=True)

        report = self.report().model_dump(mode="json")
        SerializerUtils.save_model(self.context.model, os.path.join(path, "model.json"), self.context.structure)
        SerializerUtils.save_json(report, os.path.join(path, "report.json"))
        SerializerUtils.save_yaml(report, os.path.join(path, "report.yaml"))
