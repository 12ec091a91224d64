import argparse
import json
import logging
import sys
from typing import Sequence

from pydantic import ValidationError

from wnsf.config import (DOCUMENTS, CRLBDocument, ExperimentConfig, FitConfig, ModelDocument, RandomSystemConstraints,
                         Settings)
from wnsf.core.canonical import CanonicalStructure, generic_structure
from wnsf.core.model import predict_one_step
from wnsf.crlb.bound import crlb, crlb_armax
from wnsf.estimation.baseline import ho_kalman
from wnsf.estimation.hoarx import estimate_hoarx
from wnsf.exceptions import SerializationError, StepError, WNSFError
from wnsf.executor import WNSFExecutor, monte_carlo
from wnsf.metrics import fit_impulse, id_val_errors
from wnsf.simulate import random_system, simulate
from wnsf.utils.serializer import SerializerUtils

logger = logging.getLogger("wnsf.cli")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _order_grid(text: str) -> list[int]:
    """'start:step:stop' (stop included) or a comma-separated list."""
    if ":" not in text:
        return _int_list(text)
    try:
        parts = [int(p) for p in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad order grid '{text}'")
    if len(parts) != 3 or parts[1] <= 0:
        raise argparse.ArgumentTypeError("order grid must be start:step:stop with a positive step")
    start, step, stop = parts
    return list(range(start, stop + 1, step))


def _structure(text: str):
    return "auto" if text == "auto" else _int_list(text)


def _emit(obj, path: str | None):
    if path is None:
        print(json.dumps(SerializerUtils.to_builtin(obj), indent=4))
    elif path.endswith((".yaml", ".yml")):
        SerializerUtils.save_yaml(obj, path)
    else:
        SerializerUtils.save_json(obj, path)


# -------------------- COMMANDS --------------------
def cmd_simulate(args):
    model, _ = SerializerUtils.load_model(args.model)
    experiment = SerializerUtils.load_document(args.experiment, ExperimentConfig)
    if args.seed is not None:
        experiment = experiment.model_copy(update={"seed": args.seed})
    dataset = simulate(model, experiment)
    SerializerUtils.save_dataset(dataset, args.out)
    logger.info("wrote %d samples to %s", dataset.sample_count, args.out)


def cmd_fit(args):
    base = SerializerUtils.load_document(args.config, FitConfig).model_dump() if args.config else {}
    overrides = {"n_x": args.nx, "order": args.order, "order_grid": args.order_grid, "structure": args.structure,
                 "a_iterations": args.a_iterations, "eta_iterations": args.eta_iterations,
                 "weighting": args.weighting}
    base.update({k: v for k, v in overrides.items() if v is not None})
    if args.order is not None:
        base["order_grid"] = None
    elif args.order_grid is not None:
        base["order"] = None
    config = FitConfig(**base)

    dataset = SerializerUtils.load_dataset(args.data)
    executor = WNSFExecutor(config)
    model = executor.fit(dataset)
    if args.print_logs:
        executor.print_logs()
    if args.save_dir:
        executor.save(args.save_dir)
    if args.report:
        _emit(executor.report().model_dump(mode="json"), args.report)
    if args.out:
        SerializerUtils.save_model(model, args.out, executor.context.structure)
    else:
        _emit(ModelDocument.from_model(model, executor.context.structure).model_dump(exclude_none=True), None)


def cmd_eval(args):
    estimate, _ = SerializerUtils.load_model(args.est)
    result = {}
    if args.true:
        truth, _ = SerializerUtils.load_model(args.true)
        result["fit"] = fit_impulse(truth, estimate, args.horizon, path=args.path)
    if args.data:
        dataset = SerializerUtils.load_dataset(args.data)
        y_hat, _ = predict_one_step(estimate, dataset)
        result["e_id"], result["e_val"] = id_val_errors(dataset.y, y_hat, args.split)
    if not result:
        raise ValueError("eval needs --true and/or --data")
    _emit(result, args.out)


def _bound(model, experiment: ExperimentConfig, structure, armax: bool):
    controller = experiment.loop.controller(model.n_u, model.n_y)
    shaping = experiment.shaping(model.n_u)
    if experiment.innovation_variance is not None:
        model = model.with_sigma(experiment.innovation_variance)
    if armax:
        return crlb_armax(model, controller, shaping, experiment.loop.reference_gain)
    return crlb(model, structure, controller, shaping, experiment.loop.reference_gain)


def _model_structure(model, stored, requested):
    if requested:
        return CanonicalStructure(tuple(requested), n_u=model.n_u)
    return stored or generic_structure(model.n_x, model.n_y, model.n_u)


def cmd_crlb(args):
    model, stored = SerializerUtils.load_model(args.model)
    experiment = SerializerUtils.load_document(args.experiment, ExperimentConfig)
    bound = _bound(model, experiment, _model_structure(model, stored, args.structure), args.armax)
    covariance = None if bound.singular else bound.covariance(experiment.sample_count).tolist()
    document = CRLBDocument(labels=bound.labels, sigma_e2=bound.sigma_e2,
                            information=bound.information.tolist(), covariance=covariance,
                            singular=bound.singular)
    _emit(document.model_dump(mode="json"), args.out)


def cmd_montecarlo(args):
    model, stored = SerializerUtils.load_model(args.model)
    experiment = SerializerUtils.load_document(args.experiment, ExperimentConfig)
    fit_config = SerializerUtils.load_document(args.config, FitConfig) if args.config else None
    orders = args.orders[0] if args.orders and len(args.orders) == 1 else args.orders
    table = monte_carlo(model, experiment, args.trials, args.grid_N, orders=orders,
                        structure=_model_structure(model, stored, args.structure),
                        fit_config=fit_config, coordinates="armax" if args.armax else "canonical")
    if args.out:
        table.to_csv(args.out, index=False)
    else:
        print(table.to_csv(index=False), end="")


def cmd_baseline(args):
    dataset = SerializerUtils.load_dataset(args.data)
    order = args.order or (2 * args.f if args.f else 10 * args.nx)
    markov = estimate_hoarx(dataset, order)
    model = ho_kalman(markov, args.nx, f=args.f)
    SerializerUtils.save_model(model, args.out)


def cmd_randsys(args):
    constraints = (SerializerUtils.load_document(args.constraints, RandomSystemConstraints)
                   if args.constraints else RandomSystemConstraints())
    if args.canonical:
        constraints = constraints.model_copy(update={"canonical": True})
    model = random_system(args.nx, args.nu, args.ny, args.seed, constraints)
    structure = generic_structure(args.nx, args.ny, args.nu) if constraints.canonical else None
    SerializerUtils.save_model(model, args.out, structure)


def cmd_schema(args):
    names = [args.name] if args.name else list(DOCUMENTS)
    schemas = {name: DOCUMENTS[name].model_json_schema() for name in names}
    print(json.dumps(schemas[args.name] if args.name else schemas, indent=4))


# -------------------- PARSER --------------------
def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wnsf", description="State-space identification by weighted null space fitting")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a model under an experiment")
    p.add_argument("--model", required=True)
    p.add_argument("--experiment", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="WNSF estimate from a CSV record")
    p.add_argument("--data", required=True)
    p.add_argument("--nx", type=int, default=None)
    orders = p.add_mutually_exclusive_group()
    orders.add_argument("--order", type=int, default=None)
    orders.add_argument("--order-grid", type=_order_grid, default=None, help="start:step:stop or n1,n2,...")
    p.add_argument("--structure", type=_structure, default=None, help="'auto' or a Kronecker index like 1,3")
    p.add_argument("--a-iterations", type=int, default=None)
    p.add_argument("--eta-iterations", type=int, default=None)
    p.add_argument("--weighting", choices=["optimal", "identity"], default=None)
    p.add_argument("--config", default=None, help="FitConfig JSON/YAML; flags override it")
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None)
    p.add_argument("--save-dir", default=None)
    p.add_argument("--print-logs", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="impulse-response FIT and identification/validation errors")
    p.add_argument("--est", required=True)
    p.add_argument("--true", default=None)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--path", choices=["input", "noise"], default="input")
    p.add_argument("--data", default=None)
    p.add_argument("--split", type=float, default=0.7)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("montecarlo", help="MSE versus CRLB over seeded trials")
    p.add_argument("--model", required=True)
    p.add_argument("--experiment", required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--grid-N", dest="grid_N", type=_int_list, required=True)
    p.add_argument("--orders", type=_int_list, default=None, help="one order, or one per entry of --grid-N")
    p.add_argument("--structure", type=_int_list, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--armax", action="store_true", help="report f, b, a instead of canonical parameters")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("crlb", help="Cramer-Rao bound of the canonical parameters")
    p.add_argument("--model", required=True)
    p.add_argument("--experiment", required=True)
    p.add_argument("--structure", type=_int_list, default=None)
    p.add_argument("--armax", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_crlb)

    p = sub.add_parser("baseline", help="Ho-Kalman realization from HOARX Markov parameters")
    p.add_argument("--data", required=True)
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--f", type=int, default=None)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("randsys", help="random stable innovations model")
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int, default=1)
    p.add_argument("--nu", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--constraints", default=None)
    p.add_argument("--canonical", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_randsys)

    p = sub.add_parser("schema", help="print the JSON Schema of the documents")
    p.add_argument("name", nargs="?", choices=list(DOCUMENTS), default=None)
    p.set_defaults(func=cmd_schema)
    return parser


def _configure_logging(args):
    if args.quiet:
        level = logging.ERROR
    elif args.verbose:
        level = logging.DEBUG if args.verbose > 1 else logging.INFO
    else:
        level = getattr(logging, Settings.WNSF_LOG_LEVEL, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    _configure_logging(args)

    if args.command == "fit" and args.nx is None and args.config is None:
        parser.print_usage(sys.stderr)
        print("wnsf: error: fit needs --nx or --config", file=sys.stderr)
        return EXIT_USAGE

    try:
        args.func(args)
    except (SerializationError, ValidationError) as e:
        print(f"wnsf: invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE
    except StepError as e:
        detail = f" ({e.diagnostic})" if e.diagnostic else ""
        print(f"wnsf: {e.message}{detail}", file=sys.stderr)
        return EXIT_NUMERICAL
    except WNSFError as e:
        print(f"wnsf: {type(e).__name__}: {e.message}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as e:
        print(f"wnsf: invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK
