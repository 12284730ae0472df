#!/usr/bin/env python3
# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""Command-line entry point of the reduced-OPF toolkit."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence, TextIO, Tuple, Type

import yaml
from pydantic import BaseModel, ValidationError

from bench import run_benchmark, write_outputs
from config import BenchConfig, GenerateConfig, TrainConfig, format_validation_errors
from datagen import (
    DatasetFormatError,
    InfeasibleBaseCaseError,
    SampleDrawError,
    generate,
    load_dataset,
    save_dataset,
)
from events import RunEvent, log_run_event
from gnn import (
    GnnModel,
    HeadKind,
    ModelError,
    TrainingError,
    check_compatible,
    classify,
    load_model,
    predict_hierarchy,
    save_history,
    save_model,
    train,
)
from graph import FeatureError, expand
from grid import CaseError, Network, base_loads, load_case, read_loads
from opf import (
    Method,
    OpfSpecError,
    RopfSpec,
    check_loads,
    method_spec,
    solution_to_dict,
    solve_with_fallback,
)
from utils import RecordFormatError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class CliError(Exception):
    """Base class for all command errors."""

    exit_code = 1
    kind = "error"


class UsageError(CliError):
    """Raised when flags are missing, malformed or inconsistent."""

    exit_code = 2
    kind = "usage"


class InputError(CliError):
    """Raised when an input file or value fails validation."""

    exit_code = 3
    kind = "input"


class InfeasibleError(CliError):
    """Raised when the base problem has no feasible dispatch."""

    exit_code = 4
    kind = "infeasible"


# Module errors and the command error each one becomes.
_ERROR_MAP = (
    ((InfeasibleBaseCaseError, SampleDrawError), InfeasibleError),
    (
        (
            CaseError,
            DatasetFormatError,
            FeatureError,
            ModelError,
            OpfSpecError,
            RecordFormatError,
            TrainingError,
            OSError,
        ),
        InputError,
    ),
)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    """The full command-line grammar."""
    parser = _Parser(prog="ropf", description=__doc__)
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Verbosity of the diagnostic stream",
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = commands.add_parser("generate", help="Generate a labeled dataset")
    gen.add_argument("--case", required=True)
    gen.add_argument("--samples", type=int, required=True)
    gen.add_argument("--perturb", type=float, default=0.10)
    gen.add_argument("--tau", type=float, default=0.7)
    gen.add_argument("--eps-gen", type=float, default=1e-6)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--split", default="0.9,0.1")
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--global-scale", action="store_true")
    gen.add_argument("--no-timing", action="store_true")
    gen.add_argument("--allow-negative-loads", action="store_true")
    gen.add_argument("--out", required=True)

    trn = commands.add_parser("train", help="Train the line or generator model")
    trn.add_argument("--data", required=True)
    trn.add_argument("--stage", required=True, choices=["line", "gen"])
    trn.add_argument("--line-model")
    trn.add_argument("--epochs", type=int, default=100)
    trn.add_argument("--hidden", type=int, default=64)
    trn.add_argument("--layers", type=int, default=3)
    trn.add_argument("--lr", type=float, default=1e-3)
    trn.add_argument("--pos-weight-cap", type=float, default=50.0)
    trn.add_argument("--seed", type=int, default=0)
    trn.add_argument("--loss", choices=["bce", "mse"], default="bce")
    trn.add_argument("--teacher-forcing", action="store_true")
    trn.add_argument("--threshold", type=float, default=0.5)
    trn.add_argument("--out", required=True)

    prd = commands.add_parser("predict", help="Predict congested lines and max generators")
    prd.add_argument("--case", required=True)
    prd.add_argument("--model", required=True)
    prd.add_argument("--gen-model")
    prd.add_argument("--loads", required=True)
    prd.add_argument("--threshold", type=float)
    prd.add_argument("--out", required=True)

    slv = commands.add_parser("solve", help="Solve one OPF with verification and fallback")
    slv.add_argument("--case", required=True)
    slv.add_argument("--loads")
    slv.add_argument("--method", choices=[m.value for m in Method], default=Method.FOPF.value)
    slv.add_argument("--line-model")
    slv.add_argument("--gen-model")
    slv.add_argument("--threshold", type=float)
    slv.add_argument("--allow-negative-loads", action="store_true")
    slv.add_argument("--out")

    bch = commands.add_parser("bench", help="Benchmark the four methods on a test set")
    bch.add_argument("--case", required=True)
    bch.add_argument("--data", required=True)
    bch.add_argument("--line-model")
    bch.add_argument("--gen-model")
    bch.add_argument("--methods", default=",".join(m.value for m in Method))
    bch.add_argument("--seed", type=int, default=0)
    bch.add_argument("--oracle", action="store_true")
    bch.add_argument("--no-timing", action="store_true")
    bch.add_argument("--threshold", type=float)
    bch.add_argument("--out-report", required=True)
    bch.add_argument("--out-log", required=True)
    return parser


class Toolkit:
    """Runs one parsed command, writing results to ``out``."""

    def __init__(self, args: argparse.Namespace, out: TextIO = sys.stdout):
        self.args = args
        self.out = out
        self._handlers: Dict[str, Callable[[], None]] = {
            "generate": self.generate,
            "train": self.train,
            "predict": self.predict,
            "solve": self.solve,
            "bench": self.bench,
        }

    def run(self) -> None:
        """Dispatch to the command handler, translating module errors."""
        command = self.args.command
        log_run_event(RunEvent.RUN_START, command)
        try:
            self._handlers[command]()
        except CliError:
            raise
        except Exception as err:
            for sources, target in _ERROR_MAP:
                if isinstance(err, sources):
                    raise target(str(err)) from err
            raise
        log_run_event(RunEvent.RUN_FINISH, command)

    # COMMAND HANDLERS

    def generate(self) -> None:
        """Handle the generate command."""
        args = self.args
        config = self._validate_config(
            GenerateConfig,
            case=args.case,
            samples=args.samples,
            perturb=args.perturb,
            tau=args.tau,
            eps_gen=args.eps_gen,
            seed=args.seed,
            split=args.split,
            workers=args.workers,
            global_scale=args.global_scale,
            record_timing=not args.no_timing,
            allow_negative_loads=args.allow_negative_loads,
        )
        net = load_case(config.case, allow_negative_loads=config.allow_negative_loads)
        dataset = generate(net, config)
        save_dataset(dataset, args.out)
        counts = {name: len(dataset.split_samples(name)) for name in ("train", "val", "test")}
        self._print(
            f"{len(dataset.samples)} samples of {net.name} written to {args.out} "
            f"(train {counts['train']}, val {counts['val']}, test {counts['test']}, "
            f"redraws {dataset.redraws})"
        )

    def train(self) -> None:
        """Handle the train command."""
        args = self.args
        config = self._validate_config(
            TrainConfig,
            stage=args.stage,
            epochs=args.epochs,
            learning_rate=args.lr,
            hidden_dim=args.hidden,
            n_layers=args.layers,
            pos_weight_cap=args.pos_weight_cap,
            seed=args.seed,
            loss=args.loss,
            teacher_forcing=args.teacher_forcing,
            decision_threshold=args.threshold,
            line_model=args.line_model,
        )
        dataset = load_dataset(args.data)
        line_model = load_model(config.line_model) if config.line_model else None
        net = dataset.network
        model, history = train(config, dataset, expand(net), net, line_model)
        save_model(model, args.out)
        history_path = Path(args.out).with_suffix(".history.csv")
        save_history(history, history_path)
        self._print(
            f"{config.stage} model written to {args.out}; final train loss "
            f"{history.train_loss[-1]:.6f}, history in {history_path}"
        )

    def predict(self) -> None:
        """Handle the predict command."""
        args = self.args
        threshold = self._validate_threshold(args.threshold)
        net = load_case(args.case)
        loads = read_loads(args.loads)
        check_loads(net, loads)
        line_model, gen_model = self._load_models(net, args.model, args.gen_model)
        prediction = predict_hierarchy(net, loads, line_model, gen_model)

        result = {
            "case": net.name,
            "line_probs": prediction.line_probs,
            "line_labels": classify(
                prediction.line_probs, threshold or line_model.decision_threshold
            ),
        }
        if prediction.gen_probs is not None and gen_model is not None:
            result["gen_probs"] = prediction.gen_probs
            result["gen_labels"] = classify(
                prediction.gen_probs, threshold or gen_model.decision_threshold
            )
        Path(args.out).write_text(yaml.safe_dump(result, sort_keys=False))
        log_run_event(RunEvent.ARTIFACT_WRITTEN, "predict", args.out)
        congested = sum(result["line_labels"].values())
        self._print(f"{congested} of {len(net.line_ids)} lines predicted congested")

    def solve(self) -> None:
        """Handle the solve command."""
        args = self.args
        method = Method(args.method)
        threshold = self._validate_threshold(args.threshold)
        net = load_case(args.case, allow_negative_loads=args.allow_negative_loads)
        loads = read_loads(args.loads) if args.loads else base_loads(net)
        check_loads(net, loads, allow_negative=args.allow_negative_loads)

        if method == Method.FOPF:
            spec = RopfSpec.full(net)
        else:
            if args.line_model is None:
                raise UsageError(f"--line-model is required for {method.value}")
            if method.fixes_generators and args.gen_model is None:
                raise UsageError(f"--gen-model is required for {method.value}")
            gen_path = args.gen_model if method.fixes_generators else None
            line_model, gen_model = self._load_models(net, args.line_model, gen_path)
            prediction = predict_hierarchy(net, loads, line_model, gen_model)
            line_labels = classify(
                prediction.line_probs, threshold or line_model.decision_threshold
            )
            gen_labels = {g: 0 for g in net.gen_ids}
            if prediction.gen_probs is not None and gen_model is not None:
                gen_labels = classify(
                    prediction.gen_probs, threshold or gen_model.decision_threshold
                )
            spec = method_spec(net, method, line_labels, gen_labels)

        sol, report = solve_with_fallback(net, loads, spec, method)
        if not sol.optimal:
            raise InfeasibleError(f"OPF for {net.name} ended {sol.status.value}")
        if args.out:
            Path(args.out).write_text(json.dumps(solution_to_dict(sol, report), indent=2))
            log_run_event(RunEvent.ARTIFACT_WRITTEN, "solve", args.out)
        suffix = " (fell back to FOPF)" if sol.fell_back else ""
        self._print(
            f"{method.value}: {sol.status.value}, cost {sol.objective_cost:.2f} $/h{suffix}"
        )

    def bench(self) -> None:
        """Handle the bench command."""
        args = self.args
        config = self._validate_config(
            BenchConfig,
            methods=args.methods,
            oracle=args.oracle,
            record_timing=not args.no_timing,
            seed=args.seed,
            threshold=args.threshold,
            line_model=args.line_model,
            gen_model=args.gen_model,
        )
        net = load_case(args.case)
        dataset = load_dataset(args.data)
        self._check_same_network(net, dataset.network)

        line_model = gen_model = None
        if config.needs_models:
            needs_gens = any(m.fixes_generators for m in config.methods)
            line_model, gen_model = self._load_models(
                net, config.line_model, config.gen_model if needs_gens else None
            )
        result = run_benchmark(net, dataset, config, line_model, gen_model)
        write_outputs(
            result,
            config,
            args.out_report,
            args.out_log,
            extra={"case": net.name, "data": str(args.data), "n_samples": len(dataset.samples)},
        )
        self._print(result.report.to_string(index=False))

    # HELPER METHODS

    def _print(self, text: str) -> None:
        print(text, file=self.out)

    def _validate_config(self, schema: Type[BaseModel], **values):
        """Build a run configuration or raise a usage error naming every bad flag.

        Raises:
            UsageError: If any value is invalid
        """
        try:
            return schema(**values)
        except ValidationError as ve:
            logger.info(ve)
            raise UsageError(f"Invalid configuration: {format_validation_errors(ve)}")

    def _validate_threshold(self, threshold: Optional[float]) -> Optional[float]:
        if threshold is not None and not 0.0 < threshold < 1.0:
            raise UsageError("threshold must be in (0, 1)")
        return threshold

    def _load_models(
        self, net: Network, line_path: Optional[str], gen_path: Optional[str]
    ) -> Tuple[GnnModel, Optional[GnnModel]]:
        if line_path is None:
            raise UsageError("a line model is required")
        line_model = load_model(line_path)
        check_compatible(line_model, net, HeadKind.LINE)
        gen_model = None
        if gen_path is not None:
            gen_model = load_model(gen_path)
            check_compatible(gen_model, net, HeadKind.GEN)
        return line_model, gen_model

    def _check_same_network(self, net: Network, other: Network) -> None:
        same_ids = (
            net.bus_ids == other.bus_ids
            and net.gen_ids == other.gen_ids
            and net.line_ids == other.line_ids
        )
        if not same_ids:
            raise InputError(f"Dataset was generated on '{other.name}', not on '{net.name}'")


def _report_error(err: CliError, stream: TextIO) -> None:
    record = {"error": err.kind, "exit_code": err.exit_code, "message": str(err)}
    print(json.dumps(record), file=stream)


def main(
    argv: Optional[Sequence[str]] = None,
    out: TextIO = sys.stdout,
    err: TextIO = sys.stderr,
) -> int:
    """Run the toolkit and return the process exit code."""
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
    except UsageError as usage:
        _report_error(usage, err)
        return usage.exit_code

    logging.basicConfig(level=args.log_level, stream=err, format=LOG_FORMAT, force=True)
    try:
        Toolkit(args, out).run()
    except CliError as failure:
        logger.debug("Command %s failed", args.command, exc_info=True)
        _report_error(failure, err)
        return failure.exit_code
    return 0


if __name__ == "__main__":  # pragma: nocover
    sys.exit(main())
