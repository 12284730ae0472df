# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""Benchmark of FOPF against the reduced methods over a test set.

Every sample is predicted once, then solved by each requested method with
verification and fallback. The per-sample log is the source of truth: the
report rows are aggregated from it and nothing else.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from config import BenchConfig
from datagen import Dataset, Sample
from events import RunEvent, log_run_event
from gnn import GnnModel, HeadKind, check_compatible, classify, predict_hierarchy
from graph import expand, normalize_adjacency
from grid import Network
from opf import Method, RopfSpec, method_spec, solve_with_fallback
from utils import environment_metadata, write_records

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "method",
    "n_samples",
    "mean_cost",
    "mean_cost_pct",
    "total_solve_time_s",
    "time_saving_pct",
    "mean_inference_time_s",
    "fallback_count",
    "violation_count",
]
ERROR_COLUMNS = ["family", "false_positive_pct", "false_negative_pct", "total_error_pct"]
COST_REL_TOL = 1e-6

# Magnitudes published for a 73-bus system; recorded for comparison only.
REFERENCE_MAGNITUDES = {
    "system": "73-bus, 10,000 train/val and 1,000 test samples",
    "line_errors_pct": {"false_positive": 1.07, "false_negative": 0.12, "total": 1.19},
    "gen_errors_pct": {"false_positive": 5.35, "false_negative": 0.92, "total": 6.27},
    "time_saving_pct": {"ropfl": 21.67, "ropfg": 22.16, "ropflg": 31.92},
    "max_mean_cost_gap_pct": 0.064,
}


class MetricShapeError(ValueError):
    """Predicted and true label sets are not congruent."""


@dataclass(frozen=True)
class FamilyErrors:
    """Type I / Type II rates of one target family over all (sample, target) pairs."""

    false_positive_pct: float
    false_negative_pct: float
    n_pairs: int

    @property
    def total_error_pct(self) -> float:
        """Sum of both error rates."""
        return self.false_positive_pct + self.false_negative_pct


@dataclass
class ErrorReport:
    """Error rates per family; a family is absent when nothing predicted it."""

    lines: Optional[FamilyErrors] = None
    generators: Optional[FamilyErrors] = None

    def to_frame(self) -> pd.DataFrame:
        """Rows of the error CSV."""
        rows = [
            {
                "family": family,
                "false_positive_pct": errors.false_positive_pct,
                "false_negative_pct": errors.false_negative_pct,
                "total_error_pct": errors.total_error_pct,
            }
            for family, errors in (("lines", self.lines), ("generators", self.generators))
            if errors is not None
        ]
        return pd.DataFrame(rows, columns=ERROR_COLUMNS)


@dataclass
class BenchResult:
    """Everything a benchmark run produces."""

    report: pd.DataFrame
    errors: ErrorReport
    log: List[Dict[str, Any]]
    saving_with_inference_pct: Dict[str, float] = field(default_factory=dict)
    dominance: Dict[str, Dict[str, int]] = field(default_factory=dict)


def compute_error_metrics(
    predicted: Sequence[Mapping[int, int]], true: Sequence[Mapping[int, int]]
) -> FamilyErrors:
    """Percent false positives and false negatives over all (sample, target) pairs.

    Raises:
        MetricShapeError: If the sample counts or the target ids differ.
    """
    if len(predicted) != len(true):
        raise MetricShapeError(f"{len(predicted)} predictions for {len(true)} samples")
    false_pos = false_neg = pairs = 0
    for index, (guess, actual) in enumerate(zip(predicted, true)):
        if set(guess) != set(actual):
            raise MetricShapeError(f"Sample {index}: predicted and true targets differ")
        for key, label in actual.items():
            false_pos += int(guess[key] == 1 and label == 0)
            false_neg += int(guess[key] == 0 and label == 1)
        pairs += len(actual)
    if pairs == 0:
        return FamilyErrors(0.0, 0.0, 0)
    return FamilyErrors(100.0 * false_pos / pairs, 100.0 * false_neg / pairs, pairs)


def build_spec_from_predictions(
    net: Network, line_labels: Mapping[int, int], gen_labels: Mapping[int, int]
) -> Dict[Method, RopfSpec]:
    """The spec every method derives from one set of predicted labels."""
    return {m: method_spec(net, m, line_labels, gen_labels) for m in Method}


@dataclass(frozen=True)
class _Labels:
    lines: Dict[int, int]
    gens: Dict[int, int]
    line_time_s: float = 0.0
    gen_time_s: float = 0.0
    predicted_gens: bool = False


class _Predictor:
    """Turns a sample into labels, from the models or from the stored truth."""

    def __init__(
        self,
        net: Network,
        config: BenchConfig,
        line_model: Optional[GnnModel],
        gen_model: Optional[GnnModel],
    ):
        self.net = net
        self.config = config
        self.line_model = line_model if config.needs_models else None
        needs_gens = any(m.fixes_generators for m in config.methods)
        self.gen_model = gen_model if self.line_model is not None and needs_gens else None
        if self.line_model is not None:
            check_compatible(self.line_model, net, HeadKind.LINE)
        if self.gen_model is not None:
            check_compatible(self.gen_model, net, HeadKind.GEN)
        self.graph = expand(net)
        self.a_hat = normalize_adjacency(self.graph)

    def _threshold(self, model: GnnModel) -> float:
        return self.config.threshold or model.decision_threshold

    def labels(self, sample: Sample) -> _Labels:
        if self.line_model is None:
            return _Labels(dict(sample.line_labels), dict(sample.gen_labels))
        prediction = predict_hierarchy(
            self.net, sample.loads_mw, self.line_model, self.gen_model, self.graph, self.a_hat
        )
        line_labels = classify(prediction.line_probs, self._threshold(self.line_model))
        if prediction.gen_probs is None or self.gen_model is None:
            gen_labels = {g: 0 for g in self.net.gen_ids}
        else:
            gen_labels = classify(prediction.gen_probs, self._threshold(self.gen_model))
        return _Labels(
            line_labels,
            gen_labels,
            prediction.line_time_s,
            prediction.gen_time_s,
            predicted_gens=prediction.gen_probs is not None,
        )


def _inference_time(method: Method, labels: _Labels) -> float:
    if method == Method.FOPF:
        return 0.0
    if method.fixes_generators:
        return labels.line_time_s + labels.gen_time_s
    return labels.line_time_s


def _solve_record(
    net: Network,
    sample: Sample,
    method: Method,
    labels: _Labels,
    record_timing: bool,
) -> Dict[str, Any]:
    spec = method_spec(net, method, labels.lines, labels.gens)
    sol, report = solve_with_fallback(net, sample.loads_mw, spec, method)
    rejected = sol.rejected
    timing = 1.0 if record_timing else 0.0
    return {
        "sample_id": sample.sample_id,
        "method": method.value,
        "cost": sol.objective_cost,
        "solve_time_s": timing * sol.total_solve_time_s,
        "fell_back": sol.fell_back,
        "n_monitored": len(spec.monitored_lines),
        "n_fixed": len(spec.fixed_max_gens),
        "build_time_s": timing * sol.build_time_s,
        "inference_time_s": timing * _inference_time(method, labels),
        "violation_count": report.violation_count,
        "reduced_cost": rejected.objective_cost if rejected is not None else sol.objective_cost,
        "reduced_feasible": rejected is None,
        "fopf_cost": sample.fopf_cost,
    }


def dominance_counters(log: pd.DataFrame) -> Dict[str, Dict[str, int]]:
    """Per-method bookkeeping of the relaxation and restriction inequalities.

    Pure line reduction is a relaxation: its pre-fallback cost never exceeds
    FOPF. Generator fixing is a restriction: a feasible result never beats
    FOPF. Breaches are counted; healthy runs report zero.
    """
    counters: Dict[str, Dict[str, int]] = {}
    for method, rows in log.groupby("method", sort=False):
        fopf = rows["fopf_cost"].to_numpy(dtype=float)
        tol = COST_REL_TOL * np.maximum(1.0, np.abs(fopf))
        reduced = rows["reduced_cost"].to_numpy(dtype=float)
        solved = ~np.isnan(reduced)
        feasible = rows["reduced_feasible"].to_numpy(dtype=bool)
        returned = rows["cost"].to_numpy(dtype=float)
        entry = {
            "pre_fallback_feasible": int(feasible.sum()),
            "matches_fopf": int(np.sum(np.abs(returned - fopf) <= tol)),
            "relaxation_breaches": 0,
            "restriction_breaches": 0,
        }
        if Method(method) == Method.ROPFL:
            entry["relaxation_breaches"] = int(np.sum(solved & (reduced > fopf + tol)))
        if Method(method).fixes_generators:
            entry["restriction_breaches"] = int(np.sum(feasible & (reduced < fopf - tol)))
        counters[str(method)] = entry
    return counters


def aggregate(
    log: pd.DataFrame, methods: Sequence[Method], fopf_time_s: float
) -> Tuple[pd.DataFrame, Dict[str, float]]:
    """Report rows (and inference-inclusive savings) recomputed from the per-sample log.

    Args:
        log: One row per (sample, method).
        methods: Methods in report order.
        fopf_time_s: FOPF solve-time total used as the saving baseline when no
            FOPF rows are present.
    """
    grouped = log.groupby("method", sort=False)
    rows = []
    for method in methods:
        group = grouped.get_group(method.value)
        rows.append(
            {
                "method": method.value,
                "n_samples": len(group),
                "mean_cost": float(group["cost"].mean()),
                "total_solve_time_s": float(group["solve_time_s"].sum()),
                "total_inference_time_s": float(group["inference_time_s"].sum()),
                "mean_inference_time_s": float(group["inference_time_s"].mean()),
                "fallback_count": int(group["fell_back"].sum()),
                "violation_count": int(group["violation_count"].sum()),
            }
        )
    frame = pd.DataFrame(rows)

    by_method = frame.set_index("method")
    if Method.FOPF.value in by_method.index:
        reference_cost = float(by_method.loc[Method.FOPF.value, "mean_cost"])
        baseline = float(by_method.loc[Method.FOPF.value, "total_solve_time_s"])
    else:
        reference_cost = float(log.drop_duplicates("sample_id")["fopf_cost"].mean())
        baseline = fopf_time_s

    frame["mean_cost_pct"] = 100.0 * frame["mean_cost"] / reference_cost
    spent = frame["total_solve_time_s"]
    with_inference = spent + frame["total_inference_time_s"]
    if baseline > 0:
        frame["time_saving_pct"] = 100.0 * (baseline - spent) / baseline
        inclusive = 100.0 * (baseline - with_inference) / baseline
    else:
        frame["time_saving_pct"] = 0.0
        inclusive = with_inference * 0.0
    savings = {m: float(v) for m, v in zip(frame["method"], inclusive)}
    return frame[REPORT_COLUMNS], savings


def run_benchmark(
    net: Network,
    dataset: Dataset,
    config: BenchConfig,
    line_model: Optional[GnnModel] = None,
    gen_model: Optional[GnnModel] = None,
) -> BenchResult:
    """Predict, solve and verify every test sample with every requested method.

    Samples are processed sequentially so solve timings are contention free.

    Raises:
        ModelMismatchError: If a model does not fit the case.
    """
    predictor = _Predictor(net, config, line_model, gen_model)
    logger.info(
        "Benchmarking %d samples with %s",
        len(dataset.samples),
        ",".join(m.value for m in config.methods),
    )

    records = []
    predicted_lines, predicted_gens, true_lines, true_gens = [], [], [], []
    for sample in dataset.samples:
        labels = predictor.labels(sample)
        predicted_lines.append(labels.lines)
        true_lines.append(sample.line_labels)
        if labels.predicted_gens or predictor.line_model is None:
            predicted_gens.append(labels.gens)
            true_gens.append(sample.gen_labels)
        for method in config.methods:
            records.append(_solve_record(net, sample, method, labels, config.record_timing))

    errors = ErrorReport()
    if predictor.line_model is not None or config.oracle:
        errors.lines = compute_error_metrics(predicted_lines, true_lines)
    if predicted_gens and any(m.fixes_generators for m in config.methods):
        errors.generators = compute_error_metrics(predicted_gens, true_gens)

    log = pd.DataFrame(records)
    stored_fopf_time = sum(s.fopf_solve_time_s for s in dataset.samples)
    report, savings = aggregate(log, config.methods, stored_fopf_time)
    result = BenchResult(
        report=report,
        errors=errors,
        log=records,
        saving_with_inference_pct=savings,
        dominance=dominance_counters(log),
    )
    violations = int(report["violation_count"].sum())
    if violations:
        logger.error("%d violations in returned solutions", violations)
    logger.info("Benchmark finished after %d solves", len(records))
    return result


def sidecar_path(report_path: Union[str, Path]) -> Path:
    """Where the structured-text companion of a report lives."""
    return Path(report_path).with_suffix(".yaml")


def errors_path(report_path: Union[str, Path]) -> Path:
    """Where the error table of a report lives."""
    path = Path(report_path)
    return path.with_name(f"{path.stem}.errors.csv")


def write_outputs(
    result: BenchResult,
    config: BenchConfig,
    report_path: Union[str, Path],
    log_path: Union[str, Path],
    extra: Optional[Mapping[str, Any]] = None,
) -> None:
    """Write the report CSV, error CSV, per-sample log and YAML sidecar."""
    result.report.to_csv(report_path, index=False)
    result.errors.to_frame().to_csv(errors_path(report_path), index=False)
    write_records(log_path, result.log)

    sidecar = {
        "config": config.model_dump(mode="json"),
        "environment": environment_metadata(),
        "errors": result.errors.to_frame().to_dict(orient="records"),
        "time_saving_with_inference_pct": result.saving_with_inference_pct,
        "dominance": result.dominance,
        "reference_magnitudes": REFERENCE_MAGNITUDES,
        **dict(extra or {}),
    }
    sidecar_path(report_path).write_text(yaml.safe_dump(sidecar, sort_keys=False))
    for path in (report_path, errors_path(report_path), log_path, sidecar_path(report_path)):
        log_run_event(RunEvent.ARTIFACT_WRITTEN, "bench", str(path))
