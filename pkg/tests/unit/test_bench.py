# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

import pandas as pd
import pytest
import yaml

from bench import (
    ERROR_COLUMNS,
    REPORT_COLUMNS,
    MetricShapeError,
    aggregate,
    build_spec_from_predictions,
    compute_error_metrics,
    dominance_counters,
    errors_path,
    run_benchmark,
    sidecar_path,
    write_outputs,
)
from config import BenchConfig
from gnn import HeadKind, init_model
from graph import N_FEATURES
from opf import Method, RopfSpec
from utils import read_records


def constant_model(kind: HeadKind, net, logit: float):
    """Model whose head ignores the embeddings and emits one fixed logit."""
    model = init_model(kind, N_FEATURES, hidden_dim=4, n_layers=1)
    model.params["head_w"][...] = 0.0
    model.params["head_b"][0] = logit
    model.case_name = net.name
    model.line_ids = list(net.line_ids)
    model.gen_ids = list(net.gen_ids)
    return model


@pytest.fixture(scope="module")
def oracle_result(three_bus, three_bus_dataset):
    """Benchmark of every method on the true labels."""
    config = BenchConfig(oracle=True, record_timing=False)
    return run_benchmark(three_bus, three_bus_dataset, config)


def test_error_rates_over_all_pairs():
    """Test false positive and false negative percentages over 1000 pairs."""
    true = [{k: 0 for k in range(10)} for _ in range(100)]
    predicted = [dict(labels) for labels in true]
    for s in range(5):
        predicted[s][0] = 1
    for s in range(5, 7):
        true[s][3] = 1

    errors = compute_error_metrics(predicted, true)

    assert errors.n_pairs == 1000
    assert errors.false_positive_pct == pytest.approx(0.5)
    assert errors.false_negative_pct == pytest.approx(0.2)
    assert errors.total_error_pct == pytest.approx(0.7)


def test_perfect_predictions():
    """Test that identical labels give zero error."""
    labels = [{1: 1, 2: 0}, {1: 0, 2: 1}]

    errors = compute_error_metrics(labels, labels)

    assert (errors.false_positive_pct, errors.false_negative_pct) == (0.0, 0.0)


@pytest.mark.parametrize(
    "predicted,true",
    [
        ([{1: 0}], [{1: 0}, {1: 1}]),
        ([{1: 0, 2: 0}], [{1: 0, 3: 0}]),
    ],
)
def test_error_shape_mismatch(predicted, true):
    """Test that incongruent label sets are refused."""
    with pytest.raises(MetricShapeError):
        compute_error_metrics(predicted, true)


def test_specs_from_all_negative_labels(three_bus):
    """Test that no positive label leaves reduced methods unmonitored and unfixed."""
    specs = build_spec_from_predictions(three_bus, {1: 0, 2: 0, 3: 0}, {1: 0, 2: 0, 3: 0})

    assert specs[Method.FOPF] == RopfSpec.full(three_bus)
    assert specs[Method.ROPFL] == RopfSpec.of([])
    assert specs[Method.ROPFG] == RopfSpec.full(three_bus)
    assert specs[Method.ROPFLG] == RopfSpec.of([])


def test_specs_from_all_positive_labels(three_bus):
    """Test that all-positive labels monitor every line and fix every generator."""
    specs = build_spec_from_predictions(three_bus, {1: 1, 2: 1, 3: 1}, {1: 1, 2: 1, 3: 1})

    assert specs[Method.FOPF] == RopfSpec.full(three_bus)
    assert specs[Method.ROPFL] == RopfSpec.full(three_bus)
    assert specs[Method.ROPFG] == RopfSpec.of([1, 2, 3], [1, 2, 3])
    assert specs[Method.ROPFLG] == RopfSpec.of([1, 2, 3], [1, 2, 3])


def hand_log() -> pd.DataFrame:
    rows = []
    for sample_id, fopf_cost in ((0, 100.0), (1, 200.0)):
        rows.append(
            {
                "sample_id": sample_id,
                "method": "fopf",
                "cost": fopf_cost,
                "solve_time_s": 1.0,
                "inference_time_s": 0.0,
                "fell_back": False,
                "violation_count": 0,
                "fopf_cost": fopf_cost,
            }
        )
        rows.append(
            {
                "sample_id": sample_id,
                "method": "ropfl",
                "cost": fopf_cost,
                "solve_time_s": 0.5 if sample_id == 0 else 0.3,
                "inference_time_s": 0.1,
                "fell_back": sample_id == 0,
                "violation_count": 0,
                "fopf_cost": fopf_cost,
            }
        )
    return pd.DataFrame(rows)


def test_aggregate_against_fopf_rows():
    """Test report rows recomputed from a hand-built log."""
    report, savings = aggregate(hand_log(), [Method.FOPF, Method.ROPFL], fopf_time_s=99.0)

    assert list(report.columns) == REPORT_COLUMNS
    fopf, ropfl = report.to_dict(orient="records")
    assert fopf["n_samples"] == 2
    assert fopf["mean_cost"] == pytest.approx(150.0)
    assert fopf["mean_cost_pct"] == pytest.approx(100.0)
    assert fopf["time_saving_pct"] == pytest.approx(0.0)
    assert ropfl["mean_cost_pct"] == pytest.approx(100.0)
    assert ropfl["total_solve_time_s"] == pytest.approx(0.8)
    assert ropfl["time_saving_pct"] == pytest.approx(60.0)
    assert ropfl["mean_inference_time_s"] == pytest.approx(0.1)
    assert ropfl["fallback_count"] == 1
    assert savings["ropfl"] == pytest.approx(50.0)


def test_aggregate_without_fopf_rows():
    """Test that stored FOPF costs and times serve as the reference."""
    log = hand_log()

    report, _ = aggregate(log[log["method"] == "ropfl"], [Method.ROPFL], fopf_time_s=4.0)

    row = report.iloc[0]
    assert row["mean_cost_pct"] == pytest.approx(100.0)
    assert row["time_saving_pct"] == pytest.approx(80.0)


def test_dominance_counts_breaches():
    """Test that relaxation and restriction breaches are counted."""
    log = pd.DataFrame(
        [
            {"method": "ropfl", "fopf_cost": 100.0, "reduced_cost": 101.0, "cost": 100.0},
            {"method": "ropfl", "fopf_cost": 100.0, "reduced_cost": 90.0, "cost": 100.0},
            {"method": "ropfg", "fopf_cost": 100.0, "reduced_cost": 99.0, "cost": 99.0},
            {"method": "ropfg", "fopf_cost": 100.0, "reduced_cost": None, "cost": 100.0},
        ]
    ).assign(reduced_feasible=[True, False, True, False])

    counters = dominance_counters(log)

    assert counters["ropfl"]["relaxation_breaches"] == 1
    assert counters["ropfl"]["pre_fallback_feasible"] == 1
    assert counters["ropfg"]["restriction_breaches"] == 1
    assert counters["ropfg"]["matches_fopf"] == 1


def test_oracle_benchmark_matches_fopf(oracle_result, three_bus_dataset):
    """Test that true labels reproduce the FOPF cost with every method."""
    report = oracle_result.report

    assert report["method"].tolist() == ["fopf", "ropfl", "ropfg", "ropflg"]
    assert report["n_samples"].tolist() == [20] * 4
    assert report["fallback_count"].sum() == 0
    assert report["violation_count"].sum() == 0
    for record in oracle_result.log:
        assert record["cost"] == pytest.approx(record["fopf_cost"], rel=1e-6)
    assert report["mean_cost_pct"].tolist() == pytest.approx([100.0] * 4)
    assert oracle_result.errors.lines.total_error_pct == 0.0
    assert oracle_result.errors.generators.total_error_pct == 0.0
    assert len(oracle_result.log) == 4 * len(three_bus_dataset.samples)


def test_oracle_benchmark_dominance(oracle_result):
    """Test the bookkeeping of a healthy run."""
    for method, entry in oracle_result.dominance.items():
        assert entry["relaxation_breaches"] == 0, method
        assert entry["restriction_breaches"] == 0, method
        assert entry["matches_fopf"] == 20, method


def test_no_timing_zeroes_times(oracle_result):
    """Test that disabled timing records zero solve and inference times."""
    assert all(r["solve_time_s"] == 0.0 for r in oracle_result.log)
    assert all(r["inference_time_s"] == 0.0 for r in oracle_result.log)
    assert oracle_result.report["time_saving_pct"].tolist() == [0.0] * 4


def test_fopf_only_benchmark(three_bus, three_bus_dataset):
    """Test a run that needs no models."""
    result = run_benchmark(three_bus, three_bus_dataset, BenchConfig(methods="fopf"))

    row = result.report.iloc[0]
    assert len(result.report) == 1
    assert row["mean_cost_pct"] == pytest.approx(100.0)
    assert row["time_saving_pct"] == pytest.approx(0.0)
    assert result.errors.to_frame().empty


def test_wrong_predictions_fall_back(three_bus, three_bus_dataset):
    """Test that predictions missing the binding line or fixing every unit fall back."""
    line_model = constant_model(HeadKind.LINE, three_bus, -10.0)
    gen_model = constant_model(HeadKind.GEN, three_bus, 10.0)
    config = BenchConfig(line_model="line.yaml", gen_model="gen.yaml", record_timing=False)

    result = run_benchmark(three_bus, three_bus_dataset, config, line_model, gen_model)

    fallbacks = dict(zip(result.report["method"], result.report["fallback_count"]))
    assert fallbacks == {"fopf": 0, "ropfl": 20, "ropfg": 20, "ropflg": 20}
    assert result.report["violation_count"].sum() == 0
    assert result.report["mean_cost_pct"].tolist() == pytest.approx([100.0] * 4)
    assert result.errors.lines.false_negative_pct == pytest.approx(100.0 / 3)
    assert result.errors.lines.false_positive_pct == 0.0
    assert result.errors.generators.false_positive_pct == pytest.approx(200.0 / 3)
    assert result.dominance["ropfg"]["pre_fallback_feasible"] == 0
    assert result.dominance["ropfl"]["relaxation_breaches"] == 0


def test_write_outputs(tmp_path, oracle_result):
    """Test the report, error table, log and sidecar files."""
    report_path, log_path = tmp_path / "report.csv", tmp_path / "log.jsonl"
    config = BenchConfig(oracle=True, record_timing=False)

    write_outputs(oracle_result, config, report_path, log_path, extra={"case": "three_bus"})

    assert list(pd.read_csv(report_path).columns) == REPORT_COLUMNS
    assert errors_path(report_path) == tmp_path / "report.errors.csv"
    errors = pd.read_csv(errors_path(report_path))
    assert list(errors.columns) == ERROR_COLUMNS
    assert errors["family"].tolist() == ["lines", "generators"]
    assert len(read_records(log_path)) == len(oracle_result.log)
    sidecar = yaml.safe_load(sidecar_path(report_path).read_text())
    assert sidecar["case"] == "three_bus"
    assert sidecar["config"]["methods"] == ["fopf", "ropfl", "ropfg", "ropflg"]
    assert "reference_magnitudes" in sidecar
    assert sidecar["environment"]["tool_version"] == "0.1.0"
