#!/usr/bin/env python3
# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

import logging

import pandas as pd
import pytest
import yaml
from helpers import METHODS, SMALL_TRAINING, error_rates, ropf

logger = logging.getLogger(__name__)


def test_generate(workdir) -> None:
    """Test that training and test datasets are written for the triangle case."""
    out = ropf(
        *"generate --case three_bus --samples 200 --seed 1 --split 0.8,0.2 --no-timing".split(),
        *("--out", str(workdir / "train.jsonl")),
    )
    assert out.startswith("200 samples of three_bus written to")

    out = ropf(
        *"generate --case three_bus --samples 40 --seed 2 --split 0,0,1 --no-timing".split(),
        *("--out", str(workdir / "test.jsonl")),
    )
    assert "test 40" in out


def test_train_line_stage(workdir) -> None:
    """Test that the line model and its history are written."""
    out = ropf(
        *("train", "--stage", "line", *SMALL_TRAINING),
        *("--data", str(workdir / "train.jsonl"), "--out", str(workdir / "line.yaml")),
    )

    document = yaml.safe_load((workdir / "line.yaml").read_text())
    assert out.startswith("line model written to")
    assert document["head"]["kind"] == "line"
    assert document["case_name"] == "three_bus"
    assert len(pd.read_csv(workdir / "line.history.csv")) == 60


def test_train_gen_stage(workdir) -> None:
    """Test that the generator model trains on stage-one predictions."""
    out = ropf(
        *("train", "--stage", "gen", *SMALL_TRAINING),
        *("--line-model", str(workdir / "line.yaml")),
        *("--data", str(workdir / "train.jsonl"), "--out", str(workdir / "gen.yaml")),
    )

    assert out.startswith("gen model written to")
    assert yaml.safe_load((workdir / "gen.yaml").read_text())["head"]["kind"] == "gen"


def test_predict(workdir) -> None:
    """Test a hierarchical prediction at the base loads."""
    loads = workdir / "loads.yaml"
    loads.write_text(yaml.safe_dump({"loads_mw": {1: 0.0, 2: 60.0, 3: 120.0}}))

    out = ropf(
        *("predict", "--case", "three_bus", "--loads", str(loads)),
        *("--model", str(workdir / "line.yaml"), "--gen-model", str(workdir / "gen.yaml")),
        *("--out", str(workdir / "prediction.yaml")),
    )

    document = yaml.safe_load((workdir / "prediction.yaml").read_text())
    assert out.endswith("lines predicted congested\n")
    assert set(document["line_labels"]) == {1, 2, 3}
    assert set(document["gen_labels"]) == {1, 2, 3}


def test_bench(workdir) -> None:
    """Test the four-method report on the held-out samples."""
    report = workdir / "report.csv"

    ropf(
        *("bench", "--case", "three_bus", "--data", str(workdir / "test.jsonl")),
        *("--line-model", str(workdir / "line.yaml"), "--gen-model", str(workdir / "gen.yaml")),
        *("--out-report", str(report), "--out-log", str(workdir / "log.jsonl")),
    )

    frame = pd.read_csv(report).set_index("method")
    assert frame.index.tolist() == METHODS
    assert frame["n_samples"].tolist() == [40] * 4
    assert frame["violation_count"].sum() == 0
    # A verified relaxation is optimal and a fallback re-solves FOPF.
    assert frame.loc["ropfl", "mean_cost_pct"] == pytest.approx(100.0, rel=1e-6)
    assert frame.loc["ropfg", "mean_cost_pct"] >= 100.0 - 1e-4
    assert frame.loc["ropflg", "mean_cost_pct"] >= 100.0 - 1e-4
    assert set(error_rates(report)) == {"lines", "generators"}

    sidecar = yaml.safe_load(report.with_suffix(".yaml").read_text())
    assert sidecar["case"] == "three_bus"
    assert sidecar["n_samples"] == 40


def test_oracle_bench(workdir) -> None:
    """Test that true labels preserve the FOPF cost without fallbacks."""
    report = workdir / "oracle.csv"

    ropf(
        *"bench --case three_bus --oracle --no-timing".split(),
        *("--data", str(workdir / "test.jsonl")),
        *("--out-report", str(report), "--out-log", str(workdir / "oracle.jsonl")),
    )

    frame = pd.read_csv(report)
    assert frame["mean_cost_pct"].tolist() == pytest.approx([100.0] * 4, rel=1e-6)
    assert frame["fallback_count"].sum() == 0
    assert frame["violation_count"].sum() == 0
    assert all(row["total_error_pct"] == 0.0 for row in error_rates(report).values())
