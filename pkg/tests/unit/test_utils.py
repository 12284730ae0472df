# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

import numpy as np
import pytest

from utils import (
    THREAD_ENV_VARS,
    RecordFormatError,
    environment_metadata,
    read_records,
    sample_rng,
    thread_environment,
    write_records,
)


def test_sample_rng_depends_on_key_only():
    """Test that equal keys give equal streams and different keys differ."""
    first = sample_rng(7, 3).random(5)

    assert np.array_equal(sample_rng(7, 3).random(5), first)
    assert not np.array_equal(sample_rng(7, 4).random(5), first)
    assert not np.array_equal(sample_rng(7, 3, stream=1).random(5), first)


def test_records_round_trip(tmp_path):
    """Test writing and reading line-delimited records."""
    path = tmp_path / "records.jsonl"
    records = [{"record": "header", "n": 2}, {"x": [1.5, None]}]

    write_records(path, records)

    assert read_records(path) == records
    assert path.read_text().count("\n") == 2


def test_read_records_skips_blank_lines(tmp_path):
    """Test that blank lines are ignored."""
    path = tmp_path / "records.jsonl"
    path.write_text('{"a": 1}\n\n{"b": 2}\n')

    assert read_records(path) == [{"a": 1}, {"b": 2}]


@pytest.mark.parametrize(
    "content,match",
    [
        ('{"a": 1}\n{"a": \n', r"records.jsonl:2: invalid JSON"),
        ('"text"\n', r"records.jsonl:1: expected a JSON object"),
    ],
)
def test_read_records_errors(tmp_path, content, match):
    """Test that broken lines are located."""
    path = tmp_path / "records.jsonl"
    path.write_text(content)

    with pytest.raises(RecordFormatError, match=match):
        read_records(path)


def test_thread_environment(monkeypatch):
    """Test that unset thread variables are reported empty."""
    for name in THREAD_ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("OMP_NUM_THREADS", "1")

    assert thread_environment() == {
        "OMP_NUM_THREADS": "1",
        "OPENBLAS_NUM_THREADS": "",
        "MKL_NUM_THREADS": "",
    }


def test_environment_metadata():
    """Test the recorded interpreter and library versions."""
    metadata = environment_metadata()

    assert metadata["tool_version"] == "0.1.0"
    assert metadata["numpy"] == np.__version__
    assert set(metadata["threads"]) == set(THREAD_ENV_VARS)
