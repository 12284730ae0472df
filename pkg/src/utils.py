# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""Helpers shared by the dataset, training and benchmark layers."""

import json
import logging
import os
import platform
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import numpy as np

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"
THREAD_ENV_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class RecordFormatError(ValueError):
    """A line-delimited record file could not be parsed."""


def sample_rng(seed: int, sample_id: int, stream: int = 0) -> np.random.Generator:
    """Generator that depends only on (seed, sample_id, stream).

    Args:
        seed: Run seed.
        sample_id: Index of the sample the draws belong to.
        stream: Separates independent uses, e.g. loads vs split assignment.

    Returns:
        A fresh numpy Generator.
    """
    return np.random.default_rng([seed, sample_id, stream])


def write_records(path: Union[str, Path], records: Iterable[Dict[str, Any]]) -> None:
    """Write one JSON object per line."""
    with open(path, "w") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")


def read_records(path: Union[str, Path]) -> List[Dict[str, Any]]:
    """Read a file written by write_records.

    Raises:
        RecordFormatError: If a line is not a JSON object.
    """
    records = []
    with open(path) as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise RecordFormatError(f"{path}:{number}: invalid JSON ({err.msg})")
            if not isinstance(record, dict):
                raise RecordFormatError(f"{path}:{number}: expected a JSON object")
            records.append(record)
    return records


def thread_environment() -> Dict[str, str]:
    """BLAS/OpenMP thread settings that affect floating-point reproducibility."""
    return {name: os.environ.get(name, "") for name in THREAD_ENV_VARS}


def environment_metadata() -> Dict[str, Any]:
    """Interpreter, library and thread settings recorded alongside artifacts."""
    return {
        "tool_version": TOOL_VERSION,
        "python": platform.python_version(),
        "platform": platform.platform(),
        "numpy": np.__version__,
        "threads": thread_environment(),
    }
