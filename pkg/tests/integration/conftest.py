# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

import logging
import shutil
import tempfile
from pathlib import Path
from typing import Generator

import pytest

logger = logging.getLogger(__name__)


def pytest_addoption(parser) -> None:
    """Add custom command-line options to pytest."""
    parser.addoption(
        "--keep-artifacts",
        action="store_true",
        default=False,
        help="keep the datasets, models and reports written by the pipeline",
    )
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="run the desk-scale training tests",
    )


def pytest_collection_modifyitems(config, items) -> None:
    """Skip slow tests unless --run-slow is given."""
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="desk-scale run, enable with --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="module")
def workdir(request: pytest.FixtureRequest) -> Generator[Path, None, None]:
    """Directory holding the artifacts of one test module."""
    keep = bool(request.config.getoption("--keep-artifacts"))
    path = Path(tempfile.mkdtemp(prefix=f"ropf-{request.module.__name__}-"))

    yield path  # run the tests

    if keep:
        logger.info("Artifacts kept in %s", path)
    else:
        shutil.rmtree(path, ignore_errors=True)
