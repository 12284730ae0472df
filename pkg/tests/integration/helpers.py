# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

import hashlib
import logging
import subprocess
import sys
from pathlib import Path
from typing import Dict, Optional, Union

import pandas as pd

logger = logging.getLogger(__name__)

TIMEOUT = 30 * 60
CLI = Path(__file__).parents[2] / "src" / "cli.py"

METHODS = ["fopf", "ropfl", "ropfg", "ropflg"]
SMALL_TRAINING = ["--epochs", "60", "--hidden", "16", "--layers", "2", "--lr", "1e-2"]


def ropf(*argv: str, cwd: Optional[Union[str, Path]] = None) -> str:
    """Run the toolkit in a fresh interpreter and return its stdout.

    Args:
        argv: The command line after the program name
        cwd: Working directory of the command

    Returns:
        Everything the command wrote to stdout

    Raises:
        AssertionError: If the command exits non-zero
    """
    command = [sys.executable, str(CLI), *argv]
    logger.info("Running %s", " ".join(argv))
    result = subprocess.run(
        command, capture_output=True, text=True, timeout=TIMEOUT, cwd=cwd
    )
    assert result.returncode == 0, (
        f"'{' '.join(argv)}' exited {result.returncode}: {result.stderr.strip()}"
    )
    return result.stdout


def digest(path: Path) -> str:
    """SHA-256 of a file's bytes."""
    return hashlib.sha256(path.read_bytes()).hexdigest()


def error_rates(report: Path) -> Dict[str, Dict[str, float]]:
    """The per-family error table written next to a report, keyed by family."""
    frame = pd.read_csv(report.with_suffix(".errors.csv"))
    return frame.set_index("family").to_dict(orient="index")
