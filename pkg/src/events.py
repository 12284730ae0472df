# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""Structured run-event logging.

Run events mark the points an operator auditing a batch wants to find
without reading debug output: when a run starts and finishes, when a sampled
load profile had to be redrawn, when a reduced OPF failed verification and
fell back to the full model, and when an artifact was written.
"""

import logging
from datetime import datetime, timezone
from enum import Enum

logger = logging.getLogger(__name__)


class RunEvent(str, Enum):
    """Event kinds emitted by the toolkit."""

    RUN_START = "run_start"
    RUN_FINISH = "run_finish"
    SAMPLE_REDRAW = "sample_redraw"
    OPF_FALLBACK = "opf_fallback"
    TRAINING_EPOCH = "training_epoch"
    ARTIFACT_WRITTEN = "artifact_written"


_EVENT_MESSAGE_MAPS = {
    RunEvent.RUN_START: "ropf {} started",
    RunEvent.RUN_FINISH: "ropf {} finished",
    RunEvent.SAMPLE_REDRAW: "ropf redrew infeasible load sample for {}",
    RunEvent.OPF_FALLBACK: "ropf {} solution rejected, fell back to full OPF",
    RunEvent.TRAINING_EPOCH: "ropf {} training epoch completed",
    RunEvent.ARTIFACT_WRITTEN: "ropf wrote {}",
}

_EVENT_LEVELS = {
    RunEvent.SAMPLE_REDRAW: logging.WARNING,
    RunEvent.OPF_FALLBACK: logging.WARNING,
}


def log_run_event(event: RunEvent, subject: str, msg: str = "") -> None:
    """Log a run event as one structured record.

    Args:
        event: The event kind.
        subject: What the event is about, e.g. a command name or a method tag.
        msg: Optional additional message.
    """
    level = _EVENT_LEVELS.get(event, logging.INFO)
    event_msg = _EVENT_MESSAGE_MAPS[event].format(subject)

    now = datetime.now(timezone.utc).astimezone()
    logger.log(
        level,
        {
            "datetime": now.isoformat(),
            "appid": f"ropf.{subject}",
            "event": f"{event.value}:{subject}",
            "level": logging.getLevelName(level)[:4],
            "description": f"{event_msg} {msg}".strip(),
        },
    )
