# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""Supervised dataset generation: perturbed loads, FOPF solves and labels.

A dataset file holds line-delimited JSON records: one header describing the
run (including the full case document), then one record per sample. Every
random draw of sample i comes from a generator seeded by (seed, i), so the
file does not depend on the number of workers.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from tenacity import RetryCallState, Retrying, retry_if_result, stop_after_attempt

from config import GenerateConfig
from events import RunEvent, log_run_event
from grid import LoadVector, Network, base_loads, parse_case, serialize_case
from lp import LpStatus
from opf import Method, OpfSolution, RopfSpec, check_loads, solve_opf
from utils import TOOL_VERSION, RecordFormatError, read_records, sample_rng, write_records

logger = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1
CONGESTION_GUARD_MW = 1e-9
MAX_DRAWS_PER_SAMPLE = 50
REDRAW_WARNING_FRACTION = 0.10
SPLIT_NAMES = ("train", "val", "test")

LOAD_STREAM = 0
SPLIT_STREAM = 1


class InfeasibleBaseCaseError(RuntimeError):
    """FOPF has no solution at the case's own loads."""


class SampleDrawError(RuntimeError):
    """No feasible load profile was drawn within the attempt budget."""


class DatasetFormatError(ValueError):
    """A dataset file could not be read."""


class Sample(BaseModel):
    """One labeled FOPF solve."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    sample_id: int
    split: str
    loads_mw: Dict[int, float]
    line_labels: Dict[int, int]
    gen_labels: Dict[int, int]
    fopf_cost: float
    fopf_pg_mw: Dict[int, float]
    fopf_theta_rad: Dict[int, float]
    fopf_flow_mw: Dict[int, float]
    fopf_solve_time_s: float
    redraws: int = 0


@dataclass
class Dataset:
    """Samples plus the parameters that produced them."""

    network: Network
    tau: float
    eps_gen: float
    perturb: float
    seed: int
    split_fractions: Tuple[float, float, float]
    samples: List[Sample]
    global_scale: bool = False
    redraws: int = 0
    warning: Optional[str] = None
    tool_version: str = TOOL_VERSION

    @property
    def case_name(self) -> str:
        """Name of the case the samples were solved on."""
        return self.network.name

    def split_samples(self, name: str) -> List[Sample]:
        """Samples assigned to one split, in sample-id order."""
        return [s for s in self.samples if s.split == name]


def perturb_loads(
    base: LoadVector, perturb: float, rng: np.random.Generator, global_scale: bool = False
) -> Dict[int, float]:
    """Scale each load by a factor drawn uniformly from [1 - perturb, 1 + perturb].

    Args:
        base: Base load vector.
        perturb: Half-width of the scaling interval.
        rng: Source of the draws; one draw per bus in bus-id order.
        global_scale: Use a single factor for every bus instead.
    """
    buses = sorted(base)
    if global_scale:
        factor = rng.uniform(1.0 - perturb, 1.0 + perturb)
        return {b: base[b] * factor for b in buses}
    factors = rng.uniform(1.0 - perturb, 1.0 + perturb, size=len(buses))
    return {b: base[b] * float(u) for b, u in zip(buses, factors)}


def label_sample(
    net: Network, sol: OpfSolution, tau: float, eps_gen: float
) -> Tuple[Dict[int, int], Dict[int, int]]:
    """Label congested lines and generators dispatched at maximum capacity.

    A line is congested when |flow| exceeds tau * RateA (strictly, with a
    1e-9 MW guard); a generator is at maximum when it is within
    eps_gen * max(1, P_max) of P_max.
    """
    lines = net.line_map()
    gens = net.gen_map()
    line_labels = {
        k: int(abs(sol.flow_mw[k]) > tau * lines[k].rate_a_mw - CONGESTION_GUARD_MW)
        for k in net.line_ids
    }
    gen_labels = {
        g: int(sol.pg_mw[g] >= gens[g].pmax_mw - eps_gen * max(1.0, gens[g].pmax_mw))
        for g in net.gen_ids
    }
    return line_labels, gen_labels


def assign_split(seed: int, sample_id: int, fractions: Tuple[float, float, float]) -> str:
    """Split membership as a function of (seed, sample_id) only."""
    draw = sample_rng(seed, sample_id, SPLIT_STREAM).random()
    cumulative = 0.0
    for name, fraction in zip(SPLIT_NAMES, fractions):
        cumulative += fraction
        if draw < cumulative:
            return name
    return [n for n, f in zip(SPLIT_NAMES, fractions) if f > 0][-1]


def _log_redraw(case_name: str, sample_id: int, state: RetryCallState) -> None:
    log_run_event(
        RunEvent.SAMPLE_REDRAW,
        case_name,
        f"sample {sample_id} attempt {state.attempt_number} was infeasible",
    )


def draw_feasible(
    net: Network, base: LoadVector, config: GenerateConfig, sample_id: int
) -> Tuple[Dict[int, float], OpfSolution, int]:
    """Draw load profiles for one sample until FOPF solves.

    Returns:
        The loads, the FOPF solution and the number of rejected draws.

    Raises:
        SampleDrawError: If every attempt is infeasible.
    """
    rng = sample_rng(config.seed, sample_id, LOAD_STREAM)
    spec = RopfSpec.full(net)
    attempts = []

    def attempt() -> Optional[Tuple[Dict[int, float], OpfSolution]]:
        loads = perturb_loads(base, config.perturb, rng, config.global_scale)
        attempts.append(loads)
        sol = solve_opf(net, loads, spec, Method.FOPF)
        return (loads, sol) if sol.optimal else None

    retrying = Retrying(
        stop=stop_after_attempt(MAX_DRAWS_PER_SAMPLE),
        retry=retry_if_result(lambda x: x is None),
        after=partial(_log_redraw, net.name, sample_id),
        retry_error_callback=(lambda state: state.outcome.result()),  # type: ignore
    )
    result = retrying(attempt)
    if result is None:
        raise SampleDrawError(
            f"No feasible load profile for sample {sample_id} "
            f"after {MAX_DRAWS_PER_SAMPLE} draws"
        )
    loads, sol = result
    return loads, sol, len(attempts) - 1


def generate_sample(
    net: Network, base: LoadVector, config: GenerateConfig, sample_id: int
) -> Sample:
    """Draw, solve and label one sample."""
    loads, sol, redraws = draw_feasible(net, base, config, sample_id)
    line_labels, gen_labels = label_sample(net, sol, config.tau, config.eps_gen)
    return Sample(
        sample_id=sample_id,
        split=assign_split(config.seed, sample_id, config.split),
        loads_mw=loads,
        line_labels=line_labels,
        gen_labels=gen_labels,
        fopf_cost=float(sol.objective_cost),
        fopf_pg_mw=sol.pg_mw,
        fopf_theta_rad=sol.theta_rad,
        fopf_flow_mw=sol.flow_mw,
        fopf_solve_time_s=sol.solve_time_s if config.record_timing else 0.0,
        redraws=redraws,
    )


def generate(net: Network, config: GenerateConfig) -> Dataset:
    """Generate a labeled dataset.

    Raises:
        InfeasibleBaseCaseError: If FOPF fails at the base loads.
        SampleDrawError: If some sample never finds a feasible profile.
    """
    base = base_loads(net)
    check_loads(net, base, allow_negative=config.allow_negative_loads)
    base_solution = solve_opf(net, base, RopfSpec.full(net), Method.FOPF)
    if not base_solution.optimal:
        raise InfeasibleBaseCaseError(
            f"FOPF at the base loads of {net.name} ended {base_solution.status.value}"
        )

    task = partial(generate_sample, net, base, config)
    sample_ids = range(config.samples)
    if config.workers > 1:
        chunksize = max(1, config.samples // (4 * config.workers))
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            samples = list(pool.map(task, sample_ids, chunksize=chunksize))
    else:
        samples = [task(i) for i in sample_ids]

    redraws = sum(s.redraws for s in samples)
    warning = None
    if redraws > REDRAW_WARNING_FRACTION * config.samples:
        warning = f"{redraws} redraws for {config.samples} samples exceeds 10%"
        logger.warning("Dataset for %s: %s", net.name, warning)
    logger.info(
        "Generated %d samples for %s (%d redraws)", len(samples), net.name, redraws
    )
    return Dataset(
        network=net,
        tau=config.tau,
        eps_gen=config.eps_gen,
        perturb=config.perturb,
        seed=config.seed,
        split_fractions=config.split,
        samples=samples,
        global_scale=config.global_scale,
        redraws=redraws,
        warning=warning,
    )


def sample_solution(net: Network, sample: Sample) -> OpfSolution:
    """Rebuild the stored FOPF solution of a sample."""
    return OpfSolution(
        method=Method.FOPF,
        status=LpStatus.OPTIMAL,
        pg_mw=dict(sample.fopf_pg_mw),
        theta_rad=dict(sample.fopf_theta_rad),
        flow_mw=dict(sample.fopf_flow_mw),
        objective_cost=sample.fopf_cost,
        solve_time_s=sample.fopf_solve_time_s,
    )


def _keyed(values: Dict[int, object]) -> Dict[str, object]:
    return {str(k): v for k, v in sorted(values.items())}


def _sample_record(sample: Sample) -> dict:
    return {
        "record": "sample",
        "sample_id": sample.sample_id,
        "split": sample.split,
        "loads_mw": _keyed(sample.loads_mw),
        "line_labels": _keyed(sample.line_labels),
        "gen_labels": _keyed(sample.gen_labels),
        "fopf_cost": sample.fopf_cost,
        "fopf_pg_mw": _keyed(sample.fopf_pg_mw),
        "fopf_theta_rad": _keyed(sample.fopf_theta_rad),
        "fopf_flow_mw": _keyed(sample.fopf_flow_mw),
        "fopf_solve_time_s": sample.fopf_solve_time_s,
        "redraws": sample.redraws,
    }


def save_dataset(dataset: Dataset, path: Union[str, Path]) -> None:
    """Write the header and sample records."""
    header = {
        "record": "header",
        "format_version": DATASET_FORMAT_VERSION,
        "case_name": dataset.case_name,
        "tau": dataset.tau,
        "eps_gen": dataset.eps_gen,
        "perturb": dataset.perturb,
        "seed": dataset.seed,
        "split_fractions": list(dataset.split_fractions),
        "global_scale": dataset.global_scale,
        "n_samples": len(dataset.samples),
        "redraws": dataset.redraws,
        "warning": dataset.warning,
        "tool_version": dataset.tool_version,
        "case": serialize_case(dataset.network),
    }
    write_records(path, [header] + [_sample_record(s) for s in dataset.samples])
    log_run_event(RunEvent.ARTIFACT_WRITTEN, "dataset", str(path))


def load_dataset(path: Union[str, Path]) -> Dataset:
    """Read a dataset file.

    Raises:
        DatasetFormatError: If the file is not a version-1 dataset.
    """
    try:
        records = read_records(path)
    except (OSError, RecordFormatError) as err:
        raise DatasetFormatError(f"Cannot read dataset {path}: {err}")
    if not records or records[0].get("record") != "header":
        raise DatasetFormatError(f"Dataset {path} does not start with a header record")

    header = records[0]
    if header.get("format_version") != DATASET_FORMAT_VERSION:
        raise DatasetFormatError(
            f"Dataset {path} has format_version {header.get('format_version')!r}; "
            f"expected {DATASET_FORMAT_VERSION}"
        )
    try:
        network = parse_case(header["case"], allow_negative_loads=True)
        samples = [
            Sample.model_validate({k: v for k, v in r.items() if k != "record"})
            for r in records[1:]
        ]
        split_fractions = tuple(float(f) for f in header["split_fractions"])
        dataset = Dataset(
            network=network,
            tau=float(header["tau"]),
            eps_gen=float(header["eps_gen"]),
            perturb=float(header["perturb"]),
            seed=int(header["seed"]),
            split_fractions=split_fractions,  # type: ignore[arg-type]
            samples=samples,
            global_scale=bool(header.get("global_scale", False)),
            redraws=int(header.get("redraws", 0)),
            warning=header.get("warning"),
            tool_version=str(header.get("tool_version", "")),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise DatasetFormatError(f"Malformed dataset {path}: {err}")

    if len(samples) != header.get("n_samples", len(samples)):
        raise DatasetFormatError(
            f"Dataset {path} declares {header['n_samples']} samples but holds {len(samples)}"
        )
    logger.debug("Loaded %d samples of %s from %s", len(samples), dataset.case_name, path)
    return dataset
