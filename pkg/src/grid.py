# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""Grid data model, case-file documents and network validation.

A case file is a version-1 YAML document::

    version: 1
    name: two_bus
    base_mva: 100.0
    buses:
    - {id: 1, load_mw: 0.0, is_reference: true}
    generators:
    - {id: 1, bus: 1, pmin_mw: 0.0, pmax_mw: 100.0, cost_per_mwh: 10.0, ramp_mw_per_min: 2.0}
    lines:
    - {id: 1, from: 1, to: 2, x_pu: 0.1, rate_a_mw: 100.0}

Power is stored in MW; the OPF layer converts to per-unit on ``base_mva``.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Tuple, Union

import networkx as nx
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

logger = logging.getLogger(__name__)

CASE_FORMAT_VERSION = 1
CASES_DIR = Path(__file__).parent / "cases"

# Bus id -> MW demand (d_n). Kept as a plain mapping so callers can build one
# from any source; opf.check_loads enforces coverage.
LoadVector = Mapping[int, float]


class CaseError(ValueError):
    """Base class for case document errors."""


class CaseFormatError(CaseError):
    """The document could not be read as a version-1 case."""


class CaseValidationError(CaseError):
    """The document parsed but the network violates its invariants."""

    def __init__(self, violations: List["Violation"]):
        self.violations = list(violations)
        super().__init__("Invalid case: " + "; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class Violation:
    """A single violated network invariant."""

    record: str
    message: str

    def __str__(self) -> str:
        return f"{self.record}: {self.message}"


class Bus(BaseModel):
    """A bus with its demand."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: int
    load_mw: float
    is_reference: bool


class Generator(BaseModel):
    """A dispatchable generating unit."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: int
    bus: int
    pmin_mw: float
    pmax_mw: float
    cost_per_mwh: float
    ramp_mw_per_min: float


class Line(BaseModel):
    """A transmission line in the DC approximation."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    id: int
    from_bus: int = Field(alias="from")
    to_bus: int = Field(alias="to")
    x_pu: float
    rate_a_mw: float


class Network(BaseModel):
    """Static grid description.

    Records keep their document order; every index helper below returns ids
    sorted ascending, which is the ordering all numerical modules rely on.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    base_mva: float = 100.0
    buses: Tuple[Bus, ...]
    generators: Tuple[Generator, ...] = ()
    lines: Tuple[Line, ...] = ()

    @property
    def bus_ids(self) -> List[int]:
        """Bus ids in ascending order."""
        return sorted(bus.id for bus in self.buses)

    @property
    def gen_ids(self) -> List[int]:
        """Generator ids in ascending order."""
        return sorted(gen.id for gen in self.generators)

    @property
    def line_ids(self) -> List[int]:
        """Line ids in ascending order."""
        return sorted(line.id for line in self.lines)

    @property
    def reference_bus(self) -> int:
        """Id of the (single) reference bus."""
        return next(bus.id for bus in self.buses if bus.is_reference)

    def bus_map(self) -> Dict[int, Bus]:
        """Buses keyed by id."""
        return {bus.id: bus for bus in self.buses}

    def gen_map(self) -> Dict[int, Generator]:
        """Generators keyed by id."""
        return {gen.id: gen for gen in self.generators}

    def line_map(self) -> Dict[int, Line]:
        """Lines keyed by id."""
        return {line.id: line for line in self.lines}

    def gens_at_bus(self) -> Dict[int, List[int]]:
        """G(n): generator ids attached to each bus."""
        result: Dict[int, List[int]] = {bus_id: [] for bus_id in self.bus_ids}
        for gen in sorted(self.generators, key=lambda g: g.id):
            result[gen.bus].append(gen.id)
        return result

    def lines_from_bus(self) -> Dict[int, List[int]]:
        """K(n+): lines whose sending end is the bus."""
        result: Dict[int, List[int]] = {bus_id: [] for bus_id in self.bus_ids}
        for line in sorted(self.lines, key=lambda ln: ln.id):
            result[line.from_bus].append(line.id)
        return result

    def lines_to_bus(self) -> Dict[int, List[int]]:
        """K(n-): lines whose receiving end is the bus."""
        result: Dict[int, List[int]] = {bus_id: [] for bus_id in self.bus_ids}
        for line in sorted(self.lines, key=lambda ln: ln.id):
            result[line.to_bus].append(line.id)
        return result

    def total_load_mw(self) -> float:
        """Sum of the base-case bus loads."""
        return sum(bus.load_mw for bus in self.buses)


def _duplicates(ids: List[int]) -> List[int]:
    seen, dups = set(), set()
    for item in ids:
        (dups if item in seen else seen).add(item)
    return sorted(dups)


def validate(net: Network, allow_negative_loads: bool = False) -> List[Violation]:
    """Check every network invariant.

    Args:
        net: The network to check.
        allow_negative_loads: Accept buses with negative demand.

    Returns:
        One Violation per violated invariant and record; empty when valid.
    """
    report: List[Violation] = []

    if net.base_mva <= 0:
        report.append(Violation("network", f"base_mva must be positive, got {net.base_mva}"))

    bus_ids = [bus.id for bus in net.buses]
    if not bus_ids:
        report.append(Violation("network", "no buses defined"))
    for dup in _duplicates(bus_ids):
        report.append(Violation(f"bus {dup}", "duplicate bus id"))

    references = sorted(bus.id for bus in net.buses if bus.is_reference)
    if bus_ids and not references:
        report.append(Violation("network", "no reference bus"))
    elif len(references) > 1:
        ids = ", ".join(str(r) for r in references)
        report.append(Violation("network", f"multiple reference buses: {ids}"))

    if not allow_negative_loads:
        for bus in net.buses:
            if bus.load_mw < 0:
                report.append(Violation(f"bus {bus.id}", f"negative load {bus.load_mw} MW"))

    known_buses = set(bus_ids)
    for dup in _duplicates([gen.id for gen in net.generators]):
        report.append(Violation(f"generator {dup}", "duplicate generator id"))
    for gen in net.generators:
        record = f"generator {gen.id}"
        if gen.bus not in known_buses:
            report.append(Violation(record, f"unknown bus {gen.bus}"))
        if gen.pmin_mw < 0:
            report.append(Violation(record, f"pmin_mw {gen.pmin_mw} is negative"))
        if gen.pmin_mw > gen.pmax_mw:
            report.append(
                Violation(record, f"pmin_mw {gen.pmin_mw} exceeds pmax_mw {gen.pmax_mw}")
            )
        if gen.cost_per_mwh < 0:
            report.append(Violation(record, f"cost_per_mwh {gen.cost_per_mwh} is negative"))
        if gen.ramp_mw_per_min < 0:
            report.append(
                Violation(record, f"ramp_mw_per_min {gen.ramp_mw_per_min} is negative")
            )

    topology_ok = bool(bus_ids) and not _duplicates(bus_ids)
    for dup in _duplicates([line.id for line in net.lines]):
        report.append(Violation(f"line {dup}", "duplicate line id"))
    for line in net.lines:
        record = f"line {line.id}"
        missing = [b for b in (line.from_bus, line.to_bus) if b not in known_buses]
        if missing:
            topology_ok = False
            names = ", ".join(str(b) for b in missing)
            report.append(Violation(record, f"unknown endpoint bus {names}"))
        elif line.from_bus == line.to_bus:
            topology_ok = False
            report.append(Violation(record, f"both ends at bus {line.from_bus}"))
        if line.x_pu <= 0:
            report.append(Violation(record, f"x_pu must be positive, got {line.x_pu}"))
        if line.rate_a_mw <= 0:
            report.append(
                Violation(record, f"rate_a_mw must be positive, got {line.rate_a_mw}")
            )

    # Connectivity is only meaningful once every endpoint resolves.
    if topology_ok:
        islands = connected_islands(net)
        if len(islands) > 1:
            listing = " | ".join(",".join(str(b) for b in island) for island in islands)
            report.append(Violation("network", f"disconnected into islands: {listing}"))

    return report


def connected_islands(net: Network) -> List[List[int]]:
    """Bus-id groups of the connected components, each sorted, ordered by smallest id."""
    graph = nx.Graph()
    graph.add_nodes_from(bus.id for bus in net.buses)
    graph.add_edges_from((line.from_bus, line.to_bus) for line in net.lines)
    return sorted(sorted(component) for component in nx.connected_components(graph))


def format_validation_error(error: ValidationError) -> str:
    """Flatten a pydantic error into one line naming the offending records."""
    messages = []
    for err in error.errors():
        location = ""
        for part in err["loc"]:
            location += f"[{part}]" if isinstance(part, int) else f".{part}"
        messages.append(f"{location.lstrip('.')}: {err['msg'].removeprefix('Value error, ')}")
    return ", ".join(messages)


def parse_case(text: str, allow_negative_loads: bool = False) -> Network:
    """Parse and validate a version-1 case document.

    Raises:
        CaseFormatError: On YAML syntax errors (with line/column), a version
            mismatch, unknown fields or wrongly typed values.
        CaseValidationError: When the network violates an invariant.
    """
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        problem = getattr(err, "problem", None) or str(err)
        if mark is not None:
            raise CaseFormatError(
                f"Syntax error at line {mark.line + 1}, column {mark.column + 1}: {problem}"
            )
        raise CaseFormatError(f"Syntax error: {problem}")

    if not isinstance(document, dict):
        raise CaseFormatError("Case document must be a mapping")

    fields = dict(document)
    version = fields.pop("version", None)
    if version != CASE_FORMAT_VERSION:
        raise CaseFormatError(
            f"Unsupported case version {version!r}; expected {CASE_FORMAT_VERSION}"
        )

    try:
        net = Network.model_validate(fields)
    except ValidationError as ve:
        raise CaseFormatError(f"Invalid case document: {format_validation_error(ve)}")

    violations = validate(net, allow_negative_loads=allow_negative_loads)
    if violations:
        raise CaseValidationError(violations)
    return net


def serialize_case(net: Network) -> str:
    """Render a network as a version-1 case document.

    Floats are written with their shortest round-trip representation, so
    ``parse_case(serialize_case(net)) == net`` and the output is byte-stable.
    """
    document = {"version": CASE_FORMAT_VERSION, **net.model_dump(mode="json", by_alias=True)}
    return yaml.safe_dump(document, sort_keys=False, default_flow_style=None, width=1000)


def load_case(source: Union[str, Path], allow_negative_loads: bool = False) -> Network:
    """Load a case from a path or the name of a bundled case.

    Raises:
        CaseError: If neither a file nor a bundled case matches.
    """
    path = Path(source)
    if not path.is_file():
        bundled = CASES_DIR / f"{source}.yaml"
        if not bundled.is_file():
            known = ", ".join(sorted(p.stem for p in CASES_DIR.glob("*.yaml")))
            raise CaseError(f"No case file or bundled case named '{source}' (bundled: {known})")
        path = bundled
    logger.debug("Loading case from %s", path)
    return parse_case(path.read_text(), allow_negative_loads=allow_negative_loads)


def dump_case(net: Network, path: Union[str, Path]) -> None:
    """Write a case document."""
    Path(path).write_text(serialize_case(net))


def base_loads(net: Network) -> Dict[int, float]:
    """The network's own bus loads as a LoadVector."""
    return {bus.id: bus.load_mw for bus in sorted(net.buses, key=lambda b: b.id)}


def read_loads(path: Union[str, Path]) -> Dict[int, float]:
    """Read a ``{loads_mw: {bus_id: MW}}`` document.

    Raises:
        CaseFormatError: If the document is not such a mapping.
    """
    try:
        document = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as err:
        raise CaseFormatError(f"Syntax error in loads file {path}: {err}")
    loads = document.get("loads_mw") if isinstance(document, dict) else None
    if not isinstance(loads, dict):
        raise CaseFormatError(f"Loads file {path} must contain a 'loads_mw' mapping")
    try:
        return {int(bus_id): float(value) for bus_id, value in loads.items()}
    except (TypeError, ValueError):
        raise CaseFormatError(f"Loads file {path} must map integer bus ids to numbers")


def write_loads(loads: LoadVector, path: Union[str, Path]) -> None:
    """Write a loads document readable by read_loads."""
    document = {"loads_mw": {int(k): float(v) for k, v in sorted(loads.items())}}
    Path(path).write_text(yaml.safe_dump(document, sort_keys=False))

