# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""DC optimal power flow: full and reduced formulations, verification and fallback.

All four methods share one builder. A reduced problem drops the flow
variable and limit of every unmonitored line (its flow enters the nodal
balance as the angle expression) and replaces every fixed generator by the
constant P_max on the right-hand side.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from events import RunEvent, log_run_event
from grid import LoadVector, Network
from lp import LpProblem, LpStatus, solve_lp

logger = logging.getLogger(__name__)

BALANCE_TOL_MW = 1e-4
LIMIT_SLACK_MW = 1e-4


class OpfSpecError(ValueError):
    """A reduction spec or load vector does not match the network."""


class Method(str, Enum):
    """The benchmarked formulations."""

    FOPF = "fopf"
    ROPFL = "ropfl"
    ROPFG = "ropfg"
    ROPFLG = "ropflg"

    @property
    def reduces_lines(self) -> bool:
        """Whether the method monitors only predicted-congested lines."""
        return self in (Method.ROPFL, Method.ROPFLG)

    @property
    def fixes_generators(self) -> bool:
        """Whether the method pins predicted max-capacity generators."""
        return self in (Method.ROPFG, Method.ROPFLG)


@dataclass(frozen=True)
class RopfSpec:
    """Monitored line set X and the generators pinned at P_max (complement of Y)."""

    monitored_lines: FrozenSet[int]
    fixed_max_gens: FrozenSet[int] = frozenset()

    @classmethod
    def full(cls, net: Network) -> "RopfSpec":
        """The FOPF spec: every line monitored, no generator fixed."""
        return cls(frozenset(net.line_ids), frozenset())

    @classmethod
    def of(cls, monitored: Iterable[int], fixed: Iterable[int] = ()) -> "RopfSpec":
        """Build a spec from any iterables."""
        return cls(frozenset(monitored), frozenset(fixed))

    def infer_method(self, net: Network) -> Method:
        """The method tag this spec corresponds to."""
        all_lines = self.monitored_lines == frozenset(net.line_ids)
        if all_lines:
            return Method.ROPFG if self.fixed_max_gens else Method.FOPF
        return Method.ROPFLG if self.fixed_max_gens else Method.ROPFL


def method_spec(
    net: Network,
    method: Method,
    line_labels: Mapping[int, int],
    gen_labels: Mapping[int, int],
) -> RopfSpec:
    """The spec a method derives from predicted (or true) labels.

    FOPF ignores the labels; line reduction monitors lines labeled 1;
    generator fixing pins generators labeled 1 at P_max.
    """
    monitored = (
        [k for k in net.line_ids if line_labels[k]] if method.reduces_lines else net.line_ids
    )
    fixed = [g for g in net.gen_ids if gen_labels[g]] if method.fixes_generators else []
    return RopfSpec.of(monitored, fixed)


@dataclass(frozen=True)
class VariableIndex:
    """Where each physical quantity lives in the assembled LP."""

    gen_columns: Dict[int, int]
    angle_columns: Dict[int, int]
    flow_columns: Dict[int, int]
    flow_rows: Dict[int, int]
    balance_rows: Dict[int, int]
    objective_constant: float


@dataclass(frozen=True)
class VerificationReport:
    """Violations of the full model, as (record id, overshoot MW) pairs."""

    gen_bound_violations: List[Tuple[int, float]] = field(default_factory=list)
    line_limit_violations: List[Tuple[int, float]] = field(default_factory=list)
    balance_violations: List[Tuple[int, float]] = field(default_factory=list)
    solved: bool = True

    @property
    def feasible(self) -> bool:
        """True when the verified solution exists and violates nothing."""
        return self.solved and not (
            self.gen_bound_violations or self.line_limit_violations or self.balance_violations
        )

    @property
    def violation_count(self) -> int:
        """Total number of recorded violations."""
        return (
            len(self.gen_bound_violations)
            + len(self.line_limit_violations)
            + len(self.balance_violations)
        )


@dataclass(frozen=True)
class RejectedAttempt:
    """The reduced solve that a fallback replaced."""

    status: LpStatus
    objective_cost: Optional[float]
    solve_time_s: float
    build_time_s: float
    report: Optional[VerificationReport]


@dataclass(frozen=True)
class OpfSolution:
    """Dispatch, angles and flows of one OPF solve."""

    method: Method
    status: LpStatus
    pg_mw: Dict[int, float]
    theta_rad: Dict[int, float]
    flow_mw: Dict[int, float]
    objective_cost: Optional[float]
    solve_time_s: float
    build_time_s: float = 0.0
    recover_time_s: float = 0.0
    iterations: int = 0
    n_variables: int = 0
    n_constraints: int = 0
    fell_back: bool = False
    rejected: Optional[RejectedAttempt] = None

    @property
    def optimal(self) -> bool:
        """Whether the LP reached optimality."""
        return self.status == LpStatus.OPTIMAL

    @property
    def total_solve_time_s(self) -> float:
        """LP time including a rejected reduced attempt."""
        extra = self.rejected.solve_time_s if self.rejected is not None else 0.0
        return self.solve_time_s + extra


def check_loads(net: Network, loads: LoadVector, allow_negative: bool = False) -> None:
    """Ensure a load vector covers every bus exactly once.

    Raises:
        OpfSpecError: On missing or unknown buses, or negative demand.
    """
    expected = set(net.bus_ids)
    given = set(loads)
    if given != expected:
        missing = sorted(expected - given)
        unknown = sorted(given - expected)
        raise OpfSpecError(f"Load vector mismatch: missing buses {missing}, unknown {unknown}")
    if not allow_negative:
        negative = sorted(b for b, value in loads.items() if value < 0)
        if negative:
            raise OpfSpecError(f"Negative loads at buses {negative}")


def _check_spec(net: Network, spec: RopfSpec) -> None:
    unknown_lines = sorted(spec.monitored_lines - set(net.line_ids))
    unknown_gens = sorted(spec.fixed_max_gens - set(net.gen_ids))
    if unknown_lines or unknown_gens:
        raise OpfSpecError(
            f"Unknown ids in spec: lines {unknown_lines}, generators {unknown_gens}"
        )


def build_opf(
    net: Network, loads: LoadVector, spec: RopfSpec
) -> Tuple[LpProblem, VariableIndex]:
    """Assemble the (reduced) DC-OPF as an equality-form LP in per-unit.

    Columns: free generators, non-reference angles, monitored line flows.
    Rows: one flow definition per monitored line, then one nodal balance per bus.

    Raises:
        OpfSpecError: If the spec or loads reference unknown ids.
    """
    check_loads(net, loads, allow_negative=True)
    _check_spec(net, spec)

    base = net.base_mva
    gens = net.gen_map()
    lines = net.line_map()
    reference = net.reference_bus

    free_gens = [g for g in net.gen_ids if g not in spec.fixed_max_gens]
    angle_buses = [b for b in net.bus_ids if b != reference]
    monitored = [k for k in net.line_ids if k in spec.monitored_lines]

    gen_columns = {g: i for i, g in enumerate(free_gens)}
    offset = len(free_gens)
    angle_columns = {b: offset + i for i, b in enumerate(angle_buses)}
    offset += len(angle_buses)
    flow_columns = {k: offset + i for i, k in enumerate(monitored)}
    n_vars = offset + len(monitored)

    flow_rows = {k: i for i, k in enumerate(monitored)}
    balance_rows = {b: len(monitored) + i for i, b in enumerate(net.bus_ids)}
    n_rows = len(monitored) + len(balance_rows)

    cost = np.zeros(n_vars)
    lower = np.full(n_vars, -np.inf)
    upper = np.full(n_vars, np.inf)
    a_eq = np.zeros((n_rows, n_vars))
    b_eq = np.zeros(n_rows)

    for g, col in gen_columns.items():
        cost[col] = gens[g].cost_per_mwh * base
        lower[col] = gens[g].pmin_mw / base
        upper[col] = gens[g].pmax_mw / base
        a_eq[balance_rows[gens[g].bus], col] += 1.0

    def add_angle_term(row: int, bus: int, coefficient: float) -> None:
        if bus != reference:
            a_eq[row, angle_columns[bus]] += coefficient

    for k in net.line_ids:
        line = lines[k]
        susceptance = 1.0 / line.x_pu
        from_row, to_row = balance_rows[line.from_bus], balance_rows[line.to_bus]
        if k in flow_columns:
            col, row = flow_columns[k], flow_rows[k]
            lower[col], upper[col] = -line.rate_a_mw / base, line.rate_a_mw / base
            a_eq[row, col] = 1.0
            add_angle_term(row, line.from_bus, -susceptance)
            add_angle_term(row, line.to_bus, susceptance)
            a_eq[to_row, col] += 1.0
            a_eq[from_row, col] -= 1.0
        else:
            add_angle_term(to_row, line.from_bus, susceptance)
            add_angle_term(to_row, line.to_bus, -susceptance)
            add_angle_term(from_row, line.from_bus, -susceptance)
            add_angle_term(from_row, line.to_bus, susceptance)

    fixed_cost = 0.0
    for bus_id, row in balance_rows.items():
        b_eq[row] = loads[bus_id] / base
    for g in sorted(spec.fixed_max_gens):
        b_eq[balance_rows[gens[g].bus]] -= gens[g].pmax_mw / base
        fixed_cost += gens[g].cost_per_mwh * gens[g].pmax_mw

    problem = LpProblem(cost=cost, a_eq=a_eq, b_eq=b_eq, lower=lower, upper=upper)
    index = VariableIndex(
        gen_columns=gen_columns,
        angle_columns=angle_columns,
        flow_columns=flow_columns,
        flow_rows=flow_rows,
        balance_rows=balance_rows,
        objective_constant=fixed_cost,
    )
    return problem, index


def recover_flows(net: Network, theta_rad: Dict[int, float]) -> Dict[int, float]:
    """Line flows in MW from bus angles: base_mva * (theta_f - theta_t) / x."""
    flows = {}
    for line in sorted(net.lines, key=lambda ln: ln.id):
        angle_difference = theta_rad[line.from_bus] - theta_rad[line.to_bus]
        flows[line.id] = net.base_mva * angle_difference / line.x_pu
    return flows


def solve_opf(
    net: Network, loads: LoadVector, spec: RopfSpec, method: Optional[Method] = None
) -> OpfSolution:
    """Build and solve one formulation.

    solve_time_s covers the LP solve only; build and flow recovery are timed
    separately. Flows of unmonitored lines are recovered from the angles.
    """
    method = method or spec.infer_method(net)

    started = time.perf_counter()
    problem, index = build_opf(net, loads, spec)
    built = time.perf_counter()
    outcome = solve_lp(problem)
    solved = time.perf_counter()

    common = dict(
        method=method,
        status=outcome.status,
        solve_time_s=solved - built,
        build_time_s=built - started,
        iterations=outcome.iterations,
        n_variables=problem.n_vars,
        n_constraints=problem.n_rows,
    )
    if outcome.status != LpStatus.OPTIMAL or outcome.x is None:
        logger.debug("%s solve ended %s", method.value, outcome.status.value)
        return OpfSolution(pg_mw={}, theta_rad={}, flow_mw={}, objective_cost=None, **common)

    x, base = outcome.x, net.base_mva
    gens = net.gen_map()
    pg_mw = {
        g: float(x[index.gen_columns[g]] * base) if g in index.gen_columns else gens[g].pmax_mw
        for g in net.gen_ids
    }
    theta_rad = {
        b: float(x[index.angle_columns[b]]) if b in index.angle_columns else 0.0
        for b in net.bus_ids
    }

    recover_started = time.perf_counter()
    recovered = recover_flows(net, theta_rad)
    flow_mw = {
        k: float(x[index.flow_columns[k]] * base) if k in index.flow_columns else recovered[k]
        for k in net.line_ids
    }
    recover_time = time.perf_counter() - recover_started

    return OpfSolution(
        pg_mw=pg_mw,
        theta_rad=theta_rad,
        flow_mw=flow_mw,
        objective_cost=float(outcome.objective) + index.objective_constant,
        recover_time_s=recover_time,
        **common,
    )


def verify_solution(net: Network, loads: LoadVector, sol: OpfSolution) -> VerificationReport:
    """Check a solution against the FULL model, whatever spec produced it.

    Overshoots of at most 1e-4 MW are treated as numerical slack.
    """
    if not sol.optimal:
        return VerificationReport(solved=False)

    gens = net.gen_map()
    gen_violations = []
    for g in net.gen_ids:
        pg = sol.pg_mw[g]
        overshoot = max(gens[g].pmin_mw - pg, pg - gens[g].pmax_mw)
        if overshoot > LIMIT_SLACK_MW:
            gen_violations.append((g, overshoot))

    flows = recover_flows(net, sol.theta_rad)
    lines = net.line_map()
    line_violations = []
    for k in net.line_ids:
        overshoot = abs(flows[k]) - lines[k].rate_a_mw
        if overshoot > LIMIT_SLACK_MW:
            line_violations.append((k, overshoot))

    balance_violations = []
    gens_at, outgoing, incoming = net.gens_at_bus(), net.lines_from_bus(), net.lines_to_bus()
    for n in net.bus_ids:
        residual = (
            sum(sol.pg_mw[g] for g in gens_at[n])
            + sum(flows[k] for k in incoming[n])
            - sum(flows[k] for k in outgoing[n])
            - loads[n]
        )
        if abs(residual) > BALANCE_TOL_MW:
            balance_violations.append((n, abs(residual)))

    return VerificationReport(
        gen_bound_violations=gen_violations,
        line_limit_violations=line_violations,
        balance_violations=balance_violations,
    )


def solve_with_fallback(
    net: Network, loads: LoadVector, spec: RopfSpec, method: Optional[Method] = None
) -> Tuple[OpfSolution, VerificationReport]:
    """Solve a reduced problem and fall back to FOPF when it fails verification.

    The returned report always describes the returned solution. A solver
    failure of the reduced problem counts as a verification failure.
    """
    method = method or spec.infer_method(net)
    full_spec = RopfSpec.full(net)

    reduced = solve_opf(net, loads, spec, method)
    report = verify_solution(net, loads, reduced)
    if report.feasible or spec == full_spec:
        return reduced, report

    reason = (
        f"status {reduced.status.value}"
        if not reduced.optimal
        else f"{report.violation_count} violations"
    )
    log_run_event(RunEvent.OPF_FALLBACK, method.value, reason)

    full = solve_opf(net, loads, full_spec, method)
    full_report = verify_solution(net, loads, full)
    rejected = RejectedAttempt(
        status=reduced.status,
        objective_cost=reduced.objective_cost,
        solve_time_s=reduced.solve_time_s,
        build_time_s=reduced.build_time_s,
        report=report if reduced.optimal else None,
    )
    return replace(full, fell_back=True, rejected=rejected), full_report


def solution_to_dict(sol: OpfSolution, report: Optional[VerificationReport] = None) -> dict:
    """JSON-ready view of a solution (and its verification)."""
    result = {
        "method": sol.method.value,
        "status": sol.status.value,
        "objective_cost": sol.objective_cost,
        "fell_back": sol.fell_back,
        "solve_time_s": sol.solve_time_s,
        "build_time_s": sol.build_time_s,
        "recover_time_s": sol.recover_time_s,
        "iterations": sol.iterations,
        "n_variables": sol.n_variables,
        "n_constraints": sol.n_constraints,
        "pg_mw": {str(k): v for k, v in sol.pg_mw.items()},
        "theta_rad": {str(k): v for k, v in sol.theta_rad.items()},
        "flow_mw": {str(k): v for k, v in sol.flow_mw.items()},
    }
    if sol.rejected is not None:
        result["rejected"] = {
            "status": sol.rejected.status.value,
            "objective_cost": sol.rejected.objective_cost,
            "solve_time_s": sol.rejected.solve_time_s,
        }
    if report is not None:
        result["verification"] = {
            "feasible": report.feasible,
            "gen_bound_violations": [list(v) for v in report.gen_bound_violations],
            "line_limit_violations": [list(v) for v in report.line_limit_violations],
            "balance_violations": [list(v) for v in report.balance_violations],
        }
    return result
