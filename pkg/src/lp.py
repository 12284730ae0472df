# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""Dense bounded-variable revised simplex.

Solves ``min c'x  s.t.  A_eq x = b_eq,  lower <= x <= upper`` where bounds may
be infinite. Phase 1 starts from an all-artificial basis; Phase 2 optimizes
the real objective with artificials pinned at zero. Bland's smallest-index
rule picks both the entering and the leaving variable, so the pivot sequence
(and therefore the returned vertex) is a pure function of the input.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-7
OPTIMALITY_TOL = 1e-9
PIVOT_TOL = 1e-10
RATIO_TIE_TOL = 1e-12


class LpStatus(str, Enum):
    """Terminal states of a solve."""

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


class LpDimensionError(ValueError):
    """Problem arrays have inconsistent shapes or crossed bounds."""


@dataclass(frozen=True)
class LpProblem:
    """An LP in equality form with variable bounds."""

    cost: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=float).reshape(-1)
        n = cost.shape[0]
        a_eq = np.asarray(self.a_eq, dtype=float)
        if a_eq.size == 0:
            a_eq = a_eq.reshape(-1, n) if a_eq.ndim == 2 else np.zeros((0, n))
        b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)

        if a_eq.ndim != 2 or a_eq.shape[1] != n:
            raise LpDimensionError(f"a_eq has shape {a_eq.shape}; expected (m, {n})")
        if b_eq.shape[0] != a_eq.shape[0]:
            raise LpDimensionError(f"b_eq has length {b_eq.shape[0]}; expected {a_eq.shape[0]}")
        if lower.shape[0] != n or upper.shape[0] != n:
            raise LpDimensionError(f"bounds must have length {n}")
        if np.any(lower > upper):
            bad = int(np.flatnonzero(lower > upper)[0])
            raise LpDimensionError(f"variable {bad}: lower {lower[bad]} > upper {upper[bad]}")
        if np.any(np.isposinf(lower)) or np.any(np.isneginf(upper)):
            raise LpDimensionError("lower bounds cannot be +inf nor upper bounds -inf")

        for name, value in (
            ("cost", cost),
            ("a_eq", a_eq),
            ("b_eq", b_eq),
            ("lower", lower),
            ("upper", upper),
        ):
            object.__setattr__(self, name, value)

    @property
    def n_vars(self) -> int:
        """Number of structural variables."""
        return self.cost.shape[0]

    @property
    def n_rows(self) -> int:
        """Number of equality constraints."""
        return self.a_eq.shape[0]


@dataclass(frozen=True)
class LpOutcome:
    """Result of solve_lp; x and objective are set only when optimal."""

    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0
    phase1_iterations: int = field(default=0, compare=False)


# Nonbasic position markers.
_BASIC, _AT_LOWER, _AT_UPPER, _AT_ZERO = 0, 1, 2, 3


def _solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if rhs.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.solve(matrix, rhs)


class _Tableau:
    """Working state shared by both phases."""

    def __init__(self, a: np.ndarray, b: np.ndarray, lower: np.ndarray, upper: np.ndarray):
        self.a = a
        self.b = b
        self.lower = lower
        self.upper = upper
        self.x = np.zeros(a.shape[1])
        self.state = np.full(a.shape[1], _AT_ZERO, dtype=int)
        self.basis: List[int] = []

    def place_nonbasic(self, j: int) -> None:
        """Put nonbasic variable j on its finite bound, or zero when free."""
        if np.isfinite(self.lower[j]):
            self.x[j], self.state[j] = self.lower[j], _AT_LOWER
        elif np.isfinite(self.upper[j]):
            self.x[j], self.state[j] = self.upper[j], _AT_UPPER
        else:
            self.x[j], self.state[j] = 0.0, _AT_ZERO

    def basis_matrix(self) -> np.ndarray:
        return self.a[:, self.basis]

    def refresh_basic_values(self) -> None:
        """Recompute x_B = B^-1 (b - A_N x_N) from the nonbasic values."""
        x_nonbasic = self.x.copy()
        x_nonbasic[self.basis] = 0.0
        self.x[self.basis] = _solve(self.basis_matrix(), self.b - self.a @ x_nonbasic)

    def _entering(self, reduced: np.ndarray) -> Tuple[int, int]:
        for j in range(self.a.shape[1]):
            state = self.state[j]
            if state == _BASIC or self.lower[j] == self.upper[j]:
                continue
            if state == _AT_LOWER and reduced[j] < -OPTIMALITY_TOL:
                return j, 1
            if state == _AT_UPPER and reduced[j] > OPTIMALITY_TOL:
                return j, -1
            if state == _AT_ZERO and abs(reduced[j]) > OPTIMALITY_TOL:
                return j, -1 if reduced[j] > 0 else 1
        return -1, 0

    def _leaving(self, column: np.ndarray, direction: int) -> Tuple[float, int, int]:
        """Bland ratio test; returns (step, basis position, bound hit)."""
        best_step, best_pos, best_bound = np.inf, -1, _AT_LOWER
        for pos, var in enumerate(self.basis):
            rate = -direction * column[pos]
            if rate < -PIVOT_TOL and np.isfinite(self.lower[var]):
                step, bound = (self.x[var] - self.lower[var]) / -rate, _AT_LOWER
            elif rate > PIVOT_TOL and np.isfinite(self.upper[var]):
                step, bound = (self.upper[var] - self.x[var]) / rate, _AT_UPPER
            else:
                continue
            step = max(step, 0.0)
            if step < best_step - RATIO_TIE_TOL or (
                step <= best_step + RATIO_TIE_TOL and var < self.basis[best_pos]
            ):
                best_step, best_pos, best_bound = step, pos, bound
        return best_step, best_pos, best_bound

    def iterate(self, cost: np.ndarray, max_iterations: int) -> Tuple[LpStatus, int]:
        """Run simplex pivots until optimal, unbounded or the cap is hit."""
        for iteration in range(max_iterations):
            self.refresh_basic_values()
            basis = self.basis_matrix()
            duals = _solve(basis.T, cost[self.basis])
            reduced = cost - self.a.T @ duals

            entering, direction = self._entering(reduced)
            if entering < 0:
                return LpStatus.OPTIMAL, iteration

            column = _solve(basis, self.a[:, entering])
            step, pos, bound = self._leaving(column, direction)
            flip = self.upper[entering] - self.lower[entering]

            if not np.isfinite(step) and not np.isfinite(flip):
                return LpStatus.UNBOUNDED, iteration + 1

            if flip <= step:
                self.x[entering] += direction * flip
                self.state[entering] = _AT_UPPER if direction > 0 else _AT_LOWER
                continue

            leaving = self.basis[pos]
            self.x[entering] += direction * step
            self.state[entering] = _BASIC
            self.basis[pos] = entering
            self.x[leaving] = self.lower[leaving] if bound == _AT_LOWER else self.upper[leaving]
            self.state[leaving] = bound
        return LpStatus.ITERATION_LIMIT, max_iterations

    def drive_out_artificials(self, first_artificial: int) -> None:
        """Pivot zero-valued artificials out of the basis wherever a structural column can.

        Rows where no structural column has a nonzero entry are redundant;
        their artificial stays basic, pinned at zero by its bounds.
        """
        for pos in range(len(self.basis)):
            if self.basis[pos] < first_artificial:
                continue
            inverse_row = _solve(self.basis_matrix().T, np.eye(len(self.basis))[pos])
            row = inverse_row @ self.a[:, :first_artificial]
            for j in range(first_artificial):
                if self.state[j] != _BASIC and abs(row[j]) > 1e-9:
                    self.state[self.basis[pos]] = _AT_LOWER
                    self.basis[pos] = j
                    self.state[j] = _BASIC
                    break


def default_iteration_cap(problem: LpProblem) -> int:
    """Pivot budget per phase."""
    return 50 * (problem.n_rows + problem.n_vars) + 100


def solve_lp(problem: LpProblem, max_iterations: Optional[int] = None) -> LpOutcome:
    """Solve an LP with the bounded revised simplex method.

    Args:
        problem: The LP to solve.
        max_iterations: Pivot cap per phase; defaults to default_iteration_cap.

    Returns:
        An LpOutcome. Infeasible and unbounded problems are reported through
        the status, never raised.
    """
    cap = max_iterations or default_iteration_cap(problem)
    n, m = problem.n_vars, problem.n_rows

    tableau = _Tableau(
        np.zeros((m, n + m)),
        problem.b_eq,
        np.concatenate([problem.lower, np.zeros(m)]),
        np.concatenate([problem.upper, np.full(m, np.inf)]),
    )
    tableau.a[:, :n] = problem.a_eq
    for j in range(n):
        tableau.place_nonbasic(j)

    residual = problem.b_eq - problem.a_eq @ tableau.x[:n]
    signs = np.where(residual >= 0, 1.0, -1.0)
    tableau.a[:, n:] = np.diag(signs)
    tableau.x[n:] = np.abs(residual)
    tableau.basis = list(range(n, n + m))
    tableau.state[n:] = _BASIC

    phase1_cost = np.concatenate([np.zeros(n), np.ones(m)])
    status, phase1_iterations = tableau.iterate(phase1_cost, cap)
    if status == LpStatus.ITERATION_LIMIT:
        logger.warning("Phase 1 hit the iteration cap of %d", cap)
        return LpOutcome(LpStatus.ITERATION_LIMIT, iterations=phase1_iterations)

    tableau.refresh_basic_values()
    infeasibility = float(np.sum(tableau.x[n:]))
    scale = max(1.0, float(np.max(np.abs(problem.b_eq), initial=0.0)))
    if infeasibility > FEASIBILITY_TOL * scale:
        logger.debug("Phase 1 ended with infeasibility %.3e", infeasibility)
        return LpOutcome(
            LpStatus.INFEASIBLE,
            iterations=phase1_iterations,
            phase1_iterations=phase1_iterations,
        )

    tableau.drive_out_artificials(n)
    tableau.upper[n:] = 0.0
    for j in range(n, n + m):
        if tableau.state[j] != _BASIC:
            tableau.x[j], tableau.state[j] = 0.0, _AT_LOWER

    phase2_cost = np.concatenate([problem.cost, np.zeros(m)])
    status, phase2_iterations = tableau.iterate(phase2_cost, cap)
    iterations = phase1_iterations + phase2_iterations
    if status != LpStatus.OPTIMAL:
        return LpOutcome(status, iterations=iterations, phase1_iterations=phase1_iterations)

    tableau.refresh_basic_values()
    x = np.clip(tableau.x[:n], problem.lower, problem.upper)
    return LpOutcome(
        LpStatus.OPTIMAL,
        x=x,
        objective=float(problem.cost @ x),
        iterations=iterations,
        phase1_iterations=phase1_iterations,
    )
