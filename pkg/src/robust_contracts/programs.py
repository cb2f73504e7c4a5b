"""Linear programs that cross-check the closed-form contract solvers.

Three program families live here:

* the discretized randomized-contract design LP over explicit payment
  tables (``build_robust_contract_lp``), whose optimum approaches the
  closed-form value as the payment grid refines and never exceeds it;
* its inner worst-case problem for a fixed contract mixture
  (``worst_case_value_lp``), which must agree with the outer LP at the
  optimal mixture by strong duality;
* the slope-space lower-bound programs over an allocation/payment pair
  (``solve_menu_lp``) and over a monotone allocation alone
  (``solve_monotone_lp``), whose optima coincide: the pairwise incentive
  constraints pin the payments, leaving cumulative constraints on the
  allocation (the classic one-dimensional reduction).
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import RandomizedLinearContract, Technology
from .simplex import LpProblem, LpSizeError, simplex_solve

__all__ = [
    "enumerate_contracts",
    "contract_floor_values",
    "build_robust_contract_lp",
    "worst_case_value_lp",
    "payment_grid",
    "floor_on_grid",
    "cdf_mass",
    "solve_menu_lp",
    "solve_monotone_lp",
    "solve_payoff_floor",
]

MAX_CONTRACTS = 4096


def enumerate_contracts(outcomes: Sequence[float], payments: Sequence[float],
                        max_contracts: int = MAX_CONTRACTS) -> list:
    """All payment tables on ``outcomes`` with entries from ``payments``,
    as tuples aligned with the outcome order.  Deterministic order."""
    outcomes = list(outcomes)
    payments = list(payments)
    count = len(payments) ** len(outcomes)
    if count > max_contracts:
        raise LpSizeError(
            f"{count} contracts exceed the enumeration limit {max_contracts}"
        )
    return list(itertools.product(payments, repeat=len(outcomes)))


def _action_matrix(technology: Technology, outcomes: Sequence[float]):
    """Per-action probability rows over the outcome grid; the grid must cover
    every support point of the known distributions."""
    index = {float(y): k for k, y in enumerate(outcomes)}
    q = np.zeros((len(technology.actions), len(outcomes)))
    costs = np.empty(len(technology.actions))
    for i, a in enumerate(technology.actions):
        costs[i] = a.cost
        for y, p in a.dist.support:
            if y not in index:
                raise ValueError(
                    f"outcome grid {list(outcomes)} does not cover support point {y}"
                )
            q[i, index[y]] = p
    return q, costs


def contract_floor_values(technology: Technology, outcomes: Sequence[float],
                          contracts: Sequence[Sequence[float]]) -> np.ndarray:
    """Guaranteed agent utility per contract: best known action against each
    payment table."""
    q, costs = _action_matrix(technology, outcomes)
    W = np.asarray(contracts, dtype=float)
    return (W @ q.T - costs[None, :]).max(axis=1)


def build_robust_contract_lp(
    technology: Technology,
    outcomes: Sequence[float],
    payments: Sequence[float],
    max_contracts: int = MAX_CONTRACTS,
) -> LpProblem:
    """The discretized contract-design LP over all payment tables.

    Variable layout (documented for consumers extracting the mixture):
    ``[mixture p (N)] [pair multipliers (N*(N-1), order (a,b), a != b)]
    [floor multipliers (N)] [normalization multipliers (N, free)]``
    where N is the number of enumerated contracts.  The mixture block of an
    optimal solution is the optimal randomized contract on this grid.
    """
    outcomes = [float(y) for y in outcomes]
    contracts = enumerate_contracts(outcomes, payments, max_contracts)
    floors = contract_floor_values(technology, outcomes, contracts)
    W = np.asarray(contracts, dtype=float)
    N, nY = W.shape
    ys = np.asarray(outcomes)

    n_pairs = N * (N - 1)
    n_vars = N + n_pairs + N + N
    rows_a = N * nY  # one block of nY rows per contract
    n_rows = rows_a + N + 1
    lhs = np.zeros((n_rows, n_vars))

    mu0 = N + n_pairs
    theta0 = mu0 + N
    for a in range(N):
        blk = slice(a * nY, (a + 1) * nY)
        lhs[blk, a] = -(ys - W[a])          # mixture coefficient
        lhs[blk, mu0 + a] = W[a]            # floor multiplier
        lhs[blk, theta0 + a] = 1.0          # normalization multiplier
        lhs[rows_a + a, mu0 + a] = -1.0
    col = N
    for a in range(N):
        blk_a = slice(a * nY, (a + 1) * nY)
        for b in range(N):
            if b == a:
                continue
            lhs[blk_a, col] = W[a]
            lhs[b * nY:(b + 1) * nY, col] = -W[a]
            lhs[rows_a + a, col] = -1.0
            lhs[rows_a + b, col] = 1.0
            col += 1
    lhs[-1, :N] = 1.0

    objective = np.zeros(n_vars)
    objective[mu0:theta0] = floors
    objective[theta0:] = 1.0

    relations = ("<=",) * (rows_a + N) + ("=",)
    rhs = np.zeros(n_rows)
    rhs[-1] = 1.0
    lower = np.zeros(n_vars)
    lower[theta0:] = -np.inf
    return LpProblem("max", objective, lhs, relations, rhs, lower, None)


def worst_case_value_lp(
    technology: Technology,
    outcomes: Sequence[float],
    payments: Sequence[float],
    mixture: Sequence[float],
    max_contracts: int = MAX_CONTRACTS,
    max_rows: int = 200_000,
    max_vars: int = 200_000,
) -> float:
    """Worst-case expected payoff of a fixed contract mixture.

    The adversary assigns each enumerated contract a response distribution
    over the outcome grid and a cost, subject to the cross-contract
    incentive constraints and the known-technology utility floor; equals the
    outer LP value at the optimal mixture by strong duality.
    """
    outcomes = [float(y) for y in outcomes]
    contracts = enumerate_contracts(outcomes, payments, max_contracts)
    floors = contract_floor_values(technology, outcomes, contracts)
    W = np.asarray(contracts, dtype=float)
    N, nY = W.shape
    ys = np.asarray(outcomes)
    p = np.asarray(mixture, dtype=float)
    if p.shape != (N,):
        raise ValueError(f"mixture must have one weight per contract ({N})")
    if abs(p.sum() - 1.0) > 1e-7 or (p < -1e-9).any():
        raise ValueError("mixture must be a probability vector")

    n_vars = N * nY + N  # response distributions, then costs
    cost0 = N * nY
    rows = []
    rels = []
    rhs = []
    for a in range(N):
        for b in range(N):
            if b == a:
                continue
            row = np.zeros(n_vars)
            row[a * nY:(a + 1) * nY] = W[a]
            row[b * nY:(b + 1) * nY] = -W[a]
            row[cost0 + a] = -1.0
            row[cost0 + b] = 1.0
            rows.append(row)
            rels.append(">=")
            rhs.append(0.0)
    for a in range(N):
        row = np.zeros(n_vars)
        row[a * nY:(a + 1) * nY] = W[a]
        row[cost0 + a] = -1.0
        rows.append(row)
        rels.append(">=")
        rhs.append(floors[a])
    for a in range(N):
        row = np.zeros(n_vars)
        row[a * nY:(a + 1) * nY] = 1.0
        rows.append(row)
        rels.append("=")
        rhs.append(1.0)

    objective = np.zeros(n_vars)
    for a in range(N):
        objective[a * nY:(a + 1) * nY] = p[a] * (ys - W[a])
    problem = LpProblem("min", objective, np.array(rows), tuple(rels), np.array(rhs))
    sol = simplex_solve(problem, max_rows=max_rows, max_vars=max_vars)
    if sol.status != "optimal":
        raise RuntimeError(f"inner worst-case LP came back {sol.status}")
    return sol.value


def payment_grid(critical_slope: float, outcomes: Sequence[float], size: int) -> list:
    """Payment levels containing 0 and ``critical_slope * y`` for each grid
    outcome, filled uniformly up to ``size`` levels.

    On a {0, 1} outcome grid this is the uniform grid on
    [0, critical_slope] including both endpoints, so refining the size keeps
    earlier levels when sizes share divisors.
    """
    if size < 2:
        raise ValueError("need at least two payment levels")
    top = critical_slope * max(float(y) for y in outcomes)
    levels = {0.0} | {critical_slope * float(y) for y in outcomes if critical_slope * float(y) <= top}
    for k in range(size):
        if len(levels) >= size:
            break
        levels.add(top * k / (size - 1))
    return sorted(levels)[:size]


def floor_on_grid(technology: Technology, alpha_grid: Sequence[float]) -> np.ndarray:
    """Agent utility floor of the known technology at each grid slope."""
    grid = np.asarray(alpha_grid, dtype=float)
    means = np.array([a.dist.mean for a in technology.actions])
    costs = np.array([a.cost for a in technology.actions])
    return (grid[:, None] * means[None, :] - costs[None, :]).max(axis=1)


def cdf_mass(cdf: RandomizedLinearContract, alpha_grid: Sequence[float]) -> np.ndarray:
    """Probability mass assigned to each grid point when the continuous CDF
    is discretized onto the grid (increments between consecutive points)."""
    grid = np.asarray(alpha_grid, dtype=float)
    vals = np.array([cdf.cdf(a) for a in grid])
    mass = np.diff(np.concatenate([[0.0], vals]))
    return mass


def _check_grid(alpha_grid, mass, floors):
    grid = np.asarray(alpha_grid, dtype=float)
    mass = np.asarray(mass, dtype=float)
    floors = np.asarray(floors, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("slope grid must be a nonempty vector")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("slope grid must be strictly increasing")
    if grid[0] < 0.0 or grid[-1] >= 1.0:
        raise ValueError("slope grid must lie inside [0, 1)")
    if mass.shape != grid.shape or floors.shape != grid.shape:
        raise ValueError("mass and floor vectors must match the grid")
    if (mass < -1e-12).any() or abs(mass.sum() - 1.0) > 1e-9:
        raise ValueError("mass must be a probability vector on the grid")
    return grid, np.clip(mass, 0.0, None), floors


def solve_menu_lp(alpha_grid, mass, floors, **limits) -> float:
    """Lower-bound program over a per-slope mean/cost menu.

    Variables are the response mean and cost at each grid slope; constraints
    are the pairwise incentive comparisons between all ordered grid pairs
    plus the utility floor at each slope.  Minimizes the expected payoff
    ``sum (1 - a) * mean(a) * mass(a)``.
    """
    grid, mass, floors = _check_grid(alpha_grid, mass, floors)
    n = grid.size
    n_vars = 2 * n  # means then costs
    rows = []
    rels = []
    rhs = []
    for k in range(n):
        for j in range(n):
            if j == k:
                continue
            row = np.zeros(n_vars)
            row[k] = grid[k]
            row[n + k] = -1.0
            row[j] = -grid[k]
            row[n + j] = 1.0
            rows.append(row)
            rels.append(">=")
            rhs.append(0.0)
    for k in range(n):
        row = np.zeros(n_vars)
        row[k] = grid[k]
        row[n + k] = -1.0
        rows.append(row)
        rels.append(">=")
        rhs.append(floors[k])
    objective = np.concatenate([(1.0 - grid) * mass, np.zeros(n)])
    problem = LpProblem("min", objective, np.array(rows), tuple(rels), np.array(rhs))
    sol = simplex_solve(problem, **limits)
    if sol.status != "optimal":
        raise RuntimeError(f"menu program came back {sol.status}")
    return sol.value


def solve_monotone_lp(alpha_grid, mass, floors, rule: str = "envelope", **limits) -> float:
    """Reduced lower-bound program over a monotone mean schedule alone.

    The cumulative constraint demands that the running integral of the means
    reaches the utility floor at every grid slope.  ``rule`` selects the
    discretization of that integral:

    * ``"envelope"`` (default): the exact utility implied by the pairwise
      program on the same grid (head term ``grid[0] * e[0]``, then
      right-endpoint increments), making this program equal the menu program
      on every grid;
    * ``"trapezoid"``: second-order quadrature, a tighter (larger) program
      that only matches in the fine-grid limit.
    """
    grid, mass, floors = _check_grid(alpha_grid, mass, floors)
    if rule not in ("envelope", "trapezoid"):
        raise ValueError(f"unknown integral rule {rule!r}")
    n = grid.size
    rows = []
    rels = []
    rhs = []
    for k in range(n - 1):
        row = np.zeros(n)
        row[k + 1] = 1.0
        row[k] = -1.0
        rows.append(row)
        rels.append(">=")
        rhs.append(0.0)
    steps = np.diff(grid)
    for k in range(n):
        row = np.zeros(n)
        if rule == "envelope":
            row[0] = grid[0]
            row[1:k + 1] = steps[:k]
        else:
            row[0] = grid[0]  # treat the mean as constant below the grid
            if k:
                row[:k] += 0.5 * steps[:k]
                row[1:k + 1] += 0.5 * steps[:k]
        rows.append(row)
        rels.append(">=")
        rhs.append(floors[k])
    objective = (1.0 - grid) * mass
    problem = LpProblem("min", objective, np.array(rows), tuple(rels), np.array(rhs))
    sol = simplex_solve(problem, **limits)
    if sol.status != "optimal":
        raise RuntimeError(f"monotone program came back {sol.status}")
    return sol.value


def solve_payoff_floor(alpha_grid, mass, floors, rule: str = "envelope", **limits) -> tuple:
    """Both lower-bound programs as ``(menu value, monotone value)``.

    With the default integral rule the two coincide up to solver tolerance.
    """
    v1 = solve_menu_lp(alpha_grid, mass, floors, **limits)
    v2 = solve_monotone_lp(alpha_grid, mass, floors, rule=rule, **limits)
    return v1, v2
