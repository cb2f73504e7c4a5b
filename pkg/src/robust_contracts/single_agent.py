"""Optimal randomized and deterministic linear contracts for a single agent.

The randomized optimum has a closed form: draw the slope from the
log-shaped CDF supported on ``[0, a*]``, where the critical slope ``a*``
maximizes the ratio of the agent's guaranteed utility to ``-ln(1 - a)``.
Each known action contributes a single-peaked ratio curve whose peak solves
``a + (1 - a) ln(1 - a) = cost / mean``, so the global optimum is found by
per-action root finding plus direct evaluation at the kinks of the utility
floor.  Zero-cost actions peak in the limit at slope 0; when one of them
dominates, the distribution collapses to a point mass at 0 and the value
equals the best deterministic payoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import RandomizedLinearContract, Technology

__all__ = [
    "SingleAgentSolution",
    "utility_floor",
    "solve",
    "critical_slope",
    "optimal_cdf",
    "deterministic_optimum",
    "advantage_ratio",
]

#: slopes are clamped strictly below 1 to stay clear of the log singularity
SLOPE_CAP = 1.0 - 1e-15
#: a zero-cost action declared dominant when it beats every interior
#: candidate up to this tolerance (the solution is then a point mass at 0)
DEGENERATE_TOL = 1e-10
#: candidates closer than this count as tied when picking the witness
WITNESS_TOL = 1e-10


def log_term(slope: float) -> float:
    """``-ln(1 - slope)``, the normalizer of the ratio objective."""
    return -math.log1p(-slope)


def _curvature(slope: float) -> float:
    """``a + (1 - a) ln(1 - a)``; strictly increasing from 0 to 1 on [0, 1)."""
    return slope + (1.0 - slope) * math.log1p(-slope)


def _slope_root(level: float) -> float:
    """Solve ``_curvature(a) = level`` by bisection for ``level`` in (0, 1)."""
    lo, hi = 0.0, SLOPE_CAP
    if _curvature(hi) <= level:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # interval below float resolution
            break
        if _curvature(mid) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def utility_floor(technology: Technology, slope: float) -> float:
    """Best utility the agent can guarantee from the known actions under a
    linear contract: ``max over actions of slope * E[y] - cost``.

    Nonnegative (the null action pays nothing and costs nothing), convex and
    piecewise linear in the slope.
    """
    return max(slope * a.dist.mean - a.cost for a in technology.actions)


@dataclass(frozen=True)
class SingleAgentSolution:
    """Optimal randomized linear contract for one agent.

    ``value`` is the principal's worst-case expected payoff;
    ``witness`` is the index of the known action whose ratio curve attains it.
    When ``critical_slope`` is zero the contract is the deterministic
    zero-slope contract and ``value`` is the witness action's expected outcome.
    """

    critical_slope: float
    value: float
    cdf: RandomizedLinearContract
    witness: int


def solve(technology: Technology) -> SingleAgentSolution:
    """Compute the critical slope, payoff and slope distribution."""
    actions = technology.actions
    stats = [(a.dist.mean, a.cost) for a in actions]

    # candidate interior slopes: per-action ratio peaks and utility-floor kinks
    probes = []
    for mean, cost in stats:
        if cost > 0.0 and mean > cost:
            probes.append(_slope_root(cost / mean))
    n = len(actions)
    for i in range(n):
        for j in range(i + 1, n):
            ei, ci = stats[i]
            ej, cj = stats[j]
            if ei == ej:
                continue
            x = (ci - cj) / (ei - ej)
            if 0.0 < x < 1.0:
                probes.append(min(x, SLOPE_CAP))

    best_value = -math.inf
    best_slope = 0.0
    for slope in probes:
        val = utility_floor(technology, slope) / log_term(slope)
        if val > best_value:
            best_value = val
            best_slope = slope

    # zero-cost actions attain their ratio E[y] in the limit at slope 0
    zero_value = -math.inf
    zero_witness = 0
    for i, (mean, cost) in enumerate(stats):
        if cost == 0.0 and mean > zero_value:
            zero_value = mean
            zero_witness = i

    if zero_value >= best_value - DEGENERATE_TOL:
        cdf = RandomizedLinearContract(0.0, "single")
        return SingleAgentSolution(0.0, zero_value, cdf, zero_witness)

    witness = _attaining_action(stats, best_slope)
    value = utility_floor(technology, best_slope) / log_term(best_slope)
    cdf = RandomizedLinearContract(best_slope, "single")
    return SingleAgentSolution(best_slope, value, cdf, witness)


def _attaining_action(stats, slope: float) -> int:
    utils = [slope * mean - cost for mean, cost in stats]
    top = max(utils)
    for i, u in enumerate(utils):
        if u >= top - WITNESS_TOL:
            return i
    return 0


def critical_slope(technology: Technology) -> tuple:
    """The maximizing slope of the ratio objective and the optimal payoff."""
    sol = solve(technology)
    return sol.critical_slope, sol.value


def optimal_cdf(technology: Technology) -> RandomizedLinearContract:
    """Slope distribution of the optimal randomized linear contract."""
    return solve(technology).cdf


def deterministic_optimum(technology: Technology) -> tuple:
    """Best deterministic linear contract as ``(slope, payoff)``.

    The payoff is ``max over actions of (sqrt(mean) - sqrt(cost))^2`` with the
    root difference clamped at zero, achieved by the slope
    ``sqrt(cost / mean)`` of the maximizing action.
    """
    best_val = -1.0
    best_slope = 0.0
    for a in technology.actions:
        mean, cost = a.dist.mean, a.cost
        gap = max(0.0, math.sqrt(mean) - math.sqrt(cost))
        val = gap * gap
        if val > best_val:
            best_val = val
            best_slope = math.sqrt(cost / mean) if mean > 0.0 else 0.0
    return best_slope, best_val


def advantage_ratio(cost: float) -> float:
    """Randomized-to-deterministic payoff ratio for a technology holding a
    single profitable action with unit mean and the given cost.

    Defined for ``cost`` strictly between 0 and 1; tends to 1 as the cost
    vanishes and grows without bound as the cost approaches the mean.
    """
    if not 0.0 < cost < 1.0:
        raise ValueError(f"cost must lie strictly inside (0, 1), got {cost!r}")
    root = _slope_root(cost)
    det = (1.0 - math.sqrt(cost)) ** 2
    return (1.0 - root) / det
