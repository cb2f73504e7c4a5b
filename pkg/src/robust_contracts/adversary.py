"""Worst-case technology construction and the two numeric certificates for
the single-agent optimum.

The adversary answers any contract with a one-parameter family of actions
indexed by a slope ``a``: the action at ``a`` has mean ``value / (1 - a)``
and a cost calibrated so that moving along the family never pays off for the
agent.  Against this technology the principal's payoff is pinned to the
closed-form value no matter which contract is posted (the upper
certificate); and the optimal slope distribution guarantees at least the
value against every finite superset of the known technology (the lower
certificate, computed by exact piecewise integration under worst-case
tie-breaking).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import OutcomeDist, TabularContract, Technology
from .single_agent import SingleAgentSolution, log_term, solve

__all__ = [
    "AdversaryTechnology",
    "adversary_mean",
    "adversary_cost",
    "build_adversary",
    "adversary_best_payoff",
    "make_contract_grid",
    "verify_upper_bound",
    "verify_lower_bound",
    "UpperBoundReport",
    "LowerBoundReport",
]

#: default number of slope grid points for the discretized adversary
SLOPE_GRID = 2000
#: utility band inside which the adversary's actions count as tied
TIE_TOL = 1e-9
#: flag certificates whose value moves more than this under the opposite
#: tie-breaking rule
TIE_SENSITIVITY = 1e-6


def adversary_mean(alpha: float, solution: SingleAgentSolution) -> float:
    """Mean outcome ``value / (1 - alpha)`` of the adversary action at ``alpha``.

    Strictly increasing, diverging as ``alpha`` approaches 1.
    """
    if solution.critical_slope <= 0.0:
        raise ValueError("adversary family is undefined for the degenerate solution")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"slope must lie in [0, 1), got {alpha!r}")
    return solution.value / (1.0 - alpha)


def adversary_cost(alpha: float, solution: SingleAgentSolution) -> float:
    """Cost of the adversary action at ``alpha``.

    Equals ``alpha * mean(alpha)`` minus the running integral of the mean,
    which integrates in closed form to ``value * (-ln(1 - alpha))``; the
    difference starts at 0 and is nondecreasing.
    """
    return alpha * adversary_mean(alpha, solution) - solution.value * log_term(alpha)


@dataclass(frozen=True)
class AdversaryTechnology:
    """Worst-case technology derived from a single-agent solution.

    The family covers slopes ``[0, boundary_slope]``; at the boundary the
    action's mean reaches the largest known mean, and every known action is
    contained in the family's feasible region (checked at construction).
    Discretized instances replace the action at slope ``a`` by the two-point
    mixture of the maximum-mean known distribution and the point mass at 0
    whose mean is ``mean(a)``.
    """

    critical_slope: float
    value: float
    boundary_slope: float
    max_known_mean: float
    base_dist: OutcomeDist

    def mean(self, alpha: float) -> float:
        if not 0.0 <= alpha < 1.0:
            raise ValueError(f"slope must lie in [0, 1), got {alpha!r}")
        return self.value / (1.0 - alpha)

    def cost(self, alpha: float) -> float:
        return alpha * self.mean(alpha) - self.value * log_term(alpha)

    def mean_inverse(self, mean: float) -> float:
        """Slope at which the family's mean equals ``mean`` (>= value)."""
        if mean < self.value:
            raise ValueError(f"mean {mean!r} is below the family minimum {self.value!r}")
        return 1.0 - self.value / mean


def build_adversary(technology: Technology, solution: Optional[SingleAgentSolution] = None) -> AdversaryTechnology:
    """Construct the worst-case family for a non-degenerate solution.

    Raises RuntimeError if some known action falls outside the family's
    feasible region, which would indicate a solver bug rather than bad input.
    """
    if solution is None:
        solution = solve(technology)
    if solution.critical_slope <= 0.0:
        raise ValueError(
            "degenerate solution (critical slope 0): the zero-slope contract is "
            "already optimal and the adversary family is not defined"
        )
    value = solution.value
    max_mean = technology.max_mean
    base = max(technology.actions, key=lambda a: a.dist.mean).dist
    boundary = 1.0 - value / max_mean
    adv = AdversaryTechnology(solution.critical_slope, value, boundary, max_mean, base)
    for i, a in enumerate(technology.actions):
        mean = a.dist.mean
        if mean <= value:  # inside the slope-0 action set
            continue
        needed = adv.cost(adv.mean_inverse(mean))
        if a.cost < needed - 1e-9:
            raise RuntimeError(
                f"internal consistency failure: known action {i} (mean {mean}, "
                f"cost {a.cost}) undercuts the adversary cost {needed}"
            )
    return adv


def _discretized(adv: AdversaryTechnology, n_slopes: int):
    """Mixture weights and costs of the discretized adversary.

    Row 0 is the null action; row ``k >= 1`` is the action at the ``k``-th
    grid slope, realized as the mixture ``t * base + (1 - t) * point_mass(0)``
    with ``t = mean(a) / max_known_mean``.
    """
    alphas = np.linspace(0.0, adv.boundary_slope, n_slopes)
    means = adv.value / (1.0 - alphas)
    costs = alphas * means + adv.value * np.log1p(-alphas)
    costs[0] = 0.0
    t = means / adv.max_known_mean
    t = np.concatenate([[0.0], t])
    costs = np.concatenate([[0.0], costs])
    return t, costs


def adversary_best_payoff(
    adv: AdversaryTechnology,
    contract: TabularContract,
    n_slopes: int = SLOPE_GRID,
    best_tie: bool = True,
) -> float:
    """Principal payoff when the agent best-responds inside the discretized
    adversary, breaking utility ties for (or against) the principal."""
    t, costs = _discretized(adv, n_slopes)
    pay_base = math.fsum(p * contract.payment(y) for y, p in adv.base_dist.support)
    pay_zero = contract.payment(0.0)
    utils = t * pay_base + (1.0 - t) * pay_zero - costs
    payoffs = t * (adv.max_known_mean - pay_base) - (1.0 - t) * pay_zero
    tied = utils >= utils.max() - TIE_TOL
    return float(payoffs[tied].max() if best_tie else payoffs[tied].min())


def make_contract_grid(
    technology: Technology,
    n_random: int,
    seed: int = 42,
    payment_cap: Optional[float] = None,
) -> list:
    """Deterministic grid of tabular contracts on the known outcome values.

    Always contains the zero contract, the linear contract at the critical
    slope (tabulated) and a mid-range constant contract; the rest are seeded
    uniform random payment tables.
    """
    outcomes = sorted({y for a in technology.actions for y, _ in a.dist.support} | {0.0})
    cap = payment_cap if payment_cap is not None else max(outcomes) or 1.0
    sol = solve(technology)
    grid = [
        TabularContract({y: 0.0 for y in outcomes}),
        TabularContract({y: sol.critical_slope * y for y in outcomes}),
        TabularContract({y: 0.5 * cap for y in outcomes}),
    ]
    rng = np.random.default_rng(seed)
    draws = rng.uniform(0.0, cap, size=(n_random, len(outcomes)))
    for row in draws:
        grid.append(TabularContract(dict(zip(outcomes, row))))
    return grid


@dataclass(frozen=True)
class UpperBoundReport:
    """Outcome of the grid certificate that no contract beats the value."""

    max_payoff: float
    bound: float
    tolerance: float
    passed: bool
    best_contract: Optional[TabularContract]
    tie_sensitive: bool
    n_contracts: int

    def to_dict(self) -> dict:
        return {
            "max_payoff": self.max_payoff,
            "bound": self.bound,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "tie_sensitive": self.tie_sensitive,
            "n_contracts": self.n_contracts,
        }

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (
            f"upper bound {status}: max payoff {self.max_payoff:.12g} vs "
            f"bound {self.bound:.12g} + {self.tolerance:.12g} over "
            f"{self.n_contracts} contracts"
        )


@dataclass(frozen=True)
class LowerBoundReport:
    """Outcome of the random-superset certificate for the slope distribution."""

    min_payoff: float
    bound: float
    tolerance: float
    passed: bool
    worst_trial: Optional[int]
    n_trials: int
    n_failures: int

    def to_dict(self) -> dict:
        return {
            "min_payoff": self.min_payoff,
            "bound": self.bound,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "worst_trial": self.worst_trial,
            "n_trials": self.n_trials,
            "n_failures": self.n_failures,
        }

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (
            f"lower bound {status}: min payoff {self.min_payoff:.12g} vs "
            f"bound {self.bound:.12g} - {self.tolerance:.12g} over "
            f"{self.n_trials} trials (worst trial {self.worst_trial})"
        )


def verify_upper_bound(
    technology: Technology,
    contracts: Sequence[TabularContract],
    n_slopes: int = SLOPE_GRID,
    tolerance: float = 1e-3,
    value_override: Optional[float] = None,
) -> UpperBoundReport:
    """Check that no contract in the grid extracts more than the value from
    the discretized adversary.

    ``value_override`` replaces the bound being certified (testing hook for
    negative controls); the adversary itself is always built from the true
    solution.
    """
    solution = solve(technology)
    adv = build_adversary(technology, solution)
    bound = solution.value if value_override is None else value_override

    t, costs = _discretized(adv, n_slopes)
    max_best = -math.inf
    max_worst = -math.inf
    best_contract = None
    for w in contracts:
        pay_base = math.fsum(p * w.payment(y) for y, p in adv.base_dist.support)
        pay_zero = w.payment(0.0)
        utils = t * pay_base + (1.0 - t) * pay_zero - costs
        payoffs = t * (adv.max_known_mean - pay_base) - (1.0 - t) * pay_zero
        tied = utils >= utils.max() - TIE_TOL
        got_best = float(payoffs[tied].max())
        got_worst = float(payoffs[tied].min())
        if got_best > max_best:
            max_best = got_best
            best_contract = w
        if got_worst > max_worst:
            max_worst = got_worst
    tie_sensitive = (
        math.isfinite(max_best)
        and abs(max_best - max_worst) > TIE_SENSITIVITY
    )
    passed = max_best <= bound + tolerance
    return UpperBoundReport(
        max_best, bound, tolerance, passed, best_contract, tie_sensitive, len(contracts)
    )


def randomized_payoff_exact(means, costs, top_slope: float) -> float:
    """Expected principal payoff of the optimal slope distribution against a
    finite technology given by action means and costs, under worst-case
    tie-breaking, by exact piecewise integration.

    The agent's best response is constant between crossings of the utility
    lines ``slope * mean - cost``, and on each piece the payoff integrand
    reduces to ``mean * d(slope) / (-ln(1 - top_slope))``.
    """
    means = np.asarray(means, dtype=float)
    costs = np.asarray(costs, dtype=float)
    cuts = {0.0, top_slope}
    n = means.size
    for i in range(n):
        for j in range(i + 1, n):
            de = means[i] - means[j]
            if de == 0.0:
                continue
            x = (costs[i] - costs[j]) / de
            if 0.0 < x < top_slope:
                cuts.add(float(x))
    pts = sorted(cuts)
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        mid = 0.5 * (a + b)
        utils = mid * means - costs
        worst_mean = means[utils >= utils.max()].min()
        total += worst_mean * (b - a)
    return total / log_term(top_slope)


def verify_lower_bound(
    technology: Technology,
    n_trials: int = 1000,
    seed: int = 42,
    tolerance: float = 1e-9,
    max_extra: int = 5,
) -> LowerBoundReport:
    """Check that the slope distribution earns at least the value against
    seeded random finite supersets of the known technology.

    Each trial adds 1..``max_extra`` arbitrary actions whose means stay below
    three times the largest known mean; costs are unrestricted.
    """
    if n_trials < 1:
        raise ValueError("need at least one trial")
    solution = solve(technology)
    if solution.critical_slope <= 0.0:
        raise ValueError(
            "degenerate solution (critical slope 0): the superset certificate "
            "applies only to the randomized case"
        )
    base_means = np.array([a.dist.mean for a in technology.actions])
    base_costs = np.array([a.cost for a in technology.actions])
    cap = 3.0 * technology.max_mean
    rng = np.random.default_rng(seed)

    min_payoff = math.inf
    worst_trial = None
    failures = 0
    for trial in range(n_trials):
        k = int(rng.integers(1, max_extra + 1))
        extra_means = np.empty(k)
        extra_costs = np.empty(k)
        for i in range(k):
            size = int(rng.integers(2, 5))
            outcomes = rng.uniform(0.0, cap, size)
            probs = rng.dirichlet(np.ones(size))
            extra_means[i] = outcomes @ probs
            extra_costs[i] = 0.0 if rng.random() < 0.15 else rng.uniform(0.0, cap)
        payoff = randomized_payoff_exact(
            np.concatenate([base_means, extra_means]),
            np.concatenate([base_costs, extra_costs]),
            solution.critical_slope,
        )
        if payoff < min_payoff:
            min_payoff = payoff
            worst_trial = trial
        if payoff < solution.value - tolerance:
            failures += 1
    return LowerBoundReport(
        min_payoff,
        solution.value,
        tolerance,
        failures == 0,
        worst_trial,
        n_trials,
        failures,
    )
