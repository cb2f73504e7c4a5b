"""Domain types for robust contract design.

A principal pays an agent based on an observable monetary outcome; the agent
privately picks an action (an outcome distribution plus an effort cost) from
a technology of which the principal only knows a finite subset.  Every solver
in this package works off the types defined here.

All types are immutable and validate their invariants at construction time,
so downstream code can assume well-formed inputs.  Operations are pure
functions; everything is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence, Tuple, Union

__all__ = [
    "PROB_TOL",
    "TIE_TOL",
    "DomainMismatchError",
    "Tie",
    "OutcomeDist",
    "Action",
    "Technology",
    "LinearContract",
    "TabularContract",
    "Contract",
    "RandomizedLinearContract",
    "null_action",
    "expected_outcome",
    "agent_utility",
    "principal_payoff",
    "best_response",
]

#: probabilities of a distribution must sum to one within this tolerance
PROB_TOL = 1e-12
#: agent utilities closer than this count as a tie
TIE_TOL = 1e-9


class DomainMismatchError(KeyError):
    """A tabular contract has no payment entry for a required outcome."""


class Tie(Enum):
    """How an indifferent agent picks among utility-maximizing actions."""

    BEST_FOR_PRINCIPAL = "best"
    WORST_FOR_PRINCIPAL = "worst"


@dataclass(frozen=True)
class OutcomeDist:
    """Finite probability distribution over nonnegative monetary outcomes.

    ``support`` is a sequence of ``(outcome, probability)`` pairs.  Outcomes
    must be distinct, finite and nonnegative; probabilities must be
    nonnegative and sum to one within :data:`PROB_TOL`.
    """

    support: Tuple[Tuple[float, float], ...]

    def __init__(self, support: Iterable[Sequence[float]]):
        pairs = []
        seen = set()
        for entry in support:
            y, p = float(entry[0]), float(entry[1])
            if not math.isfinite(y) or y < 0.0:
                raise ValueError(f"outcomes must be finite and >= 0, got {y!r}")
            if y in seen:
                raise ValueError(f"duplicate outcome {y!r}")
            if not math.isfinite(p) or p < 0.0:
                raise ValueError(f"probability of outcome {y!r} must be >= 0, got {p!r}")
            seen.add(y)
            pairs.append((y, p))
        if not pairs:
            raise ValueError("distribution needs at least one support point")
        total = math.fsum(p for _, p in pairs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "support", tuple(pairs))

    @classmethod
    def point_mass(cls, outcome: float) -> "OutcomeDist":
        return cls([(outcome, 1.0)])

    @property
    def mean(self) -> float:
        return math.fsum(y * p for y, p in self.support)


@dataclass(frozen=True)
class Action:
    """Pay ``cost``, then draw the outcome from ``dist``."""

    dist: OutcomeDist
    cost: float

    def __post_init__(self):
        cost = float(self.cost)
        if not math.isfinite(cost) or cost < 0.0:
            raise ValueError(f"action cost must be finite and >= 0, got {self.cost!r}")
        object.__setattr__(self, "cost", cost)

    @property
    def is_null(self) -> bool:
        """True for the no-effort action (outcome 0 surely, zero cost)."""
        return self.cost == 0.0 and self.dist.support == ((0.0, 1.0),)


def null_action() -> Action:
    """The no-effort action: outcome 0 with certainty at zero cost."""
    return Action(OutcomeDist.point_mass(0.0), 0.0)


@dataclass(frozen=True)
class Technology:
    """Finite action set known to the principal.

    The null action is appended when absent, so indices of user-supplied
    actions are preserved.  At least one action must be strictly profitable
    in expectation (``E[y] - cost > 0``); without one there is nothing worth
    contracting for and the solvers reject the input.
    """

    actions: Tuple[Action, ...]

    def __init__(self, actions: Iterable[Action]):
        acts = tuple(actions)
        if not acts:
            raise ValueError("technology needs at least one action")
        if not all(isinstance(a, Action) for a in acts):
            raise TypeError("technology entries must be Action instances")
        if not any(a.is_null for a in acts):
            acts = acts + (null_action(),)
        if not any(a.dist.mean - a.cost > 0.0 for a in acts):
            raise ValueError("technology has no action with E[y] - cost > 0")
        object.__setattr__(self, "actions", acts)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def max_mean(self) -> float:
        return max(a.dist.mean for a in self.actions)


@dataclass(frozen=True)
class LinearContract:
    """Pays ``slope * y``; the slope must lie in [0, 1]."""

    slope: float

    def __post_init__(self):
        slope = float(self.slope)
        if not (0.0 <= slope <= 1.0):
            raise ValueError(f"slope must lie in [0, 1], got {self.slope!r}")
        object.__setattr__(self, "slope", slope)


@dataclass(frozen=True, eq=False)
class TabularContract:
    """Explicit outcome -> payment table.

    Payments must be nonnegative (limited liability) and the table must cover
    every outcome it is evaluated on; a missing entry raises
    :class:`DomainMismatchError`.
    """

    payments: Mapping[float, float]

    def __init__(self, payments: Mapping[float, float]):
        table = {}
        for y, w in dict(payments).items():
            yf, wf = float(y), float(w)
            if not math.isfinite(yf):
                raise ValueError(f"outcome {y!r} must be finite")
            if not math.isfinite(wf) or wf < 0.0:
                raise ValueError(f"payment for outcome {y!r} must be finite and >= 0, got {w!r}")
            table[yf] = wf
        if not table:
            raise ValueError("tabular contract needs at least one entry")
        object.__setattr__(self, "payments", table)

    def payment(self, outcome: float) -> float:
        try:
            return self.payments[float(outcome)]
        except KeyError:
            raise DomainMismatchError(
                f"contract defines no payment for outcome {outcome!r}"
            ) from None


Contract = Union[LinearContract, TabularContract]


@dataclass(frozen=True)
class RandomizedLinearContract:
    """Closed-form distribution used to randomize a linear contract.

    kind ``"single"``: the draw is the slope itself, supported on
    ``[0, critical_slope]`` with CDF ``ln(1 - a) / ln(1 - critical_slope)``.

    kind ``"team"``: the draw is a scale ``beta`` in ``[0, 1]`` applied to a
    fixed slope vector whose entries sum to ``critical_slope``; the CDF is
    ``ln(1 - beta * s) / ln(1 - s)``.

    A critical slope of zero degenerates to a point mass at zero either way.
    """

    critical_slope: float
    kind: str = "single"

    def __post_init__(self):
        s = float(self.critical_slope)
        if not (0.0 <= s < 1.0):
            raise ValueError(f"critical slope must lie in [0, 1), got {self.critical_slope!r}")
        if self.kind not in ("single", "team"):
            raise ValueError(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "critical_slope", s)

    @property
    def degenerate(self) -> bool:
        return self.critical_slope == 0.0

    @property
    def upper_support(self) -> float:
        """Right end of the support (a slope for "single", a scale for "team")."""
        if self.degenerate:
            return 0.0
        return self.critical_slope if self.kind == "single" else 1.0

    def cdf(self, x: float) -> float:
        """Right-continuous CDF evaluated at ``x``."""
        if x < 0.0:
            return 0.0
        if self.degenerate or x >= self.upper_support:
            return 1.0
        s = self.critical_slope
        if self.kind == "single":
            return math.log1p(-x) / math.log1p(-s)
        return math.log1p(-x * s) / math.log1p(-s)

    def quantile(self, u: float) -> float:
        """Inverse CDF: quantile(0) = 0 and quantile(1) is the upper support end."""
        if not 0.0 <= u <= 1.0:
            raise ValueError(f"quantile argument must lie in [0, 1], got {u!r}")
        if self.degenerate:
            return 0.0
        s = self.critical_slope
        draw = -math.expm1(u * math.log1p(-s))  # 1 - (1-s)**u
        return draw if self.kind == "single" else draw / s


def expected_outcome(dist: OutcomeDist) -> float:
    """Expected monetary outcome of a distribution."""
    return dist.mean


def agent_utility(contract: Contract, action: Action) -> float:
    """Expected payment under ``contract`` minus the action's cost."""
    if isinstance(contract, LinearContract):
        return contract.slope * action.dist.mean - action.cost
    pay = math.fsum(p * contract.payment(y) for y, p in action.dist.support)
    return pay - action.cost


def principal_payoff(contract: Contract, action: Action) -> float:
    """Expected outcome minus expected payment when ``action`` is played."""
    if isinstance(contract, LinearContract):
        return (1.0 - contract.slope) * action.dist.mean
    return math.fsum(p * (y - contract.payment(y)) for y, p in action.dist.support)


def best_response(
    contract: Contract,
    technology: Technology,
    tie: Tie = Tie.BEST_FOR_PRINCIPAL,
) -> Action:
    """Utility-maximizing action, with ties resolved for or against the principal.

    Utilities within :data:`TIE_TOL` of the maximum count as tied; among tied
    actions the one with the best (or worst) principal payoff is returned, and
    any remaining tie goes to the lowest index so the choice is deterministic.
    """
    utils = [agent_utility(contract, a) for a in technology.actions]
    top = max(utils)
    tied = [i for i, u in enumerate(utils) if u >= top - TIE_TOL]
    scored = [(principal_payoff(contract, technology.actions[i]), i) for i in tied]
    if tie is Tie.BEST_FOR_PRINCIPAL:
        _, idx = max(scored, key=lambda t: (t[0], -t[1]))
    else:
        _, idx = min(scored, key=lambda t: (t[0], t[1]))
    return technology.actions[idx]
