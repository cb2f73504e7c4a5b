"""Robust contract design toolkit.

Solvers and verifiers for contracting under technology uncertainty: the
optimal randomized linear contract in closed form, the deterministic
baseline, worst-case adversary certificates, linear-programming
cross-checks, the multi-agent (team) generalization and the
Lagrangian-multiplier machinery for deterministic contracts with one or
several observable outcomes.
"""

from .core import (
    Action,
    DomainMismatchError,
    LinearContract,
    OutcomeDist,
    RandomizedLinearContract,
    TabularContract,
    Technology,
    Tie,
    agent_utility,
    best_response,
    expected_outcome,
    null_action,
    principal_payoff,
)
from .single_agent import (
    SingleAgentSolution,
    advantage_ratio,
    critical_slope,
    deterministic_optimum,
    optimal_cdf,
    solve,
    utility_floor,
)
from .adversary import (
    AdversaryTechnology,
    LowerBoundReport,
    UpperBoundReport,
    adversary_best_payoff,
    adversary_cost,
    adversary_mean,
    build_adversary,
    make_contract_grid,
    randomized_payoff_exact,
    verify_lower_bound,
    verify_upper_bound,
)

__version__ = "0.1.0"
