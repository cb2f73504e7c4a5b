import math

import numpy as np
import pytest

from robust_contracts.adversary import (
    adversary_best_payoff,
    adversary_cost,
    adversary_mean,
    build_adversary,
    make_contract_grid,
    randomized_payoff_exact,
    verify_lower_bound,
    verify_upper_bound,
)
from robust_contracts.core import Action, OutcomeDist, TabularContract, Technology
from robust_contracts.single_agent import solve, utility_floor

CANONICAL = Technology([Action(OutcomeDist([(1, 1.0)]), 0.5)])
SOL = solve(CANONICAL)


def simple_tech(*pairs):
    return Technology([Action(OutcomeDist([(m, 1.0)]), c) for m, c in pairs])


class TestAdversaryFamily:
    def test_mean_at_zero_is_value(self):
        assert adversary_mean(0.0, SOL) == SOL.value

    def test_mean_midpoint(self):
        assert adversary_mean(0.5, SOL) == pytest.approx(2 * SOL.value, abs=1e-15)

    def test_mean_diverges_near_one(self):
        assert adversary_mean(1 - 1e-9, SOL) > 1e8 * SOL.value

    def test_mean_rejects_unit_slope(self):
        with pytest.raises(ValueError):
            adversary_mean(1.0, SOL)

    def test_cost_zero_at_zero(self):
        assert adversary_cost(0.0, SOL) == 0.0

    def test_cost_identity_pointwise(self):
        # a * mean(a) - cost(a) == value * (-ln(1 - a)) for all slopes
        for a in np.linspace(0.0, 0.95, 200):
            lhs = a * adversary_mean(a, SOL) - adversary_cost(a, SOL)
            rhs = SOL.value * (-math.log1p(-a))
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_cost_matches_quadrature(self):
        # the closed-form running integral of the mean vs numerical quadrature
        from scipy.integrate import quad

        for a in (0.3, 0.6, SOL.critical_slope):
            integral, err = quad(lambda t: adversary_mean(t, SOL), 0.0, a)
            closed = a * adversary_mean(a, SOL) - adversary_cost(a, SOL)
            assert closed == pytest.approx(integral, abs=max(1e-8, 10 * err))

    def test_cost_at_critical_slope(self):
        a = SOL.critical_slope
        expect = a * adversary_mean(a, SOL) - utility_floor(CANONICAL, a)
        assert adversary_cost(a, SOL) == pytest.approx(expect, abs=1e-12)

    def test_payoff_constant_along_family(self):
        for a in np.linspace(0.0, 0.9, 100):
            assert (1 - a) * adversary_mean(a, SOL) == pytest.approx(SOL.value, abs=1e-12)

    def test_degenerate_solution_rejected(self):
        degenerate = simple_tech((1, 0.0))
        with pytest.raises(ValueError, match="degenerate"):
            adversary_mean(0.5, solve(degenerate))
        with pytest.raises(ValueError, match="degenerate"):
            build_adversary(degenerate)


class TestBuildAdversary:
    def test_boundary_slope_canonical(self):
        adv = build_adversary(CANONICAL, SOL)
        assert adv.boundary_slope == pytest.approx(1 - SOL.value, abs=1e-12)
        assert adv.boundary_slope == pytest.approx(SOL.critical_slope, abs=1e-12)
        assert adv.mean(adv.boundary_slope) == pytest.approx(adv.max_known_mean, abs=1e-9)

    def test_boundary_slope_scaled(self):
        t = simple_tech((2, 0.5))
        sol = solve(t)
        adv = build_adversary(t, sol)
        assert adv.boundary_slope == pytest.approx(1 - sol.value / 2, abs=1e-12)

    def test_null_action_always_inside_slope_zero_set(self):
        adv = build_adversary(CANONICAL, SOL)
        assert 0.0 <= adv.mean(0.0)  # null mean 0 <= family mean, cost 0 >= 0
        assert adv.value > 0

    def test_containment_on_random_technologies(self):
        rng = np.random.default_rng(13)
        built = 0
        for _ in range(100):
            n = int(rng.integers(1, 5))
            actions = [
                Action(
                    OutcomeDist([(float(rng.uniform(0, 4)), 1.0)]),
                    float(rng.uniform(0.05, 2)),
                )
                for _ in range(n)
            ]
            actions.append(Action(OutcomeDist([(3.0, 1.0)]), 1.0))
            t = Technology(actions)
            sol = solve(t)
            if sol.critical_slope == 0.0:
                continue
            build_adversary(t, sol)  # raises on containment failure
            built += 1
        assert built > 50


class TestAdversaryBestPayoff:
    def test_zero_contract(self):
        adv = build_adversary(CANONICAL, SOL)
        w = TabularContract({0: 0.0, 1: 0.0})
        got = adversary_best_payoff(adv, w)
        # the agent picks the best zero-payment action; payoff is its mean
        assert got <= SOL.value + 1e-3
        assert got == pytest.approx(SOL.value, abs=1e-6)

    def test_critical_slope_contract_is_tight(self):
        adv = build_adversary(CANONICAL, SOL)
        w = TabularContract({0: 0.0, 1: SOL.critical_slope})
        got = adversary_best_payoff(adv, w)
        assert got == pytest.approx(SOL.value, abs=1e-9)

    def test_constant_contract(self):
        adv = build_adversary(CANONICAL, SOL)
        k = 0.05
        w = TabularContract({0: k, 1: k})
        got = adversary_best_payoff(adv, w)
        # fixed pay: the agent settles for the costless max-mean action
        assert got == pytest.approx(SOL.value - k, abs=1e-9)
        assert got <= SOL.value


class TestVerifyUpperBound:
    def test_empty_grid_vacuous(self):
        report = verify_upper_bound(CANONICAL, [])
        assert report.passed
        assert report.max_payoff == -math.inf
        assert report.best_contract is None

    def test_canonical_grid(self):
        grid = make_contract_grid(CANONICAL, 1000, seed=3)
        report = verify_upper_bound(CANONICAL, grid)
        assert report.passed
        assert report.max_payoff <= SOL.value + 1e-3
        # the grid includes the critical-slope contract, so the bound is tight
        assert report.max_payoff >= SOL.value - 1e-3

    def test_negative_control(self):
        grid = make_contract_grid(CANONICAL, 100, seed=3)
        report = verify_upper_bound(CANONICAL, grid, value_override=0.01)
        assert not report.passed
        assert report.best_contract is not None

    def test_report_dict_keys(self):
        report = verify_upper_bound(CANONICAL, [])
        d = report.to_dict()
        assert {"max_payoff", "bound", "pass"} <= set(d)


class TestExactPayoffIntegration:
    def test_known_technology_alone_is_tight(self):
        means = np.array([0.0, 1.0])
        costs = np.array([0.0, 0.5])
        got = randomized_payoff_exact(means, costs, SOL.critical_slope)
        # single profitable action binding everywhere: payoff equals the value
        assert got == pytest.approx(SOL.value, abs=1e-12)

    def test_dominated_extra_action_changes_nothing(self):
        base = randomized_payoff_exact([0.0, 1.0], [0.0, 0.5], SOL.critical_slope)
        extended = randomized_payoff_exact(
            [0.0, 1.0, 0.1], [0.0, 0.5, 1.0], SOL.critical_slope
        )
        assert extended == pytest.approx(base, abs=1e-15)

    def test_monte_carlo_cross_check(self):
        rng = np.random.default_rng(4)
        means = np.array([0.0, 1.0, 1.6, 0.9])
        costs = np.array([0.0, 0.5, 1.1, 0.2])
        exact = randomized_payoff_exact(means, costs, SOL.critical_slope)
        # sample slopes through the quantile transform and average payoffs
        u = rng.random(200_000)
        slopes = 1.0 - (1.0 - SOL.critical_slope) ** u
        utils = slopes[:, None] * means[None, :] - costs[None, :]
        top = utils.max(axis=1)
        worst_mean = np.where(
            utils >= top[:, None] - 1e-15, means[None, :], np.inf
        ).min(axis=1)
        mc = float(((1.0 - slopes) * worst_mean).mean())
        assert exact == pytest.approx(mc, abs=2e-3)


class TestVerifyLowerBound:
    def test_small_run_passes(self):
        report = verify_lower_bound(CANONICAL, n_trials=50, seed=42)
        assert report.passed
        assert report.min_payoff >= SOL.value - 1e-9
        assert report.n_failures == 0

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError, match="degenerate"):
            verify_lower_bound(simple_tech((1, 0.0)), n_trials=1)

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            verify_lower_bound(CANONICAL, n_trials=0)

    def test_deterministic_given_seed(self):
        a = verify_lower_bound(CANONICAL, n_trials=20, seed=7)
        b = verify_lower_bound(CANONICAL, n_trials=20, seed=7)
        assert a == b
