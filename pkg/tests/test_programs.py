import numpy as np
import pytest
from scipy.optimize import linprog

from robust_contracts.core import Action, OutcomeDist, RandomizedLinearContract, Technology
from robust_contracts.programs import (
    build_robust_contract_lp,
    cdf_mass,
    contract_floor_values,
    enumerate_contracts,
    floor_on_grid,
    payment_grid,
    solve_menu_lp,
    solve_monotone_lp,
    solve_payoff_floor,
    worst_case_value_lp,
)
from robust_contracts.simplex import LpSizeError, simplex_solve
from robust_contracts.single_agent import solve

CANONICAL = Technology([Action(OutcomeDist([(1, 1.0)]), 0.5)])
SOL = solve(CANONICAL)
Y01 = [0.0, 1.0]


def scipy_min(problem):
    c = problem.objective if problem.sense == "min" else -problem.objective
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for row, rel, b in zip(problem.lhs, problem.relations, problem.rhs):
        if rel == "<=":
            a_ub.append(row)
            b_ub.append(b)
        elif rel == ">=":
            a_ub.append(-row)
            b_ub.append(-b)
        else:
            a_eq.append(row)
            b_eq.append(b)
    bounds = [
        (None if np.isneginf(lo) else lo, None if np.isposinf(hi) else hi)
        for lo, hi in zip(problem.lower, problem.upper)
    ]
    res = linprog(
        c,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds,
        method="highs",
    )
    assert res.status == 0
    return res.fun if problem.sense == "min" else -res.fun


class TestEnumeration:
    def test_order_and_count(self):
        ws = enumerate_contracts(Y01, [0.0, 1.0])
        assert ws == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]

    def test_limit(self):
        with pytest.raises(LpSizeError):
            enumerate_contracts([0, 1, 2], list(range(17)))

    def test_floor_values(self):
        ws = enumerate_contracts(Y01, [0.0, 0.5])
        floors = contract_floor_values(CANONICAL, Y01, ws)
        # zero contract floors at 0 (null action); paying 0.5 on outcome 1
        # makes the known profitable action worthless (0.5 - 0.5), still 0
        assert floors == pytest.approx([0.0, 0.0, 0.0, 0.0], abs=1e-15)
        ws = enumerate_contracts(Y01, [0.0, 0.9])
        floors = contract_floor_values(CANONICAL, Y01, ws)
        assert max(floors) == pytest.approx(0.4, abs=1e-15)

    def test_requires_covering_grid(self):
        with pytest.raises(ValueError, match="cover"):
            contract_floor_values(CANONICAL, [0.0, 2.0], [(0.0, 0.0)])


class TestRobustContractLp:
    def test_single_zero_payment_level(self):
        prob = build_robust_contract_lp(CANONICAL, Y01, [0.0])
        res = simplex_solve(prob)
        assert res.status == "optimal"
        assert res.value == pytest.approx(0.0, abs=1e-9)

    def test_spec_three_level_grid(self):
        prob = build_robust_contract_lp(CANONICAL, Y01, [0.0, 0.5, SOL.critical_slope])
        res = simplex_solve(prob, max_rows=10**5, max_vars=10**5)
        assert res.status == "optimal"
        # frozen from two independent engine runs; stays below the true value
        assert res.value == pytest.approx(0.1169817400, abs=1e-8)
        assert res.value <= SOL.value + 1e-6

    def test_never_beats_closed_form_and_duality(self):
        S = payment_grid(SOL.critical_slope, Y01, 4)
        prob = build_robust_contract_lp(CANONICAL, Y01, S)
        res = simplex_solve(prob, max_rows=10**5, max_vars=10**5)
        assert res.status == "optimal"
        assert res.value <= SOL.value + 1e-6
        assert scipy_min(prob) == pytest.approx(res.value, abs=1e-8)
        n = len(S) ** 2
        mixture = res.x[:n]
        inner = worst_case_value_lp(CANONICAL, Y01, S, mixture)
        assert inner == pytest.approx(res.value, abs=1e-6)

    def test_refinement_tightens(self):
        values = []
        for size in (4, 8):
            S = payment_grid(SOL.critical_slope, Y01, size)
            prob = build_robust_contract_lp(CANONICAL, Y01, S)
            values.append(simplex_solve(prob, max_rows=10**5, max_vars=10**5).value)
        assert values[1] >= values[0] - 1e-9


class TestWorstCaseValue:
    def test_point_mass_on_zero_contract(self):
        S = [0.0, 0.5]
        n = len(S) ** 2
        mixture = np.zeros(n)
        mixture[0] = 1.0  # the all-zero payment table comes first
        value = worst_case_value_lp(CANONICAL, Y01, S, mixture)
        assert value == pytest.approx(0.0, abs=1e-9)

    def test_point_mass_on_critical_slope_contract(self):
        S = [0.0, SOL.critical_slope]
        ws = enumerate_contracts(Y01, S)
        idx = ws.index((0.0, SOL.critical_slope))
        mixture = np.zeros(len(ws))
        mixture[idx] = 1.0
        value = worst_case_value_lp(CANONICAL, Y01, S, mixture)
        # a deterministic contract cannot beat the deterministic optimum,
        # which sits strictly below the randomized value here
        assert value <= 0.08578643762690492 + 1e-6
        assert value < SOL.value - 1e-3

    def test_rejects_bad_mixture(self):
        with pytest.raises(ValueError, match="probability"):
            worst_case_value_lp(CANONICAL, Y01, [0.0], [0.5])


class TestPaymentGrid:
    def test_contains_anchors(self):
        S = payment_grid(SOL.critical_slope, Y01, 8)
        assert len(S) == 8
        assert 0.0 in S
        assert SOL.critical_slope in S

    def test_uniform_on_unit_outcome(self):
        S = payment_grid(0.8, Y01, 5)
        assert S == pytest.approx([0.0, 0.2, 0.4, 0.6, 0.8], abs=1e-12)


class TestLowerBoundPrograms:
    def test_menu_equals_monotone_canonical(self):
        grid = np.linspace(0.0, SOL.critical_slope, 25)
        mass = cdf_mass(SOL.cdf, grid)
        floors = floor_on_grid(CANONICAL, grid)
        v1, v2 = solve_payoff_floor(grid, mass, floors)
        assert v1 == pytest.approx(v2, abs=1e-6)

    def test_menu_equals_monotone_fuzzed(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            n = int(rng.integers(4, 14))
            interior = np.sort(rng.uniform(0.02, 0.93, n - 1))
            while np.unique(interior).size < n - 1:
                interior = np.sort(rng.uniform(0.02, 0.93, n - 1))
            grid = np.concatenate([[0.0], interior])
            mass = rng.dirichlet(np.ones(n))
            means = rng.uniform(0.1, 3.0, 3)
            costs = rng.uniform(0.0, 1.5, 3)
            floors = np.maximum(
                0.0, (grid[:, None] * means[None, :] - costs[None, :]).max(axis=1)
            )
            v1, v2 = solve_payoff_floor(grid, mass, floors)
            assert v1 == pytest.approx(v2, abs=1e-6)

    def test_monotone_matches_scipy(self):
        grid = np.linspace(0.0, SOL.critical_slope, 40)
        mass = cdf_mass(SOL.cdf, grid)
        floors = floor_on_grid(CANONICAL, grid)
        got = solve_monotone_lp(grid, mass, floors)
        # direct scipy solve of the same program
        n = grid.size
        a_ub, b_ub = [], []
        for k in range(n - 1):
            row = np.zeros(n)
            row[k] = 1.0
            row[k + 1] = -1.0
            a_ub.append(row)
            b_ub.append(0.0)
        steps = np.diff(grid)
        for k in range(n):
            row = np.zeros(n)
            row[0] = grid[0]
            row[1 : k + 1] = steps[:k]
            a_ub.append(-row)
            b_ub.append(-floors[k])
        res = linprog((1 - grid) * mass, A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                      bounds=[(0, None)] * n, method="highs")
        assert res.status == 0
        assert got == pytest.approx(res.fun, abs=1e-8)

    def test_fine_grid_approaches_value(self):
        grid = np.linspace(0.0, SOL.critical_slope, 200)
        mass = cdf_mass(SOL.cdf, grid)
        floors = floor_on_grid(CANONICAL, grid)
        v2 = solve_monotone_lp(grid, mass, floors)
        assert v2 >= SOL.value - 1e-2
        assert v2 <= SOL.value + 1e-6

    def test_point_mass_matches_direct_formula(self):
        # all scale on one slope: the best schedule holds the smallest mean
        # meeting every cumulative floor below that slope
        grid = np.linspace(0.0, 0.8, 21)
        floors = floor_on_grid(CANONICAL, grid)
        for m in (5, 12, 20):
            mass = np.zeros(grid.size)
            mass[m] = 1.0
            v2 = solve_monotone_lp(grid, mass, floors)
            cum = np.concatenate([[np.inf], np.where(grid[1:] > 0, floors[1:], 0.0)])
            need = max(
                floors[k] / (grid[0] + np.sum(np.diff(grid)[:k])) if k else 0.0
                for k in range(m + 1)
            )
            direct = (1 - grid[m]) * need
            assert v2 == pytest.approx(direct, abs=1e-9)

    def test_trapezoid_rule_is_tighter(self):
        grid = np.linspace(0.0, SOL.critical_slope, 30)
        mass = cdf_mass(SOL.cdf, grid)
        floors = floor_on_grid(CANONICAL, grid)
        exact = solve_monotone_lp(grid, mass, floors)
        trap = solve_monotone_lp(grid, mass, floors, rule="trapezoid")
        assert trap >= exact - 1e-9

    def test_degenerate_zero_floor(self):
        grid = np.linspace(0.0, 0.9, 10)
        mass = np.full(10, 0.1)
        floors = np.zeros(10)
        v1, v2 = solve_payoff_floor(grid, mass, floors)
        assert v1 == pytest.approx(0.0, abs=1e-12)
        assert v2 == pytest.approx(0.0, abs=1e-12)

    def test_grid_validation(self):
        with pytest.raises(ValueError, match="increasing"):
            solve_monotone_lp([0.5, 0.2], [0.5, 0.5], [0.0, 0.0])
        with pytest.raises(ValueError, match="probability"):
            solve_monotone_lp([0.0, 0.5], [0.6, 0.6], [0.0, 0.0])
