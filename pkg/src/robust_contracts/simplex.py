"""Dense two-phase simplex method for small and medium linear programs.

The solver standardizes the problem (slack, surplus and artificial
variables; shifted, mirrored or split columns for general bounds), finds a
basic feasible point in phase 1, then optimizes the true objective.
Pricing uses Dantzig's rule while the objective moves and falls back to
Bland's smallest-index rule, which cannot cycle, after a run of degenerate
pivots.

Two interchangeable engines share those rules: a classic full tableau for
small problems, and a revised (basis-inverse) engine with block pricing and
periodic refactorization that keeps large instances affordable, since only
the m x m inverse is updated per pivot.  Both are deterministic; optimal
points are re-checked against the original constraints before being
returned.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["LpProblem", "LpSolution", "LpSizeError", "simplex_solve"]

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-7
STALL_LIMIT = 40
MAX_ROWS_DEFAULT = 5000
MAX_VARS_DEFAULT = 5000
#: element budget for the tableau rank-1 update, bounds temporary memory
CHUNK_ELEMS = 4_000_000
#: tableaus above this many elements switch to the revised engine
TABLEAU_LIMIT = 4_000_000
#: revised engine refactorizes the basis inverse this often
REINVERT_EVERY = 150

RELATIONS = ("<=", "=", ">=")


class LpSizeError(ValueError):
    """Problem exceeds the configured row or variable limits."""


@dataclass
class LpProblem:
    """Dense linear program.

    ``objective`` has length n; ``lhs`` is an m x n matrix with one relation
    ("<=", "=", ">=") and right-hand side per row.  Variable bounds default
    to [0, +inf); use ``-inf`` / ``+inf`` entries in ``lower`` / ``upper``
    for free or one-sided variables.
    """

    sense: str
    objective: np.ndarray
    lhs: np.ndarray
    relations: tuple
    rhs: np.ndarray
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        self.objective = np.ascontiguousarray(self.objective, dtype=float).reshape(-1)
        n = self.objective.size
        self.rhs = np.ascontiguousarray(self.rhs, dtype=float).reshape(-1)
        m = self.rhs.size
        self.lhs = np.asarray(self.lhs, dtype=float).reshape(m, n)
        self.relations = tuple(self.relations)
        if len(self.relations) != m:
            raise ValueError("one relation per constraint row required")
        if any(r not in RELATIONS for r in self.relations):
            raise ValueError(f"relations must be one of {RELATIONS}")
        if self.lower is None:
            self.lower = np.zeros(n)
        if self.upper is None:
            self.upper = np.full(n, np.inf)
        self.lower = np.ascontiguousarray(self.lower, dtype=float).reshape(n)
        self.upper = np.ascontiguousarray(self.upper, dtype=float).reshape(n)
        for name, arr in (("objective", self.objective), ("lhs", self.lhs), ("rhs", self.rhs)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds must not be NaN")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    def to_text(self) -> str:
        """Fixed human-readable export.

        Line 1 is the sense; line 2 the objective coefficients; then one line
        per constraint as ``coefficients relation rhs``; finally one
        ``bound j lower upper`` line per variable whose bounds differ from
        the default [0, inf).  Numbers use 12 significant digits.
        """

        def fmt(x: float) -> str:
            return f"{x:.12g}"

        lines = [self.sense, " ".join(fmt(c) for c in self.objective)]
        for row, rel, b in zip(self.lhs, self.relations, self.rhs):
            lines.append(" ".join(fmt(a) for a in row) + f" {rel} {fmt(b)}")
        for j, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if lo != 0.0 or hi != np.inf:
                lines.append(f"bound {j} {fmt(lo)} {fmt(hi)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LpSolution:
    """Solver outcome: ``status`` is "optimal", "infeasible" or "unbounded";
    ``value`` and the primal vector ``x`` are set only when optimal."""

    status: str
    value: Optional[float]
    x: Optional[np.ndarray]
    iterations: int = 0


class _Standardized:
    """Equality-form rewrite of an LpProblem with recovery bookkeeping.

    Produces the body matrix (original columns after shifting, mirroring and
    free-variable splitting, plus explicit rows for finite upper bounds of
    shifted variables), right-hand sides and relations; slack and artificial
    columns are appended by the engines.
    """

    def __init__(self, problem: LpProblem):
        A = problem.lhs
        b = problem.rhs.copy()
        c = problem.objective.copy()
        if problem.sense == "max":
            c = -c
        lo, hi = problem.lower, problem.upper
        n = problem.n_vars

        free = np.isneginf(lo) & np.isposinf(hi)
        mirror = np.isneginf(lo) & ~np.isposinf(hi)
        shift = ~np.isneginf(lo)

        # x = lo + x' (shifted), x = hi - x' (mirrored), x = x+ - x- (free)
        cols = A
        fin = shift & (lo != 0.0)
        if fin.any():
            b = b - A[:, fin] @ lo[fin]
        if mirror.any():
            b = b - A[:, mirror] @ hi[mirror]
            cols = A.copy()
            cols[:, mirror] *= -1.0
            c = c.copy()
            c[mirror] *= -1.0

        self.n_base = n
        self.free_idx = np.flatnonzero(free)
        self.mirror = mirror
        self.shift_lo = np.where(shift, lo, 0.0)
        self.hi = hi

        capped = shift & ~np.isposinf(hi)
        cap_idx = np.flatnonzero(capped)
        n_cols = n + self.free_idx.size
        cap_rows = np.zeros((cap_idx.size, n_cols))
        for k, j in enumerate(cap_idx):
            cap_rows[k, j] = 1.0
        cap_rhs = hi[cap_idx] - lo[cap_idx]

        body = np.hstack([cols, -cols[:, free]]) if self.free_idx.size else cols
        self.A = np.vstack([body, cap_rows]) if cap_idx.size else body
        self.b = np.concatenate([b, cap_rhs]) if cap_idx.size else b
        self.relations = list(problem.relations) + ["<="] * cap_idx.size
        self.c = np.concatenate([c, -c[self.free_idx]]) if self.free_idx.size else c

    def recover(self, x_std: np.ndarray) -> np.ndarray:
        x = x_std[: self.n_base].copy()
        if self.free_idx.size:
            x[self.free_idx] = (
                x_std[self.free_idx] - x_std[self.n_base : self.n_base + self.free_idx.size]
            )
        x[self.mirror] = self.hi[self.mirror] - x_std[: self.n_base][self.mirror]
        keep = ~self.mirror & ~np.isin(np.arange(self.n_base), self.free_idx)
        x[keep] = x_std[: self.n_base][keep] + self.shift_lo[keep]
        return x


def _leaving_row(basis: np.ndarray, x_B: np.ndarray, d: np.ndarray, bland: bool = False):
    """Minimum-ratio row.

    Ties go to the largest pivot element for numerical stability, except
    under Bland's rule where the smallest basic variable index must leave.
    """
    ok = d > PIVOT_TOL
    if not ok.any():
        return None
    rows = np.flatnonzero(ok)
    ratios = x_B[rows] / d[rows]
    rmin = ratios.min()
    close = rows[ratios <= rmin + 1e-12 * (1.0 + abs(rmin))]
    if bland:
        return int(close[np.argmin(basis[close])])
    return int(close[np.argmax(d[close])])


class _Stall:
    """Tracks degenerate pivots and toggles Bland's rule."""

    def __init__(self):
        self.count = 0
        self.bland = False

    def update(self, improved: bool):
        if improved:
            self.count = 0
            self.bland = False
        else:
            self.count += 1
            if self.count > STALL_LIMIT and not self.bland:
                self.bland = True
                log.debug("simplex: %d degenerate pivots, engaging Bland's rule", self.count)


def _run_tableau(T: np.ndarray, basis: np.ndarray, allowed: np.ndarray, max_iter: int) -> tuple:
    """Optimize a priced-out tableau in place; returns (status, iterations)."""
    m = T.shape[0] - 1
    ncols = T.shape[1]
    step = max(1, min(m + 1, CHUNK_ELEMS // ncols))
    buf = np.empty((step, ncols))
    stall = _Stall()
    it = 0
    while True:
        it += 1
        if it > max_iter:
            raise RuntimeError(f"simplex iteration limit {max_iter} exceeded")
        costs = np.where(allowed, T[-1, :-1], np.inf)
        if stall.bland:
            negs = np.flatnonzero(costs < -COST_TOL)
            if negs.size == 0:
                return "optimal", it
            j = int(negs[0])
        else:
            j = int(np.argmin(costs))
            if costs[j] >= -COST_TOL:
                return "optimal", it
        r = _leaving_row(basis, T[:m, -1], T[:m, j], stall.bland)
        if r is None:
            return "unbounded", it
        before = T[-1, -1]
        T[r] /= T[r, j]
        piv = T[r].copy()
        col = T[:, j].copy()
        col[r] = 0.0
        for i0 in range(0, m + 1, step):
            hi = min(i0 + step, m + 1)
            work = buf[: hi - i0]
            np.multiply(col[i0:hi, None], piv[None, :], out=work)
            np.subtract(T[i0:hi], work, out=T[i0:hi])
        T[:, j] = 0.0
        T[r, j] = 1.0
        basis[r] = j
        rhs = T[:m, -1]
        tiny = (rhs < 0.0) & (rhs > -1e-11)
        if tiny.any():
            rhs[tiny] = 0.0
        stall.update(abs(T[-1, -1] - before) > 1e-12 * (1.0 + abs(before)))


class _Revised:
    """Dense revised simplex state over a fixed column matrix."""

    def __init__(self, A: np.ndarray, b: np.ndarray):
        self.A = A  # Fortran order: column slices and A^T products are fast
        self.b = b
        self.m, self.n = A.shape
        self.pool = None
        self.pool_size = 2048
        self.pool_age = 0
        self.pool_refresh = 400

    def refactor(self, basis: np.ndarray):
        self.in_basis = np.zeros(self.n, dtype=bool)
        self.in_basis[basis] = True
        B = self.A[:, basis]
        try:
            self.B_inv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError("numerical trouble: singular basis") from exc
        x = self.B_inv @ self.b
        x[(x < 0.0) & (x > -1e-9)] = 0.0
        self.x_B = x

    def run(self, costs: np.ndarray, basis: np.ndarray, allowed: np.ndarray, max_iter: int) -> tuple:
        self.refactor(basis)
        self.pool = None
        stall = _Stall()
        it = 0
        since_refactor = 0
        z = float(costs[basis] @ self.x_B)
        while True:
            it += 1
            if it > max_iter:
                raise RuntimeError(f"simplex iteration limit {max_iter} exceeded")
            if since_refactor >= REINVERT_EVERY:
                self.refactor(basis)
                since_refactor = 0
            y = costs[basis] @ self.B_inv
            j = self._price(costs, y, allowed, stall.bland)
            if j < 0:
                self.refactor(basis)  # clean point for extraction
                return "optimal", it
            d = self.B_inv @ self.A[:, j]
            r = _leaving_row(basis, self.x_B, d, stall.bland)
            if r is None:
                return "unbounded", it
            theta = self.x_B[r] / d[r]
            self.x_B -= theta * d
            self.x_B[r] = theta
            tiny = (self.x_B < 0.0) & (self.x_B > -1e-11)
            if tiny.any():
                self.x_B[tiny] = 0.0
            inv_r = self.B_inv[r] / d[r]
            d_col = d.copy()
            d_col[r] = 0.0
            self.B_inv -= np.outer(d_col, inv_r)
            self.B_inv[r] = inv_r
            self.in_basis[basis[r]] = False
            self.in_basis[j] = True
            basis[r] = j
            since_refactor += 1
            z_new = float(costs[basis] @ self.x_B)
            stall.update(abs(z_new - z) > 1e-12 * (1.0 + abs(z)))
            z = z_new

    def dual_cleanup(self, costs: np.ndarray, basis: np.ndarray, allowed: np.ndarray,
                     b_true: np.ndarray, max_iter: int) -> int:
        """Re-optimize on the exact right-hand side from a dual-feasible basis.

        The phases run on slightly relaxed inequality right-hand sides to
        avoid degenerate vertices; reduced costs do not depend on the
        right-hand side, so the final basis stays dual feasible here and a
        handful of dual pivots restore primal feasibility, yielding the
        exact optimum.
        """
        self.b = b_true
        self.refactor(basis)
        it = 0
        while True:
            viol = self.x_B < -1e-9
            if not viol.any():
                tiny = (self.x_B < 0.0) & (self.x_B > -1e-9)
                if tiny.any():
                    self.x_B[tiny] = 0.0
                return it
            it += 1
            if it > max_iter:
                raise RuntimeError("dual cleanup iteration limit exceeded")
            if it % REINVERT_EVERY == 0:
                self.refactor(basis)
            r = int(np.argmin(self.x_B))
            w = self.B_inv[r] @ self.A
            y = costs[basis] @ self.B_inv
            red = costs - y @ self.A
            eligible = allowed & ~self.in_basis & (w < -PIVOT_TOL)
            if not eligible.any():
                raise RuntimeError(
                    "numerical trouble: no dual pivot available (exact problem "
                    "may be infeasible)"
                )
            idx = np.flatnonzero(eligible)
            ratios = red[idx] / -w[idx]
            rmin = ratios.min()
            close = idx[ratios <= rmin + 1e-12 * (1.0 + abs(rmin))]
            j = int(close[0])
            d = self.B_inv @ self.A[:, j]
            theta = self.x_B[r] / d[r]
            self.x_B -= theta * d
            self.x_B[r] = theta
            inv_r = self.B_inv[r] / d[r]
            d_col = d.copy()
            d_col[r] = 0.0
            self.B_inv -= np.outer(d_col, inv_r)
            self.B_inv[r] = inv_r
            self.in_basis[basis[r]] = False
            self.in_basis[j] = True
            basis[r] = j

    def drive_out_artificials(self, basis: np.ndarray, art_cols: np.ndarray) -> None:
        """Pivot basic artificials (at zero) onto real columns where the row
        is not redundant; redundant rows keep their frozen artificial, whose
        value can never move because the row prices to zero everywhere."""
        art_set = set(art_cols.tolist())
        for r in range(self.m):
            if basis[r] not in art_set:
                continue
            row = self.B_inv[r] @ self.A
            row[art_cols] = 0.0
            row[self.in_basis] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) <= 1e-7:  # redundant row, artificial stays frozen
                continue
            d = self.B_inv @ self.A[:, j]
            inv_r = self.B_inv[r] / d[r]
            d_col = d.copy()
            d_col[r] = 0.0
            self.B_inv -= np.outer(d_col, inv_r)
            self.B_inv[r] = inv_r
            theta = self.x_B[r] / d[r]  # zero: the artificial sits at zero
            self.x_B -= theta * d
            self.x_B[r] = theta
            self.in_basis[basis[r]] = False
            self.in_basis[j] = True
            basis[r] = j

    def _price(self, costs, y, allowed, bland: bool) -> int:
        if bland:
            red = costs - y @ self.A
            red[~allowed | self.in_basis] = np.inf
            negs = np.flatnonzero(red < -COST_TOL)
            return int(negs[0]) if negs.size else -1
        # candidate-list pricing: reprice the pool exactly each iteration,
        # refill it with a full scan only when it runs dry
        pool = self.pool
        self.pool_age += 1
        if pool is not None and pool.size and self.pool_age < self.pool_refresh:
            red = costs[pool] - y @ self.A[:, pool]
            red[~allowed[pool] | self.in_basis[pool]] = np.inf
            k = int(np.argmin(red))
            if red[k] < -COST_TOL:
                return int(pool[k])
        red = costs - y @ self.A
        red[~allowed | self.in_basis] = np.inf
        j = int(np.argmin(red))
        if red[j] >= -COST_TOL:
            return -1
        neg = np.flatnonzero(red < -COST_TOL)
        if neg.size > self.pool_size:
            neg = neg[np.argsort(red[neg], kind="stable")[: self.pool_size]]
        self.pool = np.sort(neg)
        self.pool_age = 0
        return j


def _certify(problem: LpProblem, x: np.ndarray) -> None:
    lhs = problem.lhs @ x
    for i, (rel, b) in enumerate(zip(problem.relations, problem.rhs)):
        resid = lhs[i] - b
        tol = FEAS_TOL * (1.0 + abs(b))
        ok = (
            resid <= tol
            if rel == "<="
            else resid >= -tol
            if rel == ">="
            else abs(resid) <= tol
        )
        if not ok:
            raise RuntimeError(
                f"numerical trouble: optimal point violates row {i} by {resid:.3e}"
            )
    if np.any(x < problem.lower - FEAS_TOL) or np.any(x > problem.upper + FEAS_TOL):
        raise RuntimeError("numerical trouble: optimal point violates variable bounds")


def simplex_solve(
    problem: LpProblem,
    max_rows: int = MAX_ROWS_DEFAULT,
    max_vars: int = MAX_VARS_DEFAULT,
    max_iter: Optional[int] = None,
) -> LpSolution:
    """Solve an LpProblem, returning an optimal basic solution when one exists.

    Raises :class:`LpSizeError` when the problem exceeds ``max_rows`` or
    ``max_vars``.  Optimal solutions satisfy every original constraint within
    1e-7 (checked; numerical failure raises RuntimeError).
    """
    if problem.n_rows > max_rows or problem.n_vars > max_vars:
        raise LpSizeError(
            f"problem is {problem.n_rows} rows x {problem.n_vars} vars, "
            f"limits are {max_rows} x {max_vars}"
        )
    std = _Standardized(problem)
    A, b, rels = std.A, std.b, std.relations
    m, n = A.shape

    neg = b < 0
    if neg.any():
        A = A.copy()
        b = b.copy()
        A[neg] *= -1.0
        b[neg] = -b[neg]
        rels = [
            {"<=": ">=", ">=": "<=", "=": "="}[r] if flip else r
            for r, flip in zip(rels, neg)
        ]

    slack_rows = [i for i, r in enumerate(rels) if r != "="]
    art_rows = [i for i, r in enumerate(rels) if r != "<="]
    n_slack = len(slack_rows)
    n_art = len(art_rows)
    total = n + n_slack + n_art

    big = (m + 1) * (total + 1) > TABLEAU_LIMIT
    order = "F" if big else "C"
    full = np.zeros((m, total), order=order)
    full[:, :n] = A
    basis = np.empty(m, dtype=int)
    for k, i in enumerate(slack_rows):
        full[i, n + k] = 1.0 if rels[i] == "<=" else -1.0
        if rels[i] == "<=":
            basis[i] = n + k
    art_cols = np.empty(n_art, dtype=int)
    for k, i in enumerate(art_rows):
        col = n + n_slack + k
        full[i, col] = 1.0
        basis[i] = col
        art_cols[k] = col

    if max_iter is None:
        max_iter = max(200, 100 * (m + 1))
    allowed = np.ones(total, dtype=bool)
    phase2_costs = np.concatenate([std.c, np.zeros(n_slack + n_art)])
    iterations = 0
    engine = _Revised(full, b) if big else None
    if big:
        log.debug("simplex: revised engine for %d x %d standard form", m, total)

    if big:
        # relax "<=" rows by tiny distinct amounts: degenerate vertices
        # disappear and the pivot count collapses; the dual cleanup below
        # restores the exact right-hand side afterwards
        relax = np.array([r == "<=" for r in rels])
        scale = 1e-4 * (1.0 + float(np.abs(b).max(initial=0.0)))
        jitter = np.random.default_rng(20240801).uniform(0.5, 1.5, m)
        b_relaxed = b + np.where(relax, scale * jitter, 0.0)
        engine.b = b_relaxed
        if n_art:
            costs1 = np.zeros(total)
            costs1[art_cols] = 1.0
            status, it = engine.run(costs1, basis, allowed, max_iter)
            iterations += it
            feas = float(costs1[basis] @ engine.x_B)
            if status != "optimal" or feas > FEAS_TOL * (1.0 + float(np.abs(b).max(initial=0.0))):
                return LpSolution("infeasible", None, None, iterations)
            engine.drive_out_artificials(basis, art_cols)
            allowed[art_cols] = False
        status, it = engine.run(phase2_costs, basis, allowed, max_iter)
        iterations += it
        if status == "unbounded":
            return LpSolution("unbounded", None, None, iterations)
        iterations += engine.dual_cleanup(phase2_costs, basis, allowed, b, max_iter)
        x_std = np.zeros(total)
        x_std[basis] = engine.x_B
    else:
        T = np.zeros((m + 1, total + 1))
        T[:m, :total] = full
        T[:m, -1] = b
        if n_art:
            costs1 = np.zeros(total)
            costs1[art_cols] = 1.0
            T[-1, :-1] = costs1
            T[-1, -1] = 0.0
            T[-1] -= costs1[basis] @ T[:m]
            status, it = _run_tableau(T, basis, allowed, max_iter)
            iterations += it
            phase1 = -T[-1, -1]
            if status != "optimal" or phase1 > FEAS_TOL * (1.0 + float(np.abs(b).max(initial=0.0))):
                return LpSolution("infeasible", None, None, iterations)
            # drive leftover artificials out of the basis where possible
            art_set = set(art_cols.tolist())
            for r in range(m):
                if basis[r] in art_set:
                    row = T[r, :-1].copy()
                    row[art_cols] = 0.0
                    cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                    if cand.size:
                        j = int(cand[0])
                        T[r] /= T[r, j]
                        piv = T[r].copy()
                        col = T[:, j].copy()
                        col[r] = 0.0
                        T -= np.outer(col, piv)
                        T[:, j] = 0.0
                        T[r, j] = 1.0
                        basis[r] = j
            allowed[art_cols] = False
        T[-1, :-1] = phase2_costs
        T[-1, -1] = 0.0
        T[-1] -= phase2_costs[basis] @ T[:m]
        status, it = _run_tableau(T, basis, allowed, max_iter)
        iterations += it
        if status == "unbounded":
            return LpSolution("unbounded", None, None, iterations)
        x_std = np.zeros(total)
        x_std[basis] = T[:m, -1]

    x = std.recover(x_std[: std.c.size])
    value = float(problem.objective @ x)
    _certify(problem, x)
    log.debug("simplex: optimal value %.12g after %d iterations", value, iterations)
    return LpSolution("optimal", value, x, iterations)
