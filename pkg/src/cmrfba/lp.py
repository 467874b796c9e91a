"""Maximize-form linear programs with equality rows and box bounds.

``solve`` runs a two-phase bounded-variable primal simplex on a dense
tableau. Pricing is Dantzig's largest reduced cost; after ``m`` consecutive
pivots without objective progress it falls back to Bland's rule until the
objective moves again. Ties in pricing and in the ratio test go to the
lowest variable index, so results are deterministic.

``enumerate_vertices`` is a brute-force oracle over basic feasible points
for small, fully bounded problems. It shares no code with the simplex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from numba import njit

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

_STATUS = (OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT)

MAX_ORACLE_VARIABLES = 12

_PIVOT_TOL = 1e-9
_TIE_REL = 1e-9


@dataclass
class LpProblem:
    """maximize ``objective @ v`` s.t. ``eq_matrix @ v == eq_rhs``, ``lower <= v <= upper``."""

    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        n = self.objective.shape[0]
        self.eq_matrix = np.asarray(self.eq_matrix, dtype=float).reshape(-1, n)
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=float).reshape(-1)
        self.lower = np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        m = self.eq_matrix.shape[0]
        if self.eq_rhs.shape[0] != m:
            raise ValueError(f"eq_rhs has length {self.eq_rhs.shape[0]}, expected {m}")
        if self.lower.shape[0] != n or self.upper.shape[0] != n:
            raise ValueError("bound vectors must match the objective length")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds must not be NaN")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise ValueError("bounds admit no finite value")
        if not (np.all(np.isfinite(self.objective)) and np.all(np.isfinite(self.eq_matrix))
                and np.all(np.isfinite(self.eq_rhs))):
            raise ValueError("objective and constraint data must be finite")

    @property
    def n(self) -> int:
        return self.objective.shape[0]

    @property
    def m(self) -> int:
        return self.eq_matrix.shape[0]

    def violation(self, v: np.ndarray) -> float:
        """Max-norm violation of the equality rows and the bounds at ``v``."""
        worst = 0.0
        if self.m:
            worst = float(np.max(np.abs(self.eq_matrix @ v - self.eq_rhs)))
        if self.n:
            worst = max(worst, float(np.max(self.lower - v)), float(np.max(v - self.upper)))
        return max(worst, 0.0)


@dataclass
class LpSolution:
    status: str
    objective_value: Optional[float] = None
    values: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass(frozen=True)
class SolverOptions:
    eps_feas: float = 1e-9
    eps_obj: float = 1e-8
    max_iterations: Optional[int] = None  # default 100 * (n + m)
    anti_cycling: bool = True

    def __post_init__(self):
        if not (self.eps_feas > 0 and self.eps_obj > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")


@njit(cache=True)
def _pivot(T, d, r, q):
    m, N = T.shape
    piv = T[r, q]
    for j in range(N):
        T[r, j] /= piv
    T[r, q] = 1.0
    for i in range(m):
        if i != r:
            f = T[i, q]
            if f != 0.0:
                for j in range(N):
                    T[i, j] -= f * T[r, j]
                T[i, q] = 0.0
    f = d[q]
    if f != 0.0:
        for j in range(N):
            d[j] -= f * T[r, j]
        d[q] = 0.0


@njit(cache=True)
def _reduced_costs(T, cost, basis):
    m, N = T.shape
    d = cost.copy()
    for i in range(m):
        cb = cost[basis[i]]
        if cb != 0.0:
            for j in range(N):
                d[j] -= cb * T[i, j]
    for i in range(m):
        d[basis[i]] = 0.0
    return d


@njit(cache=True)
def _iterate(T, d, x, lo, hi, state, basis, n, tol_d, max_iter, it, anti_cycling):
    """Primal simplex pivots until optimal (0), unbounded (2) or out of iterations (3)."""
    m, N = T.shape
    stall = 0
    bland = False
    stall_limit = max(m, 1)
    while True:
        # pricing
        q = -1
        best = 0.0
        if bland:
            for j in range(n):
                if state[j] < 0 or not lo[j] < hi[j]:
                    continue
                dj = d[j]
                if (state[j] == 0 and dj > tol_d) or (state[j] == 1 and dj < -tol_d) \
                        or (state[j] == 2 and abs(dj) > tol_d):
                    q = j
                    best = abs(dj)
                    break
        else:
            for j in range(n):
                if state[j] < 0 or not lo[j] < hi[j]:
                    continue
                dj = d[j]
                if (state[j] == 0 and dj > tol_d) or (state[j] == 1 and dj < -tol_d) \
                        or (state[j] == 2 and abs(dj) > tol_d):
                    if abs(dj) > best:
                        best = abs(dj)
            if best > 0.0:
                cut = best * (1.0 - 1e-9)
                for j in range(n):
                    if state[j] < 0 or not lo[j] < hi[j]:
                        continue
                    dj = d[j]
                    if (state[j] == 0 and dj > tol_d) or (state[j] == 1 and dj < -tol_d) \
                            or (state[j] == 2 and abs(dj) > tol_d):
                        if abs(dj) >= cut:
                            q = j
                            break
        if q < 0:
            return 0, it
        if it >= max_iter:
            return 3, it
        it += 1

        delta = 1.0 if d[q] > 0.0 else -1.0

        # ratio test: smallest step, ties to the lowest basic variable index
        tmin = np.inf
        for i in range(m):
            alpha = delta * T[i, q]
            k = basis[i]
            if alpha > 1e-9:
                if lo[k] == -np.inf:
                    continue
                ratio = (x[k] - lo[k]) / alpha
            elif alpha < -1e-9:
                if hi[k] == np.inf:
                    continue
                ratio = (hi[k] - x[k]) / (-alpha)
            else:
                continue
            if ratio < 0.0:
                ratio = 0.0
            if ratio < tmin:
                tmin = ratio
        r = -1
        if tmin < np.inf:
            cut = tmin + 1e-12 * (1.0 + tmin)
            for i in range(m):
                alpha = delta * T[i, q]
                k = basis[i]
                if alpha > 1e-9:
                    if lo[k] == -np.inf:
                        continue
                    ratio = (x[k] - lo[k]) / alpha
                elif alpha < -1e-9:
                    if hi[k] == np.inf:
                        continue
                    ratio = (hi[k] - x[k]) / (-alpha)
                else:
                    continue
                if ratio <= cut and (r < 0 or k < basis[r]):
                    r = i

        span = hi[q] - lo[q]
        flip = span < np.inf and span <= tmin
        if not flip and r < 0:
            return 2, it

        t = span if flip else tmin
        if t > 0.0:
            for i in range(m):
                a = T[i, q]
                if a != 0.0:
                    x[basis[i]] -= delta * t * a
            x[q] += delta * t

        gain = best * t
        if gain > 1e-13:
            stall = 0
            bland = False
        else:
            stall += 1
            if anti_cycling and stall >= stall_limit:
                bland = True

        if flip:
            if delta > 0:
                x[q] = hi[q]
                state[q] = 1
            else:
                x[q] = lo[q]
                state[q] = 0
            continue

        k = basis[r]
        if delta * T[r, q] > 0:
            x[k] = lo[k]
            state[k] = 0
        else:
            x[k] = hi[k]
            state[k] = 1
        _pivot(T, d, r, q)
        basis[r] = q
        state[q] = -1


@njit(cache=True)
def _simplex(A, b, c, lower, upper, eps_feas, eps_obj, max_iter, anti_cycling):
    m, n = A.shape
    N = n + m
    T = np.zeros((m, N))
    lo = np.empty(N)
    hi = np.empty(N)
    x = np.zeros(N)
    state = np.zeros(N, dtype=np.int64)
    signs = np.ones(m)
    basis = np.empty(m, dtype=np.int64)

    for j in range(n):
        lo[j] = lower[j]
        hi[j] = upper[j]
        if lower[j] > -np.inf:
            x[j] = lower[j]
            state[j] = 0
        elif upper[j] < np.inf:
            x[j] = upper[j]
            state[j] = 1
        else:
            state[j] = 2

    scale = 1.0
    for i in range(m):
        res = b[i]
        for j in range(n):
            res -= A[i, j] * x[j]
        if res < 0.0:
            signs[i] = -1.0
        for j in range(n):
            T[i, j] = signs[i] * A[i, j]
        T[i, n + i] = 1.0
        x[n + i] = signs[i] * res
        lo[n + i] = 0.0
        hi[n + i] = np.inf
        state[n + i] = -1
        basis[i] = n + i
        if abs(res) > scale:
            scale = abs(res)

    # crash: singleton columns replace artificials where that stays in bounds
    count = np.zeros(n, dtype=np.int64)
    for j in range(n):
        for i in range(m):
            if A[i, j] != 0.0:
                count[j] += 1
    for i in range(m):
        for j in range(n):
            if count[j] != 1 or state[j] < 0 or T[i, j] == 0.0:
                continue
            target = x[j] + x[n + i] / T[i, j]
            if lo[j] - eps_feas <= target <= hi[j] + eps_feas:
                piv = T[i, j]
                for jj in range(N):
                    T[i, jj] /= piv
                x[j] = min(max(target, lo[j]), hi[j])
                x[n + i] = 0.0
                hi[n + i] = 0.0
                state[n + i] = 0
                state[j] = -1
                basis[i] = j
                break

    # phase 1: drive the artificials to zero
    cost = np.zeros(N)
    for i in range(m):
        cost[n + i] = -1.0
    d = _reduced_costs(T, cost, basis)
    status, it = _iterate(T, d, x, lo, hi, state, basis, n, eps_obj, max_iter, 0, anti_cycling)
    if status == 3:
        return 3, x, it, basis, signs
    infeas = 0.0
    for i in range(m):
        infeas += x[n + i]
    if infeas > eps_feas * scale:
        return 1, x, it, basis, signs

    for i in range(m):
        x[n + i] = 0.0
        hi[n + i] = 0.0
        if state[n + i] >= 0:
            state[n + i] = 0
    zero_d = np.zeros(N)
    for r in range(m):
        if basis[r] < n:
            continue
        q = -1
        big = 1e-7
        for j in range(n):
            if state[j] >= 0 and abs(T[r, j]) > big:
                big = abs(T[r, j])
                q = j
        if q >= 0:
            k = basis[r]
            _pivot(T, zero_d, r, q)
            basis[r] = q
            state[q] = -1
            state[k] = 0

    # phase 2
    cmax = 0.0
    for j in range(n):
        if abs(c[j]) > cmax:
            cmax = abs(c[j])
    cost = np.zeros(N)
    if cmax > 0.0:
        for j in range(n):
            cost[j] = c[j] / cmax
    d = _reduced_costs(T, cost, basis)
    status, it = _iterate(T, d, x, lo, hi, state, basis, n, eps_obj, max_iter, it, anti_cycling)
    return status, x, it, basis, signs


def _refine(problem: LpProblem, x: np.ndarray, basis: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Recompute basic values from the original data to shed pivoting drift."""
    m, n = problem.m, problem.n
    if m == 0:
        return x[:n].copy()
    M = np.hstack([signs[:, None] * problem.eq_matrix, np.eye(m)])
    rhs = signs * problem.eq_rhs
    nonbasic = np.ones(n + m, dtype=bool)
    nonbasic[basis] = False
    try:
        xb = np.linalg.solve(M[:, basis], rhs - M[:, nonbasic] @ x[nonbasic])
    except np.linalg.LinAlgError:
        return x[:n].copy()
    out = x.copy()
    out[basis] = xb
    return out[:n]


def solve(problem: LpProblem, options: Optional[SolverOptions] = None) -> LpSolution:
    """Maximize ``problem`` and classify it as optimal, infeasible or unbounded.

    Runs out of pivots report ``iteration_limit`` together with the count.
    """
    options = options or SolverOptions()
    max_iter = options.max_iterations
    if max_iter is None:
        max_iter = 100 * (problem.n + problem.m)
    code, x, iterations, basis, signs = _simplex(
        problem.eq_matrix, problem.eq_rhs, problem.objective, problem.lower, problem.upper,
        options.eps_feas, options.eps_obj, max_iter, options.anti_cycling)
    status = _STATUS[code]
    if status != OPTIMAL:
        return LpSolution(status, iterations=int(iterations))
    v = _refine(problem, x, basis, signs)
    return LpSolution(OPTIMAL, float(problem.objective @ v), v, int(iterations))


def enumerate_vertices(problem: LpProblem, tol: float = 1e-9) -> List[Tuple[np.ndarray, float]]:
    """All basic feasible points of a bounded problem, with objective values.

    A vertex fixes every variable outside a column basis of the equality
    matrix at one of its bounds and solves for the rest. Duplicates are
    merged, so redundant equality rows do not change the result.
    """
    n = problem.n
    if n > MAX_ORACLE_VARIABLES:
        raise ValueError(f"vertex enumeration refuses n={n} > {MAX_ORACLE_VARIABLES}")
    if not (np.all(np.isfinite(problem.lower)) and np.all(np.isfinite(problem.upper))):
        raise ValueError("vertex enumeration needs finite bounds")
    A, b = problem.eq_matrix, problem.eq_rhs
    rank = int(np.linalg.matrix_rank(A)) if problem.m else 0
    found = {}
    for free in itertools.combinations(range(n), rank):
        free = list(free)
        fixed = [j for j in range(n) if j not in free]
        if rank and np.linalg.matrix_rank(A[:, free]) < rank:
            continue
        for choice in itertools.product((0, 1), repeat=len(fixed)):
            v = np.empty(n)
            for j, side in zip(fixed, choice):
                v[j] = problem.upper[j] if side else problem.lower[j]
            if rank:
                rhs = b - A[:, fixed] @ v[fixed]
                sol, *_ = np.linalg.lstsq(A[:, free], rhs, rcond=None)
                v[free] = sol
            if problem.m and np.max(np.abs(A @ v - b)) > tol * (1 + np.max(np.abs(b))):
                continue
            if np.any(v < problem.lower - tol) or np.any(v > problem.upper + tol):
                continue
            key = tuple(np.round(v, 9) + 0.0)
            if key not in found:
                found[key] = (v, float(problem.objective @ v))
    return [found[k] for k in sorted(found)]
