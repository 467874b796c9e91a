import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmrfba.lp import (
    INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, LpProblem, SolverOptions,
    enumerate_vertices, solve,
)

from conftest import random_lp


def lp(c, A=None, b=None, lower=None, upper=None):
    c = np.asarray(c, float)
    n = c.size
    A = np.zeros((0, n)) if A is None else np.asarray(A, float)
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, float)
    lower = np.zeros(n) if lower is None else np.asarray(lower, float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, float)
    return LpProblem(c, A, b, lower, upper)


def oracle_optimum(problem):
    vertices = enumerate_vertices(problem)
    return max(val for _, val in vertices) if vertices else None


# Chvatal's cycling example, standard form with slacks.
CYCLING = lp([10, -57, -9, -24, 0, 0, 0],
             [[0.5, -5.5, -2.5, 9, 1, 0, 0],
              [0.5, -1.5, -0.5, 1, 0, 1, 0],
              [1, 0, 0, 0, 0, 0, 1]],
             [0, 0, 1])


def test_single_bounded_variable():
    sol = solve(lp([1.0], upper=[5.0]))
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(5.0, abs=1e-12)
    np.testing.assert_allclose(sol.values, [5.0])


def test_contradictory_rows_are_infeasible():
    sol = solve(lp([1.0], [[1.0], [1.0]], [1.0, 2.0], lower=[-np.inf]))
    assert sol.status == INFEASIBLE
    assert sol.values is None and sol.objective_value is None


def test_improving_ray_is_unbounded():
    assert solve(lp([1.0])).status == UNBOUNDED


def test_free_variables():
    sol = solve(lp([1.0, -1.0], [[1.0, 1.0]], [3.0], lower=[-np.inf, -np.inf], upper=[2.0, np.inf]))
    assert sol.status == OPTIMAL
    np.testing.assert_allclose(sol.values, [2.0, 1.0], atol=1e-12)


def test_random_problems_match_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(250):
        problem = random_lp(rng)
        best = oracle_optimum(problem)
        sol = solve(problem)
        if best is None:
            assert sol.status == INFEASIBLE
        else:
            assert sol.status == OPTIMAL
            assert abs(sol.objective_value - best) <= 1e-8
            assert problem.violation(sol.values) <= 1e-9


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_oracle_equivalence_property(seed):
    problem = random_lp(np.random.default_rng(seed))
    best = oracle_optimum(problem)
    sol = solve(problem)
    if best is None:
        assert sol.status == INFEASIBLE
        return
    assert sol.status == OPTIMAL
    assert abs(sol.objective_value - best) <= 1e-8
    assert problem.violation(sol.values) <= SolverOptions().eps_feas
    assert abs(sol.objective_value - problem.objective @ sol.values) <= SolverOptions().eps_obj


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 10.0]))
@settings(max_examples=100, deadline=None)
def test_positive_scaling_keeps_vertex(seed, alpha):
    problem = random_lp(np.random.default_rng(seed))
    base = solve(problem)
    scaled = solve(LpProblem(alpha * problem.objective, problem.eq_matrix, problem.eq_rhs,
                             problem.lower, problem.upper))
    assert scaled.status == base.status
    if base.optimal:
        np.testing.assert_array_equal(scaled.values, base.values)
        assert abs(scaled.objective_value - alpha * base.objective_value) <= 1e-8 * alpha


def test_unit_square_vertices():
    box = lp([0.0, 0.0], upper=[1.0, 1.0])
    assert len(enumerate_vertices(box)) == 4


def test_segment_vertices():
    seg = lp([0.0, 0.0], [[1.0, 1.0]], [1.0], upper=[1.0, 1.0])
    points = sorted(tuple(v) for v, _ in enumerate_vertices(seg))
    np.testing.assert_allclose(points, [(0.0, 1.0), (1.0, 0.0)], atol=1e-12)


def test_duplicate_row_leaves_vertices_unchanged():
    A = [[1.0, 1.0, 1.0], [1.0, -1.0, 0.0]]
    single = lp([1.0, 2.0, 3.0], A, [2.0, 0.0], upper=[2.0, 2.0, 2.0])
    doubled = lp([1.0, 2.0, 3.0], A + [A[0]], [2.0, 0.0, 2.0], upper=[2.0, 2.0, 2.0])
    a = [v for v, _ in enumerate_vertices(single)]
    b = [v for v, _ in enumerate_vertices(doubled)]
    assert len(a) == len(b) > 0
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_oracle_guard():
    with pytest.raises(ValueError, match="refuses"):
        enumerate_vertices(lp(np.zeros(13), upper=np.ones(13)))
    with pytest.raises(ValueError, match="finite"):
        enumerate_vertices(lp([1.0]))


def test_naive_rule_stalls_on_cycling_example():
    sol = solve(CYCLING, SolverOptions(anti_cycling=False))
    assert sol.status == ITERATION_LIMIT
    assert sol.iterations > 0


def test_anti_cycling_terminates():
    sol = solve(CYCLING)
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(1.0, abs=1e-9)


def test_iteration_limit_is_distinct_status():
    sol = solve(CYCLING, SolverOptions(max_iterations=1))
    assert sol.status == ITERATION_LIMIT
    assert sol.iterations == 1


def test_deterministic():
    problem = random_lp(np.random.default_rng(5))
    a, b = solve(problem), solve(problem)
    assert a.status == b.status and a.iterations == b.iterations
    if a.optimal:
        np.testing.assert_array_equal(a.values, b.values)


@pytest.mark.parametrize("kwargs", [
    {"lower": [1.0], "upper": [0.0]},
    {"lower": [np.nan], "upper": [1.0]},
])
def test_problem_invariants(kwargs):
    with pytest.raises(ValueError):
        lp([1.0], **kwargs)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        LpProblem(np.ones(2), np.ones((1, 3)), np.zeros(1), np.zeros(2), np.ones(2))


def test_options_reject_nonpositive_tolerance():
    with pytest.raises(ValueError):
        SolverOptions(eps_feas=0.0)
