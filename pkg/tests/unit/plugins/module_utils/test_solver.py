# -*- coding: utf-8 -*-
import numpy as np
import pytest

from plugins.module_utils.errors import ConfigurationError, ConstraintKindError
from plugins.module_utils.linalg import residual_vector
from plugins.module_utils.orthogonality import build_exact_graph
from plugins.module_utils.problems import gen_box, gen_diagonal, gen_halfspaces, gen_random_consistent
from plugins.module_utils.selection import RuleConfig, make_rng
from plugins.module_utils.solver import (TRACE_HEADER, StoppingCriteria, closest_solution, feasibility_gap,
                                         kaczmarz_inequality_step, kaczmarz_step, solve, solve_coordinate_descent,
                                         step_identity_check)


def halfspace(make_system):
    return make_system([[1.0, 0.0]], rhs=[1.0], kinds=[1])


@pytest.mark.parametrize("rows, rhs, x, i, expected", [
    (np.eye(2), [1.0, 2.0], [0.0, 0.0], 0, [1.0, 0.0]),
    ([[1.0, 1.0]], [3.0], [0.0, 0.0], 0, [1.5, 1.5]),
    (np.eye(2), [1.0, 2.0], [1.0, 7.0], 0, [1.0, 7.0]),
])
def test_kaczmarz_step(make_system, rows, rhs, x, i, expected):
    system = make_system(rows, rhs=rhs)
    new = kaczmarz_step(system, np.array(x), i)
    assert new.tolist() == expected
    assert system.matrix.row_dot(i, new) == pytest.approx(system.rhs[i], abs=1e-12)


def test_kaczmarz_step_leaves_input_untouched(identity3):
    x = np.zeros(3)
    kaczmarz_step(identity3, x, 1)
    assert not x.any()


def test_kaczmarz_step_rejects_inequalities_and_bad_rows(make_system):
    system = halfspace(make_system)
    with pytest.raises(ConstraintKindError):
        kaczmarz_step(system, np.zeros(2), 0)
    with pytest.raises(IndexError):
        kaczmarz_inequality_step(system, np.zeros(2), 1)


@pytest.mark.parametrize("x, expected", [
    ([2.0, 0.0], [1.0, 0.0]),
    ([0.5, 0.0], [0.5, 0.0]),
])
def test_kaczmarz_inequality_step(make_system, x, expected):
    assert kaczmarz_inequality_step(halfspace(make_system), np.array(x), 0).tolist() == expected


def test_inequality_step_on_equality_rows_is_a_kaczmarz_step(make_system):
    system = make_system([[1.0, 1.0]], rhs=[3.0])
    assert kaczmarz_inequality_step(system, np.zeros(2), 0).tolist() == kaczmarz_step(system, np.zeros(2), 0).tolist()


def test_step_only_moves_the_row_support():
    system = gen_random_consistent(30, 15, 0.2, seed=9)
    rng = make_rng(1)
    x = rng.standard_normal(system.n)
    for i in range(system.m):
        new = kaczmarz_step(system, x, i)
        outside = np.setdiff1d(np.arange(system.n), system.matrix.row(i)[0])
        assert np.array_equal(new[outside], x[outside])


def test_step_identity_on_identity(identity3):
    x = np.array([5.0, 5.0, 5.0])
    for i in range(3):
        new = kaczmarz_step(identity3, x, i)
        assert step_identity_check(identity3, x, new, i, identity3.reference_solution) == pytest.approx(0.0, abs=1e-13)
        x = new
    assert step_identity_check(identity3, x, x, 0, identity3.reference_solution) == 0.0


@pytest.mark.slow
def test_step_identity_on_random_consistent_systems():
    for seed in range(100):
        system = gen_random_consistent(50, 20, 1.0, seed=seed)
        z = system.reference_solution
        rng = make_rng(seed)
        x = np.zeros(system.n)
        for i in rng.integers(system.m, size=1000):
            new = kaczmarz_step(system, x, int(i))
            d = float(np.sum((x - z) ** 2))
            assert step_identity_check(system, x, new, int(i), z) <= 1e-10 * (1 + d)
            x = new


def test_feasibility_gap(make_system):
    system = halfspace(make_system)
    assert feasibility_gap(system, np.array([0.0, 4.0])) == (0.0, 0.0)
    assert feasibility_gap(system, np.array([3.0, 0.0])) == (2.0, 2.0)
    mixed = make_system(np.eye(2), rhs=[1.0, 1.0], kinds=[0, 1])
    gap = feasibility_gap(mixed, np.array([3.0, 5.0]))
    assert gap.gap == 4.0
    assert gap.distance == pytest.approx(np.sqrt(20.0))
    general = gen_halfspaces(6, 3, seed=0)
    assert feasibility_gap(general, general.reference_solution).distance is None


def test_stopping_criteria_needs_a_bound():
    with pytest.raises(ConfigurationError):
        StoppingCriteria(max_iterations=None)
    with pytest.raises(ConfigurationError):
        StoppingCriteria(max_iterations=-1)


def test_mr_on_identity_fixes_one_row_per_step(identity3):
    x, trace = solve(identity3, RuleConfig.parse("mr"), stop=StoppingCriteria(max_iterations=None, residual_tolerance=1e-12))
    assert len(trace) == 3
    assert trace.stop_reason == "residual_tolerance"
    assert trace.rows.tolist() == [2, 1, 0]
    np.testing.assert_array_equal(x, identity3.reference_solution)


@pytest.mark.parametrize("rule", ["mr", "md"])
@pytest.mark.parametrize("m", [5, 50, 500])
def test_greedy_rules_finish_equal_spectrum_diagonals_in_m_steps(rule, m):
    system = gen_diagonal(np.full(m, 2.0), seed=m)
    x, trace = solve(system, RuleConfig.parse(rule), stop=StoppingCriteria(max_iterations=m, residual_tolerance=1e-12))
    r = residual_vector(system, x)
    assert np.max(np.abs(r)) <= 1e-12
    assert len(trace) <= m


@pytest.mark.slow
def test_uniform_rule_collects_coupons():
    m = 20
    system = gen_diagonal(np.ones(m), seed=0, reference=np.arange(1.0, m + 1))
    stop = StoppingCriteria(max_iterations=None, residual_tolerance=0.0)
    counts = [len(solve(system, RuleConfig.parse("u", seed=seed), stop=stop)[1]) for seed in range(4000)]
    expected = m * np.sum(1.0 / np.arange(1, m + 1))
    assert np.mean(counts) == pytest.approx(expected, rel=0.05)


def test_runs_are_deterministic():
    system = gen_random_consistent(40, 10, 0.5, seed=3)
    for text in ("u", "nu", "rp", "approx-mult:0.3"):
        _, first = solve(system, RuleConfig.parse(text, seed=11), stop=StoppingCriteria(200))
        _, second = solve(system, RuleConfig.parse(text, seed=11), stop=StoppingCriteria(200))
        assert first.rows.tolist() == second.rows.tolist()
        np.testing.assert_array_equal(first.sq_error, second.sq_error)


@pytest.mark.parametrize("text", ["c", "u", "nu", "mr", "md", "hybrid", "approx-add:0.5"])
def test_distance_never_increases_on_equality_systems(text):
    system = gen_random_consistent(50, 20, 1.0, seed=2)
    _, trace = solve(system, RuleConfig.parse(text, seed=5), stop=StoppingCriteria(500))
    steps = np.diff(np.concatenate([[trace.initial_sq_dist], trace.sq_dist]))
    assert np.all(steps <= 1e-12 * trace.initial_sq_dist)


@pytest.mark.parametrize("text", ["c", "u", "mr", "md"])
def test_box_violation_and_distance_never_increase(text):
    for seed in range(20):
        system = gen_box(4, seed=seed)
        _, trace = solve(system, RuleConfig.parse(text, seed=seed), stop=StoppingCriteria(200))
        assert trace.inequality and not trace.distance_is_surrogate
        for column, first in ((trace.sq_error, trace.initial_sq_error), (trace.sq_dist, trace.initial_sq_dist)):
            assert np.all(np.diff(np.concatenate([[first], column])) <= 1e-12)
        assert trace.sq_dist[-1] <= 1e-20


def test_single_halfspace_distance_is_exact(make_system):
    system = halfspace(make_system)
    x, trace = solve(system, RuleConfig.parse("c"), x0=np.array([3.0, 1.0]), stop=StoppingCriteria(3))
    assert trace.initial_sq_dist == 4.0
    assert trace.sq_dist.tolist() == [0.0, 0.0, 0.0]
    assert x.tolist() == [1.0, 1.0]


@pytest.mark.slow
def test_projections_approach_every_feasible_point():
    for seed in range(100):
        system = gen_halfspaces(30, 5, seed=seed)
        point = system.reference_solution
        x = make_rng(seed).standard_normal(system.n) * 5
        prev = np.linalg.norm(x - point)
        for _ in range(200):
            r = residual_vector(system, x)
            i = int(np.argmax(np.maximum(r, 0.0) / system.norms.norms))
            x = kaczmarz_inequality_step(system, x, i)
            dist = np.linalg.norm(x - point)
            assert dist <= prev + 1e-12 * (1 + prev)
            prev = dist


def test_adaptive_rule_stops_once_nothing_is_selectable(identity3):
    graph = build_exact_graph(identity3)
    x, trace = solve(identity3, RuleConfig.parse("au", seed=2), graph=graph, stop=StoppingCriteria(50))
    assert len(trace) == 3
    assert trace.stop_reason == "no_selectable_rows"
    assert sorted(trace.rows.tolist()) == [0, 1, 2]
    assert trace.checkpoints[0].all()
    np.testing.assert_allclose(x, identity3.reference_solution)


def test_adaptive_rules_need_a_graph(identity3):
    with pytest.raises(ConfigurationError):
        solve(identity3, RuleConfig.parse("anu"))
    with pytest.raises(ConfigurationError):
        solve(identity3, RuleConfig.parse("mr"), propagation="graph")


def test_graph_propagation_matches_sparse_propagation():
    system = gen_random_consistent(20, 8, 0.3, seed=4)
    graph = build_exact_graph(system)
    _, sparse = solve(system, RuleConfig.parse("md"), stop=StoppingCriteria(20))
    _, by_graph = solve(system, RuleConfig.parse("md"), graph=graph, propagation="graph", stop=StoppingCriteria(20))
    assert sparse.rows.tolist() == by_graph.rows.tolist()
    np.testing.assert_allclose(sparse.sq_dist, by_graph.sq_dist, rtol=1e-6, atol=1e-18)


def test_time_budget_is_checked_on_clock_ticks(identity3):
    _, trace = solve(identity3, RuleConfig.parse("u"), stop=StoppingCriteria(max_iterations=None, time_budget=1e-9))
    assert len(trace) == 100
    assert trace.stop_reason == "time_budget"
    assert np.all(np.diff(trace.wall_ns) >= 0)


def test_trace_csv(tmp_path, identity3):
    _, trace = solve(identity3, RuleConfig.parse("c"), stop=StoppingCriteria(4))
    path = trace.to_csv(str(tmp_path / "c.csv"), with_passes=True)
    lines = open(path).read().splitlines()
    assert lines[0] == TRACE_HEADER + ",effective_passes"
    assert len(lines) == 5
    first = lines[1].split(",")
    assert first[:2] == ["1", "0"]
    assert float(first[3]) == pytest.approx(trace.sq_error[0] / trace.initial_sq_error)
    assert float(first[-1]) == pytest.approx(1.0 / 3)
    assert trace.final()["sq_error_norm"] == 0.0


def test_rank_deficient_distance_uses_the_closest_solution(make_system):
    system = make_system([[1.0, 1.0]], rhs=[2.0])
    np.testing.assert_allclose(closest_solution(system), [1.0, 1.0])
    np.testing.assert_allclose(closest_solution(system, np.array([3.0, 0.0])), [2.5, -0.5])


def test_coordinate_descent_matches_mr_on_identity(make_system):
    system = make_system(np.eye(4), rhs=[1.0, -3.0, 2.0, 5.0], reference=[1.0, -3.0, 2.0, 5.0])
    _, kacz = solve(system, RuleConfig.parse("mr"), stop=StoppingCriteria(4))
    _, cd = solve_coordinate_descent(system, "gs", stop=StoppingCriteria(4))
    assert cd.rule == "CD-GS"
    np.testing.assert_array_equal(kacz.sq_error, cd.sq_error)
    np.testing.assert_array_equal(kacz.effective_passes, cd.effective_passes)
    assert kacz.rows.tolist() == cd.rows.tolist() == [3, 1, 2, 0]


def test_coordinate_descent_needs_equalities():
    with pytest.raises(ConstraintKindError):
        solve_coordinate_descent(gen_box(2, seed=0), "gsl")
