# -*- coding: utf-8 -*-
import numpy as np
import pytest

from plugins.module_utils.errors import EXIT_USAGE, ConfigurationError, RateOrderingError, TraceError
from plugins.module_utils.orthogonality import build_exact_graph
from plugins.module_utils.problems import gen_box, gen_diagonal, gen_lattice, gen_random_consistent
from plugins.module_utils.rates import (DiagonalSpectrum, _assert_ordering, adaptive_factor, approximate_factor,
                                        bounds_diagonal, bounds_general, multi_step_bound_check, restricted_subspace,
                                        validate_trace)
from plugins.module_utils.selection import RuleConfig, make_rng
from plugins.module_utils.solver import StoppingCriteria, solve

TRIANGLE = [[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]]
SMALL_DENSE = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]


def run(system, text, iterations, seeds=(0,), **kwargs):
    return [solve(system, RuleConfig.parse(text, seed=s), stop=StoppingCriteria(iterations), **kwargs)[1]
            for s in seeds]


def test_diagonal_closed_forms():
    bound = bounds_diagonal(DiagonalSpectrum([1.0, 2.0]))
    assert bound.u_inf == pytest.approx(0.875)
    assert bound.u_tight == pytest.approx(0.5)
    assert bound.nu == pytest.approx(0.8)
    assert bound.mr_inf == pytest.approx(0.8)
    assert bound.md == pytest.approx(0.5)
    assert bound.mr_tight(0) == pytest.approx(0.2)
    assert bound.mr_tight(1) == pytest.approx(0.8)
    assert bound.check_ordering() == []


@pytest.mark.parametrize("m", [1, 3, 10])
def test_equal_spectrum_gives_one_rate(m):
    bound = bounds_diagonal(DiagonalSpectrum(np.full(m, 3.0)))
    rates = list(bound.constants().values()) + bound.mr_tight_seq(np.arange(m)).tolist()
    np.testing.assert_allclose(rates, 1.0 - 1.0 / m, atol=1e-15)


def test_one_small_eigenvalue_orders_the_rules():
    bound = bounds_diagonal(DiagonalSpectrum([1.0, 1.0, 1.0, 1.0, 0.1]))
    tight = bound.mr_tight_seq(np.arange(5)).max()
    assert bound.u_inf > bound.nu > bound.mr_inf
    assert bound.mr_inf >= tight - 1e-15
    assert tight > bound.u_tight == bound.md


def test_diagonal_spectrum_must_be_positive():
    with pytest.raises(ConfigurationError):
        DiagonalSpectrum([1.0, 0.0])


def test_out_of_order_constants_are_rejected():
    bound = bounds_diagonal(DiagonalSpectrum([1.0, 2.0]))
    bound.md = 0.99
    with pytest.raises(RateOrderingError) as err:
        _assert_ordering(bound)
    assert err.value.exit_code == EXIT_USAGE
    assert "u_inf < md" in err.value.context["problems"]


def test_general_bounds_use_the_diagonal_closed_form(diag12):
    bound = bounds_general(diag12)
    assert bound.nu == pytest.approx(0.8)
    assert bound.u_inf == pytest.approx(0.875)
    assert not bound.substituted


@pytest.mark.parametrize("m", [2, 5])
def test_identity_bounds(make_system, m):
    bound = bounds_general(make_system(np.eye(m), rhs=np.ones(m)))
    assert bound.u_tight == pytest.approx(1 - 1 / m)
    assert bound.md == pytest.approx(1 - 1 / m)


def test_general_bounds_with_the_oracle(make_system):
    bound = bounds_general(make_system(SMALL_DENSE, reference=[1.0, 2.0]))
    assert bound.sigma_two == pytest.approx(1.0)
    assert bound.sigma_inf == pytest.approx(2 ** -0.5)
    assert bound.sigma_bar_inf == pytest.approx(2 ** -0.5)
    assert bound.u_inf == pytest.approx(1 - 1 / 6)
    assert bound.u_tight == pytest.approx(2 / 3)
    assert bound.nu == pytest.approx(0.75)
    assert bound.mr_inf == pytest.approx(0.75)
    assert bound.md == pytest.approx(0.5)
    assert not bound.substituted


@pytest.mark.parametrize("seed", range(5))
def test_wide_systems_get_substituted_lower_bounds(seed):
    system = gen_random_consistent(12, 5, 0.6, seed=seed)
    bound = bounds_general(system)
    assert bound.substituted
    assert bound.sigma_inf == pytest.approx(bound.sigma_two / np.sqrt(12))
    assert bound.check_ordering() == []
    assert bound.as_dict()["substituted"] is True


def test_star_bound_is_attached_with_a_graph():
    system = gen_lattice(3, seed=0)
    bound = bounds_general(system, graph=build_exact_graph(system))
    assert 0.0 < bound.star.geometric_mean <= 1.0
    assert "star_geometric_mean" in bound.as_dict()


def test_restricted_subspace_drops_frozen_directions():
    q = restricted_subspace(np.diag([1.0, 2.0, 3.0]), np.array([False, True, False]))
    assert q.shape == (3, 2)
    np.testing.assert_allclose(q[1], 0.0, atol=1e-12)


def test_adaptive_factors_on_diag12(diag12):
    au, anu = RuleConfig.parse("au"), RuleConfig.parse("anu")
    everything = np.array([True, True])
    assert adaptive_factor(diag12, everything, au) == pytest.approx(0.5)
    assert adaptive_factor(diag12, everything, anu) == pytest.approx(0.8)
    assert adaptive_factor(diag12, np.array([True, False]), au) == pytest.approx(0.0, abs=1e-15)
    assert adaptive_factor(diag12, np.array([False, False]), anu) == 0.0


def test_adaptive_factors_never_exceed_their_plain_counterparts():
    system = gen_lattice(3, seed=4)
    bound = bounds_general(system)
    rng = make_rng(9)
    for _ in range(30):
        mask = rng.random(system.m) < 0.6
        if mask.all() or not mask.any():
            continue
        assert adaptive_factor(system, mask, RuleConfig.parse("au")) <= bound.u_tight + 1e-12
        assert adaptive_factor(system, mask, RuleConfig.parse("anu")) <= bound.nu + 1e-12


def test_approximate_factor(diag12):
    bound = bounds_general(diag12)
    assert approximate_factor(bound, RuleConfig.parse("approx-mult:0.5"), 1) == pytest.approx(0.95)
    assert approximate_factor(bound, RuleConfig.parse("approx-mult:0.5:md"), 0) == pytest.approx(0.875)
    assert approximate_factor(bound, RuleConfig.parse("approx-mult:0.5"), 1, epsilon=0.0) == pytest.approx(0.8)


def test_md_on_diag12_stays_under_one_half(diag12):
    bound = bounds_general(diag12)
    report = validate_trace(run(diag12, "md", 10), bound, RuleConfig.parse("md"))
    assert report["passed"]
    assert report["violations"] == 0
    assert report["worst_ratio"] <= 0.5 + 1e-9


def test_mr_on_identity(make_system):
    system = make_system(np.eye(4), reference=[1.0, -2.0, 0.5, 3.0])
    bound = bounds_general(system)
    report = validate_trace(run(system, "mr", 8), bound, RuleConfig.parse("mr"))
    assert report["violations"] == 0
    assert report["worst_ratio"] <= 1 - 1 / 4 + 1e-9


@pytest.mark.parametrize("text", ["mr", "md", "hybrid", "approx-mult:0.3", "approx-mult:0.3:md",
                                  "approx-add:0.2", "approx-add:0.2:md"])
def test_greedy_rules_respect_their_bounds_on_a_dense_instance(make_system, text):
    system = make_system(SMALL_DENSE, reference=[0.7, -1.3])
    bound = bounds_general(system)
    report = validate_trace(run(system, text, 40, seeds=range(5)), bound, RuleConfig.parse(text))
    assert report["violations"] == 0, report
    assert report["steps_checked"] > 0


@pytest.mark.parametrize("text", ["mr", "md", "hybrid"])
def test_greedy_rules_respect_their_bounds_on_diagonals(text):
    system = gen_diagonal([0.5, 1.0, 1.5, 4.0], seed=3)
    bound = bounds_general(system)
    report = validate_trace(run(system, text, 10), bound, RuleConfig.parse(text))
    assert report["violations"] == 0


def test_injected_ratio_is_flagged(diag12):
    bound = bounds_general(diag12)
    traces = run(diag12, "md", 10)
    trace = traces[0]
    trace.sq_dist[0] = 1.5 * trace.initial_sq_dist
    report = validate_trace(traces, bound, RuleConfig.parse("md"))
    assert not report["passed"]
    assert report["violations"] >= 1
    assert report["worst_ratio"] == pytest.approx(1.5)


@pytest.mark.parametrize("text, limit", [("u", 0.5), ("nu", 0.8)])
def test_random_rules_in_expectation(diag12, text, limit):
    bound = bounds_general(diag12)
    report = validate_trace(run(diag12, text, 10, seeds=range(1000)), bound, RuleConfig.parse(text))
    assert report["statistical"]
    assert report["runs"] == 1000
    assert report["bound"] == pytest.approx(limit)
    assert report["passed"]
    assert report["run_mean"] <= bound.u_inf


@pytest.mark.slow
@pytest.mark.parametrize("text", ["u", "nu", "au", "anu"])
def test_random_rules_in_expectation_on_a_lattice(text):
    system = gen_lattice(3, seed=1)
    graph = build_exact_graph(system)
    bound = bounds_general(system, graph=graph)
    traces = run(system, text, 45, seeds=range(1000), graph=graph)
    report = validate_trace(traces, bound, RuleConfig.parse(text), system=system)
    assert report["statistical"]
    assert report["passed"], report


def test_adaptive_validation_on_diag12(diag12):
    graph = build_exact_graph(diag12)
    traces = run(diag12, "au", 10, seeds=range(50), graph=graph)
    report = validate_trace(traces, None, RuleConfig.parse("au"), system=diag12)
    assert report["check"] == "checkpoints"
    assert report["passed"]
    with pytest.raises(TraceError):
        validate_trace(traces, None, RuleConfig.parse("au"))


def test_cyclic_rules_are_reported_without_a_bound(diag12):
    report = validate_trace(run(diag12, "c", 6), bounds_general(diag12), RuleConfig.parse("c"))
    assert report["bound"] is None
    assert report["passed"]


def test_inequality_traces_get_a_monotonicity_check():
    system = gen_box(3, seed=2)
    report = validate_trace(run(system, "mr", 20), None, RuleConfig.parse("mr"))
    assert report["check"] == "monotone_distance"
    assert report["passed"]


def test_surrogate_violation_growth_is_only_reported(make_system):
    system = make_system([[1.0, 0.0], [-1.0, 1.0]], rhs=[0.0, 0.0], kinds=[1, 1])
    traces = run(system, "c", 2, x0=np.array([1.0, 2.25]))
    assert traces[0].distance_is_surrogate
    assert traces[0].sq_dist.tolist() == [2.25 ** 2, 1.125 ** 2]
    report = validate_trace(traces, None, RuleConfig.parse("c"))
    assert report["check"] == "monotone_distance"
    assert report["statistical"] and report["surrogate"]
    assert report["violations"] == 1


def test_traces_without_distances_are_rejected(make_system):
    system = make_system(np.eye(2), rhs=[1.0, 2.0])
    with pytest.raises(TraceError):
        validate_trace(run(system, "mr", 2), None, RuleConfig.parse("mr"))
    with pytest.raises(TraceError):
        validate_trace([], None, RuleConfig.parse("mr"))


def test_multi_step_equal_norms(make_system):
    system = make_system(TRIANGLE, reference=[1.0, 2.0, 3.0])
    bound = bounds_general(system)
    graph = build_exact_graph(system)
    trace = run(system, "mr", 30)[0]
    report = multi_step_bound_check(trace, system, graph, bound.sigma_inf)
    w = 1 - bound.sigma_inf ** 2 / 2
    assert not report["skipped"]
    assert report["star_geometric_mean"] == pytest.approx(w)
    assert report["realized_geometric_mean"] == pytest.approx(w)
    assert report["passed"]


def test_multi_step_needs_edges_and_an_mr_trace(make_system):
    system = make_system(np.eye(2), reference=[1.0, 1.0])
    graph = build_exact_graph(system)
    assert multi_step_bound_check(run(system, "mr", 2)[0], system, graph, 0.5)["skipped"]
    with pytest.raises(TraceError):
        multi_step_bound_check(run(system, "md", 2)[0], system, graph, 0.5)


def test_multi_step_on_a_small_lattice():
    system = gen_lattice(3, seed=2)
    graph = build_exact_graph(system)
    bound = bounds_general(system, graph=graph)
    report = multi_step_bound_check(run(system, "mr", 200)[0], system, graph, bound.sigma_inf)
    assert not report["skipped"]
    assert report["passed"], report
