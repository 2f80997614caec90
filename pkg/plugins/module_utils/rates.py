# -*- coding: utf-8 -*-
"""Convergence-rate constants for every selection rule and trace validation against them."""
from __future__ import absolute_import, division, print_function
__metaclass__ = type

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, DimensionError, RateOrderingError, TraceError
from .linalg import (ORACLE_MAX_COLUMNS, _dense, diagonal_entries, normalized_matrix,
                     rank_tolerance, row_space_basis, sigma_infinity_oracle, sigma_two)
from .orthogonality import star_bound
from .selection import RuleKind, ScoreMode

log = logging.getLogger(__name__)

DETERMINISTIC_SLACK = 1e-9
ORDERING_TOL = 1e-12
STANDARD_ERRORS = 3.0


@dataclass(eq=False)
class RateBound:
    """Per-step contraction factors of the expected (random rules) or
    guaranteed (greedy rules) squared distance to the solution set."""
    m: int
    u_inf: float
    u_tight: float
    nu: float
    mr_inf: float
    md: float
    sigma_two: float
    sigma_bar_two: float
    sigma_inf: float
    sigma_bar_inf: float
    max_row_sq_norm: float
    frobenius_sq: float
    row_sq_norms: np.ndarray = field(repr=False)
    substituted: bool = False
    star: Optional[object] = field(default=None, repr=False)

    def mr_tight(self, i):
        return 1.0 - self.sigma_inf ** 2 / self.row_sq_norms[i]

    def mr_tight_seq(self, rows):
        return 1.0 - self.sigma_inf ** 2 / self.row_sq_norms[np.asarray(rows, dtype=np.int64)]

    def constants(self):
        return {"u_inf": self.u_inf, "u_tight": self.u_tight, "nu": self.nu,
                "mr_inf": self.mr_inf, "md": self.md}

    def check_ordering(self, tol=ORDERING_TOL):
        """Violated ordering relations between the constants (empty when consistent)."""
        problems = []
        for name, value in self.constants().items():
            if not -tol <= value < 1.0:
                problems.append("{} = {!r} outside [0, 1)".format(name, value))
        for name in ("u_tight", "nu", "mr_inf", "md"):
            if getattr(self, name) > self.u_inf + tol:
                problems.append("u_inf < {}".format(name))
        for name in ("u_tight", "nu", "mr_inf"):
            if self.md > getattr(self, name) + tol:
                problems.append("md > {}".format(name))
        return problems

    def as_dict(self):
        out = dict(self.constants())
        out.update(sigma_two=self.sigma_two, sigma_bar_two=self.sigma_bar_two, sigma_inf=self.sigma_inf,
                   sigma_bar_inf=self.sigma_bar_inf, substituted=self.substituted)
        if self.star is not None:
            out.update(star_geometric_mean=self.star.geometric_mean, star=list(self.star.star))
        return out


@dataclass(frozen=True, eq=False)
class DiagonalSpectrum:
    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=np.float64).ravel()
        if lam.size == 0 or np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise ConfigurationError("diagonal spectrum needs positive finite entries")
        object.__setattr__(self, "lam", lam)

    @property
    def m(self):
        return self.lam.shape[0]


def _assert_ordering(bound):
    problems = bound.check_ordering()
    if problems:
        raise RateOrderingError("rate constants out of order: " + "; ".join(problems), problems=problems)
    return bound


def bounds_diagonal(spec):
    lam = spec.lam
    m = spec.m
    sq = lam ** 2
    harmonic = 1.0 / np.sum(1.0 / sq)
    lam_min, lam_max = lam.min(), lam.max()
    bound = RateBound(
        m=m,
        u_inf=1.0 - lam_min ** 2 / (m * lam_max ** 2),
        u_tight=1.0 - 1.0 / m,
        nu=1.0 - lam_min ** 2 / sq.sum(),
        mr_inf=1.0 - harmonic / lam_max ** 2,
        md=1.0 - 1.0 / m,
        sigma_two=float(lam_min),
        sigma_bar_two=1.0,
        sigma_inf=float(np.sqrt(harmonic)),
        sigma_bar_inf=float(np.sqrt(1.0 / m)),
        max_row_sq_norm=float(lam_max ** 2),
        frobenius_sq=float(sq.sum()),
        row_sq_norms=sq,
    )
    return _assert_ordering(bound)


def bounds_general(system, graph=None, samples=20000):
    """Every rate constant for `system`.

    sigma(A, inf) and sigma(A-bar, inf) need a diagonal A or n <= 3; other
    systems get the lower bounds sigma(A, 2)/sqrt(m) and sigma(A-bar, 2)/sqrt(m)
    in their place and `substituted` is set. When a graph with at least one
    edge is given the star bound on the tight MR weights is attached.
    """
    lam = diagonal_entries(system.matrix)
    if lam is not None and not system.has_inequalities:
        bound = bounds_diagonal(DiagonalSpectrum(lam))
        return _with_star(bound, graph)
    m = system.m
    sq_norms = system.norms.sq_norms
    max_sq = float(sq_norms.max())
    fro = system.norms.frobenius_sq
    normalized = normalized_matrix(system)
    s2 = sigma_two(system.matrix)
    s2_bar = sigma_two(normalized)
    low_inf, low_bar_inf = s2 / np.sqrt(m), s2_bar / np.sqrt(m)
    substituted = system.n > ORACLE_MAX_COLUMNS
    if substituted:
        log.warning("sigma_infinity is not computable for n = %d; using sigma_2/sqrt(m) lower bounds", system.n)
        s_inf, s_bar_inf = low_inf, low_bar_inf
    else:
        s_inf = sigma_infinity_oracle(system.matrix, samples=samples)
        s_bar_inf = sigma_infinity_oracle(normalized, samples=samples)
    s_inf = float(np.clip(s_inf, low_inf, s2))
    s_bar_inf = float(max(s_bar_inf, low_bar_inf, s2 / np.sqrt(fro), s_inf / np.sqrt(max_sq)))
    bound = RateBound(
        m=m,
        u_inf=1.0 - s2 ** 2 / (m * max_sq),
        u_tight=1.0 - s2_bar ** 2 / m,
        nu=1.0 - s2 ** 2 / fro,
        mr_inf=1.0 - s_inf ** 2 / max_sq,
        md=1.0 - s_bar_inf ** 2,
        sigma_two=s2,
        sigma_bar_two=s2_bar,
        sigma_inf=s_inf,
        sigma_bar_inf=s_bar_inf,
        max_row_sq_norm=max_sq,
        frobenius_sq=fro,
        row_sq_norms=sq_norms,
        substituted=substituted,
    )
    return _with_star(_assert_ordering(bound), graph)


def _with_star(bound, graph):
    if graph is not None and graph.edge_count:
        bound.star = star_bound(graph, bound.mr_tight_seq(np.arange(bound.m)))
    return bound


def restricted_subspace(dense, unselectable):
    """Orthonormal basis of row(A) intersected with the null space of the unselectable rows."""
    basis = row_space_basis(dense)
    if not np.any(unselectable) or basis.shape[1] == 0:
        return basis
    frozen = dense[unselectable] @ basis
    s_max = np.linalg.norm(frozen, 2) if frozen.size else 0.0
    rcond = rank_tolerance(frozen.shape, s_max) / s_max if s_max else None
    return basis @ scipy.linalg.null_space(frozen, rcond=rcond)


def adaptive_factor(system, selectable, rule, dense=None):
    """Expected one-step factor of A(u) or A(Nu) given the selectable-row mask.

    The error x - x* lies in row(A) and is orthogonal to every unselectable
    row, so the smallest singular value is taken over that subspace only.
    """
    selectable = np.asarray(selectable, dtype=bool)
    m_k = int(selectable.sum())
    if m_k == 0:
        return 0.0
    dense = _dense(system.matrix) if dense is None else dense
    q = restricted_subspace(dense, ~selectable)
    if q.shape[1] == 0:
        return 0.0
    rows = dense[selectable]
    if rule.kind is RuleKind.ADAPTIVE_UNIFORM:
        rows = rows / system.norms.norms[selectable][:, None]
        sigma = np.linalg.svd(rows @ q, compute_uv=False)[-1]
        return float(1.0 - sigma ** 2 / m_k)
    if rule.kind is RuleKind.ADAPTIVE_NON_UNIFORM:
        sigma = np.linalg.svd(rows @ q, compute_uv=False)[-1]
        return float(1.0 - sigma ** 2 / system.norms.sq_norms[selectable].sum())
    raise ConfigurationError("rule {} is not adaptive".format(rule.label))


def approximate_factor(bound, rule, row, epsilon=None):
    """Guaranteed factor of a multiplicative-error greedy step on `row`."""
    shrink = (1.0 - (rule.epsilon if epsilon is None else epsilon)) ** 2
    if rule.target is ScoreMode.DISTANCE:
        return 1.0 - shrink * bound.sigma_bar_inf ** 2
    return 1.0 - shrink * bound.sigma_inf ** 2 / bound.row_sq_norms[row]


def additive_term(bound, rule, row, sq_dist):
    """Ratio allowance of an additive-error greedy step taken from squared distance `sq_dist`."""
    if rule.target is ScoreMode.DISTANCE:
        return rule.epsilon / sq_dist
    return rule.epsilon / (bound.row_sq_norms[row] * sq_dist)


def step_factors(trace, bound, rule):
    """Deterministic per-step factor for each step of a greedy trace."""
    rows = trace.rows
    kind = rule.kind
    if kind is RuleKind.MAX_RESIDUAL:
        return bound.mr_tight_seq(rows)
    if kind is RuleKind.MAX_DISTANCE:
        return np.full(rows.shape, bound.md)
    if kind is RuleKind.HYBRID:
        odd = np.arange(rows.shape[0]) % 2 == 1
        return np.where(odd, bound.md, bound.mr_tight_seq(rows))
    if kind is RuleKind.APPROX_MULTIPLICATIVE:
        return np.array([approximate_factor(bound, rule, i) for i in rows])
    if kind is RuleKind.APPROX_ADDITIVE:
        base = np.array([approximate_factor(bound, rule, i, epsilon=0.0) for i in rows])
        prev = trace.previous_sq_dist()
        with np.errstate(divide="ignore"):
            extra = np.array([additive_term(bound, rule, i, d) if d > 0 else np.inf for i, d in zip(rows, prev)])
        return base + extra
    raise ConfigurationError("rule {} has no deterministic per-step bound".format(rule.label))


def constant_for(bound, rule):
    return {
        RuleKind.UNIFORM: bound.u_tight,
        RuleKind.NON_UNIFORM: bound.nu,
        RuleKind.MAX_RESIDUAL: bound.mr_inf,
        RuleKind.MAX_DISTANCE: bound.md,
        RuleKind.HYBRID: max(bound.mr_inf, bound.md),
    }.get(rule.kind)


def _report(rule, bound_value, ratios, excess, statistical, violations, **extra):
    report = {
        "rule": rule.label,
        "bound": None if bound_value is None else float(bound_value),
        "worst_ratio": float(ratios.max()) if ratios.size else None,
        "mean_ratio": float(ratios.mean()) if ratios.size else None,
        "worst_excess": float(excess.max()) if excess.size else None,
        "steps_checked": int(ratios.size),
        "statistical": statistical,
        "violations": int(violations),
        "passed": violations == 0,
    }
    report.update(extra)
    return report


def _validate_inequality(traces, rule, slack):
    steps = []
    for trace in traces:
        if not len(trace):
            continue
        steps.append(np.diff(np.concatenate([[trace.initial_sq_dist], trace.sq_dist])))
    increases = np.concatenate(steps) if steps else np.zeros(0)
    violations = int(np.sum(increases > slack))
    # ||e(Ax - b)||_inf can grow after a projection; only exact distances are binding
    surrogate = any(t.distance_is_surrogate for t in traces)
    return _report(rule, None, np.zeros(0), increases, surrogate, violations,
                   check="monotone_distance", surrogate=surrogate)


def validate_trace(traces, bound, rule, system=None, slack=DETERMINISTIC_SLACK):
    """Check one or more traces of `rule` against its rate bound.

    Greedy rules are checked every step against their deterministic factor
    with `slack`. Random rules are checked in expectation: the mean over
    runs of each run's mean per-step ratio must stay within three standard
    errors of the bound. Adaptive rules compare ratios with the restricted
    factor at the recorded checkpoints, so `system` is required for them.
    Inequality traces are checked for a nonincreasing distance column; the
    check is statistical (reported, never failing) when the column holds the
    ||e(Ax - b)||_inf surrogate rather than an exact distance.
    """
    if not isinstance(traces, (list, tuple)):
        traces = [traces]
    if not traces:
        raise TraceError("no traces to validate")
    for trace in traces:
        if not trace.has_distance:
            raise TraceError("trace for rule {} has no distance column (reference solution unknown)".format(trace.rule))
    if any(t.inequality for t in traces):
        return _validate_inequality(traces, rule, slack)
    if rule.kind in (RuleKind.CYCLIC, RuleKind.RANDOM_PERMUTATION):
        ratios = np.concatenate([r[v] for r, v in (t.distance_ratios() for t in traces)])
        return _report(rule, None, ratios, np.zeros(0), False, 0, check="none")
    if rule.is_greedy:
        return _validate_greedy(traces, bound, rule, slack)
    if rule.is_adaptive:
        return _validate_adaptive(traces, rule, system, slack)
    return _validate_random(traces, bound, rule, slack)


def _validate_greedy(traces, bound, rule, slack):
    all_ratios, all_excess = [], []
    for trace in traces:
        ratios, valid = trace.distance_ratios()
        factors = step_factors(trace, bound, rule)
        all_ratios.append(ratios[valid])
        all_excess.append((ratios - factors)[valid])
    ratios = np.concatenate(all_ratios)
    excess = np.concatenate(all_excess)
    violations = int(np.sum(excess > slack))
    if violations:
        log.warning("rule %s exceeded its per-step bound %d time(s)", rule.label, violations)
    return _report(rule, constant_for(bound, rule), ratios, excess, False, violations, check="per_step")


def _run_means(values):
    means = np.array([v.mean() for v in values if v.size])
    if means.size == 0:
        return means, 0.0, 0.0
    se = float(means.std(ddof=1) / np.sqrt(means.size)) if means.size > 1 else 0.0
    return means, float(means.mean()), se


def _validate_random(traces, bound, rule, slack):
    value = constant_for(bound, rule)
    per_run = []
    for trace in traces:
        ratios, valid = trace.distance_ratios()
        per_run.append(ratios[valid])
    means, mean, se = _run_means(per_run)
    ratios = np.concatenate(per_run) if per_run else np.zeros(0)
    passed = mean <= value + STANDARD_ERRORS * se + slack
    return _report(rule, value, ratios, means - value, True, 0 if passed else 1,
                   runs=int(means.size), run_mean=mean, standard_error=se)


def _validate_adaptive(traces, rule, system, slack):
    if system is None:
        raise TraceError("adaptive validation needs the system to evaluate restricted factors")
    dense = _dense(system.matrix)
    cache = {}
    per_run, ratios_seen, factors_seen = [], [], []
    for trace in traces:
        if not trace.checkpoints:
            raise TraceError("trace for rule {} has no selectable-set checkpoints".format(trace.rule))
        ratios, valid = trace.distance_ratios()
        diffs = []
        for k, mask in sorted(trace.checkpoints.items()):
            if k >= len(trace) or not valid[k]:
                continue
            key = mask.tobytes()
            if key not in cache:
                cache[key] = adaptive_factor(system, mask, rule, dense=dense)
            diffs.append(ratios[k] - cache[key])
            ratios_seen.append(ratios[k])
            factors_seen.append(cache[key])
        per_run.append(np.asarray(diffs))
    means, mean, se = _run_means(per_run)
    passed = mean <= STANDARD_ERRORS * se + slack
    factors = np.asarray(factors_seen)
    return _report(rule, float(factors.mean()) if factors.size else None, np.asarray(ratios_seen), means, True,
                   0 if passed else 1, check="checkpoints", runs=int(means.size), run_mean_excess=mean,
                   standard_error=se)


def multi_step_bound_check(trace, system, graph, sigma_inf):
    """Realized per-step geometric mean of the tight MR factors against the best star subgraph.

    The comparison uses the steps before the trace converged and allows a
    slack of m * |log w_min| / k in the log domain for the unspecified
    constant of the asymptotic bound.
    """
    if trace.rule != "MR":
        raise TraceError("multi-step bound check needs an MR trace, got {}".format(trace.rule))
    if graph.m != system.m:
        raise DimensionError("graph has {} nodes but the system has {} rows".format(graph.m, system.m))
    weights = 1.0 - sigma_inf ** 2 / system.norms.sq_norms
    weights = np.clip(weights, 0.0, 1.0)
    if graph.edge_count == 0:
        return {"skipped": True, "reason": "orthogonality graph has no edges"}
    star = star_bound(graph, weights)
    steps = len(trace)
    if trace.has_distance:
        _, valid = trace.distance_ratios()
        steps = int(np.argmin(valid)) if not valid.all() else len(trace)
    rows = trace.rows[:steps]
    if steps == 0:
        return {"skipped": True, "reason": "trace converged before the first step"}
    selected = weights[rows]
    with np.errstate(divide="ignore"):
        log_gm = float(np.mean(np.log(selected)))
    positive = weights[weights > 0]
    slack = system.m * abs(np.log(positive.min())) / steps if positive.size else 0.0
    log_star = np.log(star.geometric_mean) if star.geometric_mean > 0 else -np.inf
    return {
        "skipped": False,
        "steps": steps,
        "asymptotic": steps >= 4 * system.m,
        "realized_geometric_mean": float(np.exp(log_gm)),
        "star_geometric_mean": star.geometric_mean,
        "star": list(star.star),
        "log_slack": float(slack),
        "passed": bool(log_gm <= log_star + slack),
    }
