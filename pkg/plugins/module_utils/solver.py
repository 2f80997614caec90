# -*- coding: utf-8 -*-
"""Kaczmarz iteration engine, convergence traces and stopping logic."""
from __future__ import absolute_import, division, print_function
__metaclass__ = type

import logging
import time
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (ConfigurationError, ConstraintKindError, DataFileError, DimensionError,
                     NoSelectableRowError, TraceError, ZeroRowError)
from .linalg import ConstraintKind, _dense, clipped_residual, residual_vector
from .orthogonality import init_selectable
from .selection import (CoordinateRule, cd_select_and_step, make_selector, propagate_graph,
                        propagate_sparse)

log = logging.getLogger(__name__)

CLOCK_EVERY = 100
# steps starting below this share of the problem scale are rounding noise
CONVERGED_FLOOR = 1e-9
TRACE_HEADER = "iter,row,sq_error,sq_error_norm,sq_dist,sq_dist_norm,wall_ns"


@dataclass
class StoppingCriteria:
    max_iterations: Optional[int] = 1000
    residual_tolerance: Optional[float] = None
    time_budget: Optional[float] = None

    def __post_init__(self):
        if self.max_iterations is None and self.residual_tolerance is None and self.time_budget is None:
            raise ConfigurationError("at least one stopping bound must be finite")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be nonnegative")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ConfigurationError("time_budget must be positive")


@dataclass(eq=False)
class ConvergenceTrace:
    """Per-iteration record; entry k describes the state after step k + 1.

    The iteration-0 values are kept separately so that normalized columns
    and per-step ratios can be formed.
    """
    rule: str
    seed: int
    rows: np.ndarray
    sq_error: np.ndarray
    sq_dist: Optional[np.ndarray]
    wall_ns: np.ndarray
    initial_sq_error: float
    initial_sq_dist: Optional[float]
    passes_per_iteration: float = 0.0
    distance_is_surrogate: bool = False
    inequality: bool = False
    reference_sq_norm: float = 0.0
    checkpoints: dict = field(default_factory=dict)
    stop_reason: str = "max_iterations"

    def __len__(self):
        return int(self.rows.shape[0])

    @property
    def has_distance(self):
        return self.sq_dist is not None

    @staticmethod
    def _normalize(values, initial):
        if values is None:
            return None
        if not initial:
            return np.zeros_like(values)
        return values / initial

    @property
    def sq_error_norm(self):
        return self._normalize(self.sq_error, self.initial_sq_error)

    @property
    def sq_dist_norm(self):
        return self._normalize(self.sq_dist, self.initial_sq_dist)

    @property
    def effective_passes(self):
        return np.arange(1, len(self) + 1) * self.passes_per_iteration

    def final(self):
        if not len(self):
            return {"sq_error_norm": 1.0 if self.initial_sq_error else 0.0,
                    "sq_dist_norm": (1.0 if self.initial_sq_dist else 0.0) if self.has_distance else None}
        dist = self.sq_dist_norm
        return {"sq_error_norm": float(self.sq_error_norm[-1]),
                "sq_dist_norm": float(dist[-1]) if dist is not None else None}

    def previous_sq_dist(self):
        if not self.has_distance:
            raise TraceError("trace for rule {} has no distance column".format(self.rule))
        return np.concatenate([[self.initial_sq_dist], self.sq_dist[:-1]])

    def converged_floor(self):
        return CONVERGED_FLOOR * max(self.initial_sq_dist or 0.0, self.reference_sq_norm, 1.0)

    def distance_ratios(self):
        """Per-step ratios d_{k+1}/d_k and the mask of steps taken above the rounding floor."""
        prev = self.previous_sq_dist()
        valid = prev > self.converged_floor()
        ratios = np.zeros_like(prev)
        np.divide(self.sq_dist, prev, out=ratios, where=valid)
        return ratios, valid

    def to_csv(self, path, with_passes=False):
        n = len(self)
        dist = self.sq_dist if self.has_distance else np.full(n, np.nan)
        dist_norm = self.sq_dist_norm if self.has_distance else np.full(n, np.nan)
        columns = [np.arange(1, n + 1), self.rows, self.sq_error, self.sq_error_norm, dist, dist_norm, self.wall_ns]
        fmt = ["%d", "%d", "%.17g", "%.17g", "%.17g", "%.17g", "%d"]
        header = TRACE_HEADER
        if with_passes:
            columns.append(self.effective_passes)
            fmt.append("%.17g")
            header += ",effective_passes"
        try:
            np.savetxt(path, np.column_stack(columns) if n else np.empty((0, len(columns))),
                       delimiter=",", fmt=fmt, header=header, comments="")
        except OSError as e:
            raise DataFileError("Failed to write trace {}: {}".format(path, e), path=path)
        return path


@dataclass(eq=False)
class SolverState:
    x: np.ndarray
    residuals: np.ndarray
    selector: object
    selectable: object = None
    k: int = 0

    @classmethod
    def create(cls, system, rule, x0=None, graph=None):
        x = np.zeros(system.n) if x0 is None else np.array(x0, dtype=np.float64)
        residuals = residual_vector(system, x)
        selectable = None
        if rule.is_adaptive:
            if graph is None:
                raise ConfigurationError("adaptive rule {} needs an orthogonality graph".format(rule.label))
            selectable = init_selectable(system, x0_is_zero=not np.any(x))
        selector = make_selector(rule, system, residuals, graph=graph, selectable=selectable)
        return cls(x=x, residuals=residuals, selector=selector, selectable=selectable)


def _check_row(system, i):
    if not 0 <= i < system.m:
        raise IndexError("row {} out of range for {} rows".format(i, system.m))
    if system.norms.norms[i] == 0:
        raise ZeroRowError("row {} is all zero".format(i))


def _project(system, x, i):
    """Project x in place onto constraint i; returns (columns, step) or None when x already satisfies it."""
    cols, vals = system.matrix.row(i)
    r = float(np.dot(vals, x[cols])) - system.rhs[i]
    beta = max(r, 0.0) if system.kinds[i] == ConstraintKind.LESS_EQUAL else r
    if beta == 0.0:
        return None
    step = -(beta / system.norms.norms[i] ** 2) * vals
    x[cols] += step
    return cols, step


def kaczmarz_step(system, x, i):
    _check_row(system, i)
    if system.kinds[i] != ConstraintKind.EQUALITY:
        raise ConstraintKindError("row {} is an inequality; use kaczmarz_inequality_step".format(i))
    x = np.array(x, dtype=np.float64)
    _project(system, x, i)
    return x


def kaczmarz_inequality_step(system, x, i):
    _check_row(system, i)
    x = np.array(x, dtype=np.float64)
    _project(system, x, i)
    return x


def step_identity_check(system, x_before, x_after, i, x_star):
    """|d_after - (d_before - r_i^2 / ||a_i||^2)| with d the squared distance to x_star."""
    r = system.matrix.row_dot(i, x_before) - system.rhs[i]
    before = float(np.sum((np.asarray(x_before) - x_star) ** 2))
    after = float(np.sum((np.asarray(x_after) - x_star) ** 2))
    return abs(after - (before - r * r / system.norms.norms[i] ** 2))


FeasibilityGap = namedtuple("FeasibilityGap", ["gap", "distance"])


class AnalyticRegion(object):
    """Exact distance to {x : Ax (=|<=) b} for a single row or an axis-aligned box."""

    def __init__(self, system):
        self.system = system
        self.single = system.m == 1
        self.lower = self.upper = None
        bounds = None if self.single else diagonal_entries_by_column(system)
        if bounds is not None:
            self.lower, self.upper = bounds

    @classmethod
    def for_system(cls, system):
        region = cls(system)
        return region if region.available else None

    @property
    def available(self):
        return self.single or self.lower is not None

    def distance(self, x, residuals=None):
        system = self.system
        if self.single:
            r = system.matrix.row_dot(0, x) - system.rhs[0] if residuals is None else residuals[0]
            beta = max(r, 0.0) if system.less_equal[0] else abs(r)
            return beta / system.norms.norms[0]
        below = np.maximum(self.lower - x, 0.0)
        above = np.maximum(x - self.upper, 0.0)
        return float(np.sqrt(np.sum(below ** 2 + above ** 2)))


def diagonal_entries_by_column(system):
    """Per-column feasible interval when every row constrains a single coordinate."""
    matrix = system.matrix
    if np.any(matrix.row_nnz() != 1):
        return None
    coo = matrix.csr.tocoo()
    lower = np.full(matrix.n, -np.inf)
    upper = np.full(matrix.n, np.inf)
    for i, j, a in zip(coo.row, coo.col, coo.data):
        bound = system.rhs[i] / a
        if system.kinds[i] == ConstraintKind.EQUALITY:
            lower[j] = max(lower[j], bound)
            upper[j] = min(upper[j], bound)
        elif a > 0:
            upper[j] = min(upper[j], bound)
        else:
            lower[j] = max(lower[j], bound)
    if np.any(lower > upper):
        return None
    return lower, upper


def feasibility_gap(system, x):
    """||e(Ax - b)||_inf and, when an analytic projection exists, d(x, S)."""
    r = residual_vector(system, x)
    e = clipped_residual(system, r)
    gap = float(np.max(np.abs(e), initial=0.0))
    region = AnalyticRegion.for_system(system)
    return FeasibilityGap(gap, region.distance(np.asarray(x, dtype=np.float64), r) if region else None)


def closest_solution(system, x0=None):
    """Solution of Ax = b nearest x0; equals the reference when A has full column rank."""
    x0 = np.zeros(system.n) if x0 is None else np.asarray(x0, dtype=np.float64)
    correction = np.linalg.lstsq(_dense(system.matrix), residual_vector(system, x0), rcond=None)[0]
    return x0 - correction


class _Recorder(object):

    def __init__(self, system, x, residuals, reference, region):
        self.system = system
        self.reference = reference
        self.region = region
        self.rows, self.sq_error, self.sq_dist, self.clock = [], [], [], []
        self.start = time.perf_counter_ns()
        self.clock.append((0, 0))
        self.initial_sq_error, self.initial_sq_dist = self.measure(x, residuals)

    def measure(self, x, residuals):
        system = self.system
        e = clipped_residual(system, residuals) if system.has_inequalities else residuals
        sq_error = float(np.dot(e, e))
        if system.has_inequalities:
            if self.region is not None:
                sq_dist = self.region.distance(x, residuals) ** 2
            else:
                sq_dist = float(np.max(np.abs(e), initial=0.0)) ** 2
        elif self.reference is not None:
            d = x - self.reference
            sq_dist = float(np.dot(d, d))
        else:
            sq_dist = None
        return sq_error, sq_dist

    def record(self, k, i, x, residuals):
        sq_error, sq_dist = self.measure(x, residuals)
        self.rows.append(i)
        self.sq_error.append(sq_error)
        self.sq_dist.append(sq_dist)
        if k % CLOCK_EVERY == 0:
            return self.tick(k)
        return None

    def tick(self, k):
        elapsed = time.perf_counter_ns() - self.start
        if self.clock[-1][0] != k:
            self.clock.append((k, elapsed))
        return elapsed

    def trace(self, rule, seed, k, passes_per_iteration, checkpoints, stop_reason):
        self.tick(k)
        ks, ns = zip(*self.clock)
        steps = np.arange(1, k + 1)
        wall = np.interp(steps, ks, ns).astype(np.int64) if k else np.zeros(0, dtype=np.int64)
        has_dist = self.initial_sq_dist is not None
        return ConvergenceTrace(
            rule=rule,
            seed=seed,
            rows=np.asarray(self.rows, dtype=np.int64),
            sq_error=np.asarray(self.sq_error, dtype=np.float64),
            sq_dist=np.asarray(self.sq_dist, dtype=np.float64) if has_dist else None,
            wall_ns=wall,
            initial_sq_error=self.initial_sq_error,
            initial_sq_dist=self.initial_sq_dist,
            passes_per_iteration=passes_per_iteration,
            distance_is_surrogate=self.system.has_inequalities and self.region is None,
            inequality=self.system.has_inequalities,
            reference_sq_norm=float(np.dot(self.reference, self.reference)) if self.reference is not None else 0.0,
            checkpoints=checkpoints,
            stop_reason=stop_reason,
        )


def _stop_reason(stop, k, residuals, system, elapsed_ns):
    if stop.max_iterations is not None and k >= stop.max_iterations:
        return "max_iterations"
    if stop.residual_tolerance is not None:
        e = clipped_residual(system, residuals) if system.has_inequalities else residuals
        if np.max(np.abs(e), initial=0.0) <= stop.residual_tolerance:
            return "residual_tolerance"
    if stop.time_budget is not None and elapsed_ns is not None and elapsed_ns >= stop.time_budget * 1e9:
        return "time_budget"
    return None


def solve(system, rule, x0=None, stop=None, graph=None, reference=None, propagation="sparse",
          refresh_every=None, checkpoint_every=None):
    """Run Kaczmarz steps under `rule` until `stop`; returns (x, ConvergenceTrace).

    Residuals are kept incrementally, either through the columns of the
    changed coordinates ("sparse") or by recomputing the graph neighbours of
    the projected row ("graph"), and recomputed in full every
    `refresh_every` iterations (default m, 0 disables). Adaptive rules
    snapshot the selectable rows every `checkpoint_every` iterations.
    """
    stop = stop or StoppingCriteria()
    if propagation not in ("sparse", "graph"):
        raise ConfigurationError("propagation must be 'sparse' or 'graph', got {!r}".format(propagation))
    if propagation == "graph" and graph is None:
        raise ConfigurationError("graph propagation needs an orthogonality graph")
    m = system.m
    refresh_every = m if refresh_every is None else refresh_every
    checkpoint_every = m if checkpoint_every is None else checkpoint_every
    reference = system.reference_solution if reference is None else reference
    state = SolverState.create(system, rule, x0=x0, graph=graph)
    if state.x.shape != (system.n,):
        raise DimensionError("x0 has shape {} but the system has {} columns".format(state.x.shape, system.n))
    region = AnalyticRegion.for_system(system) if system.has_inequalities else None
    recorder = _Recorder(system, state.x, state.residuals, reference, region)
    checkpoints = {}
    log.debug("solving %dx%d system with rule %s seed %d", m, system.n, rule.label, rule.seed)
    reason = _stop_reason(stop, 0, state.residuals, system, 0)
    elapsed = 0
    while reason is None:
        k = state.k
        if state.selectable is not None and checkpoint_every and k % checkpoint_every == 0:
            checkpoints[k] = state.selectable.flags.copy()
        try:
            i = state.selector.select(k)
        except NoSelectableRowError:
            reason = "no_selectable_rows"
            break
        moved = _project(system, state.x, i)
        touched = np.empty(0, dtype=np.int64)
        if moved is not None:
            if propagation == "graph":
                touched = propagate_graph(system, graph, state.residuals, i, state.x)
            else:
                cols, step = moved
                touched = propagate_sparse(system, state.residuals,
                                           [(int(j), 0.0, float(s)) for j, s in zip(cols, step)])
        state.selector.observe(i, touched)
        state.k = k + 1
        if refresh_every and state.k % refresh_every == 0:
            state.residuals[:] = residual_vector(system, state.x)
            state.selector.refresh()
        tick = recorder.record(state.k, i, state.x, state.residuals)
        if tick is not None:
            elapsed = tick
        reason = _stop_reason(stop, state.k, state.residuals, system, elapsed)
    log.debug("rule %s seed %d stopped after %d iterations (%s)", rule.label, rule.seed, state.k, reason)
    trace = recorder.trace(rule.label, rule.seed, state.k, 1.0 / m, checkpoints, reason)
    return state.x, trace


def solve_coordinate_descent(system, rule, x0=None, stop=None, reference=None):
    """Greedy coordinate descent on 1/2 ||Ax - b||^2 traced like a Kaczmarz run."""
    rule = CoordinateRule(rule)
    if system.has_inequalities:
        raise ConstraintKindError("coordinate descent comparison needs an equality system")
    stop = stop or StoppingCriteria()
    reference = system.reference_solution if reference is None else reference
    x = np.zeros(system.n) if x0 is None else np.array(x0, dtype=np.float64)
    r = residual_vector(system, x)
    recorder = _Recorder(system, x, r, reference, None)
    k = 0
    elapsed = 0
    reason = _stop_reason(stop, 0, r, system, 0)
    while reason is None:
        j, new_x = cd_select_and_step(system.matrix, system.rhs, x, rule, residual=r)
        rows, vals = system.matrix.column(j)
        r[rows] += vals * (new_x[j] - x[j])
        x = new_x
        k += 1
        tick = recorder.record(k, j, x, r)
        if tick is not None:
            elapsed = tick
        reason = _stop_reason(stop, k, r, system, elapsed)
    return x, recorder.trace("CD-" + rule.value.upper(), 0, k, 1.0 / system.n, {}, reason)
