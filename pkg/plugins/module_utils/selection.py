# -*- coding: utf-8 -*-
"""Row-selection rules and the structures behind them.

Greedy rules read an addressable max-heap kept in step with the residuals;
adaptive rules sample from a sum tree whose leaves are zero for rows that
cannot currently be violated.
"""
from __future__ import absolute_import, division, print_function
__metaclass__ = type

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, NoSelectableRowError, ZeroRowError

log = logging.getLogger(__name__)


class ScoreMode(enum.Enum):
    RESIDUAL = "mr"
    DISTANCE = "md"


class RuleKind(enum.Enum):
    CYCLIC = "c"
    RANDOM_PERMUTATION = "rp"
    UNIFORM = "u"
    NON_UNIFORM = "nu"
    ADAPTIVE_UNIFORM = "au"
    ADAPTIVE_NON_UNIFORM = "anu"
    MAX_RESIDUAL = "mr"
    MAX_DISTANCE = "md"
    HYBRID = "hybrid"
    APPROX_MULTIPLICATIVE = "approx-mult"
    APPROX_ADDITIVE = "approx-add"


_ALIASES = {
    "cyclic": RuleKind.CYCLIC,
    "a(u)": RuleKind.ADAPTIVE_UNIFORM,
    "a(nu)": RuleKind.ADAPTIVE_NON_UNIFORM,
    "uniform": RuleKind.UNIFORM,
    "nonuniform": RuleKind.NON_UNIFORM,
}

_LABELS = {
    RuleKind.CYCLIC: "C",
    RuleKind.RANDOM_PERMUTATION: "RP",
    RuleKind.UNIFORM: "U",
    RuleKind.NON_UNIFORM: "NU",
    RuleKind.ADAPTIVE_UNIFORM: "A(u)",
    RuleKind.ADAPTIVE_NON_UNIFORM: "A(Nu)",
    RuleKind.MAX_RESIDUAL: "MR",
    RuleKind.MAX_DISTANCE: "MD",
    RuleKind.HYBRID: "Hybrid",
}

RANDOM_RULES = frozenset([RuleKind.UNIFORM, RuleKind.NON_UNIFORM, RuleKind.ADAPTIVE_UNIFORM,
                          RuleKind.ADAPTIVE_NON_UNIFORM, RuleKind.RANDOM_PERMUTATION])
ADAPTIVE_RULES = frozenset([RuleKind.ADAPTIVE_UNIFORM, RuleKind.ADAPTIVE_NON_UNIFORM])
APPROXIMATE_RULES = frozenset([RuleKind.APPROX_MULTIPLICATIVE, RuleKind.APPROX_ADDITIVE])
GREEDY_RULES = frozenset([RuleKind.MAX_RESIDUAL, RuleKind.MAX_DISTANCE, RuleKind.HYBRID]) | APPROXIMATE_RULES


@dataclass(frozen=True)
class RuleConfig:
    kind: RuleKind
    seed: int = 0
    epsilon: float = 0.0
    target: ScoreMode = ScoreMode.RESIDUAL

    def __post_init__(self):
        if self.kind is RuleKind.APPROX_MULTIPLICATIVE and not 0.0 <= self.epsilon < 1.0:
            raise ConfigurationError("multiplicative error must lie in [0, 1), got {}".format(self.epsilon))
        if self.kind is RuleKind.APPROX_ADDITIVE and self.epsilon < 0.0:
            raise ConfigurationError("additive error must be nonnegative, got {}".format(self.epsilon))

    @classmethod
    def parse(cls, text, seed=0):
        """'mr', 'a(nu)', 'approx-mult:0.4', 'approx-add:0.1:md', ..."""
        parts = text.strip().lower().split(":")
        name = parts[0]
        try:
            kind = _ALIASES.get(name) or RuleKind(name)
        except ValueError:
            raise ConfigurationError("Unknown selection rule '{}'".format(text))
        if kind not in APPROXIMATE_RULES:
            if len(parts) > 1:
                raise ConfigurationError("Rule '{}' takes no parameters".format(name))
            return cls(kind, seed=seed)
        if len(parts) not in (2, 3):
            raise ConfigurationError("Rule '{}' needs an error parameter, e.g. {}:0.1".format(name, name))
        try:
            epsilon = float(parts[1])
            target = ScoreMode(parts[2]) if len(parts) == 3 else ScoreMode.RESIDUAL
        except ValueError:
            raise ConfigurationError("Could not parse rule parameters in '{}'".format(text))
        return cls(kind, seed=seed, epsilon=epsilon, target=target)

    def with_seed(self, seed):
        return RuleConfig(self.kind, seed=seed, epsilon=self.epsilon, target=self.target)

    @property
    def label(self):
        if self.kind in APPROXIMATE_RULES:
            return "{}({:g},{})".format(self.kind.value, self.epsilon, self.target.value)
        return _LABELS[self.kind]

    @property
    def slug(self):
        return self.label.lower().replace("(", "_").replace(")", "").replace(",", "_")

    @property
    def is_random(self):
        return self.kind in RANDOM_RULES or self.kind in APPROXIMATE_RULES

    @property
    def is_adaptive(self):
        return self.kind in ADAPTIVE_RULES

    @property
    def is_greedy(self):
        return self.kind in GREEDY_RULES


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def row_scores(residuals, norms, mode, less_equal=None):
    e = residuals if less_equal is None else np.where(less_equal, np.maximum(residuals, 0.0), residuals)
    scores = np.abs(e)
    return scores / norms if mode is ScoreMode.DISTANCE else scores


class ResidualHeap(object):
    """Binary max-heap of rows keyed by |e(r_i)| or |e(r_i)|/||a_i||.

    `residuals` is shared with the caller, who changes entries in place and
    then reports the touched rows through update_rows. Ties go to the lowest
    row index.
    """

    def __init__(self, residuals, norms, mode, less_equal=None):
        self.r = residuals
        self.norms = np.asarray(norms, dtype=np.float64)
        self.mode = mode
        self.less_equal = np.zeros(self.r.shape[0], dtype=bool) if less_equal is None else np.asarray(less_equal, dtype=bool)
        self.refresh()

    def __len__(self):
        return len(self.heap)

    def _score(self, i):
        v = self.r[i]
        if self.less_equal[i] and v < 0.0:
            return 0.0
        v = abs(v)
        return v / self.norms[i] if self.mode is ScoreMode.DISTANCE else v

    def _above(self, a, b):
        sa, sb = self.scores[a], self.scores[b]
        return sa > sb or (sa == sb and a < b)

    def _swap(self, p, q):
        heap, pos = self.heap, self.pos
        heap[p], heap[q] = heap[q], heap[p]
        pos[heap[p]] = p
        pos[heap[q]] = q

    def _sift_up(self, p):
        heap = self.heap
        while p > 0:
            parent = (p - 1) >> 1
            if not self._above(heap[p], heap[parent]):
                break
            self._swap(p, parent)
            p = parent

    def _sift_down(self, p):
        heap = self.heap
        size = len(heap)
        while True:
            best = p
            for child in (2 * p + 1, 2 * p + 2):
                if child < size and self._above(heap[child], heap[best]):
                    best = child
            if best == p:
                return
            self._swap(p, best)
            p = best

    def refresh(self):
        self.scores = row_scores(self.r, self.norms, self.mode, self.less_equal).tolist()
        self.heap = list(range(len(self.scores)))
        self.pos = list(range(len(self.scores)))
        for p in range(len(self.heap) // 2 - 1, -1, -1):
            self._sift_down(p)

    def update(self, i):
        old = self.scores[i]
        new = self._score(i)
        self.scores[i] = new
        if new > old:
            self._sift_up(self.pos[i])
        elif new < old:
            self._sift_down(self.pos[i])

    def update_rows(self, rows):
        for i in rows:
            self.update(int(i))

    def peek(self):
        top = self.heap[0]
        return top, self.scores[top]

    def check(self):
        for p in range(1, len(self.heap)):
            if self._above(self.heap[p], self.heap[(p - 1) >> 1]):
                return False
        return all(self.heap[self.pos[i]] == i for i in range(len(self.heap)))


def heap_build(residuals, norms, mode, less_equal=None):
    norms = getattr(norms, "norms", norms)
    return ResidualHeap(residuals, norms, mode, less_equal)


def propagate_sparse(system, residuals, changes):
    """Apply coordinate changes (j, old, new) to residuals through column j.

    Returns the rows whose residual moved.
    """
    touched = []
    for j, old, new in changes:
        delta = new - old
        if delta == 0.0:
            continue
        rows, vals = system.matrix.column(j)
        residuals[rows] += vals * delta
        touched.append(rows)
    return np.unique(np.concatenate(touched)) if touched else np.empty(0, dtype=np.int64)


def propagate_graph(system, graph, residuals, i_sel, x):
    """Zero the residual of the projected row and recompute its neighbours."""
    residuals[i_sel] = 0.0
    nbrs = graph.neighbors(i_sel)
    for i in nbrs:
        residuals[i] = system.matrix.row_dot(i, x) - system.rhs[i]
    return np.append(nbrs, i_sel)


def heap_update_sparse(heap, system, changes):
    touched = propagate_sparse(system, heap.r, changes)
    heap.update_rows(touched)
    return touched


def heap_update_graph(heap, system, graph, i_sel, x):
    touched = propagate_graph(system, graph, heap.r, i_sel, x)
    heap.update_rows(touched)
    return touched


class SumTree(object):
    """Complete binary tree of nonnegative leaf weights; node k holds the sum of 2k and 2k+1."""

    def __init__(self, size):
        self.size = int(size)
        cap = 1
        while cap < max(self.size, 1):
            cap <<= 1
        self.capacity = cap
        self.nodes = np.zeros(2 * cap, dtype=np.float64)

    @classmethod
    def build(cls, weights):
        weights = np.asarray(weights, dtype=np.float64)
        if np.any(weights < 0):
            raise ValueError("sum tree weights must be nonnegative")
        tree = cls(weights.shape[0])
        tree.nodes[tree.capacity:tree.capacity + tree.size] = weights
        for k in range(tree.capacity - 1, 0, -1):
            tree.nodes[k] = tree.nodes[2 * k] + tree.nodes[2 * k + 1]
        return tree

    @property
    def total(self):
        return float(self.nodes[1])

    def weight(self, i):
        return float(self.nodes[self.capacity + i])

    def weights(self):
        return self.nodes[self.capacity:self.capacity + self.size].copy()

    def update(self, i, w):
        if not 0 <= i < self.size:
            raise IndexError("leaf {} out of range for {} leaves".format(i, self.size))
        if w < 0:
            raise ValueError("sum tree weights must be nonnegative")
        nodes = self.nodes
        k = self.capacity + i
        nodes[k] = w
        k >>= 1
        while k:
            nodes[k] = nodes[2 * k] + nodes[2 * k + 1]
            k >>= 1

    def locate(self, target):
        """Leaf whose half-open cumulative interval [c_{i-1}, c_i) holds target.

        The descent never enters a zero-weight subtree, so rounding near the
        root total still lands on a real leaf with positive weight.
        """
        nodes = self.nodes
        k = 1
        while k < self.capacity:
            left = 2 * k
            if target < nodes[left] or nodes[left + 1] <= 0.0:
                k = left
            else:
                target -= nodes[left]
                k = left + 1
        return k - self.capacity

    def sample(self, u):
        total = self.total
        if total <= 0.0:
            raise NoSelectableRowError("cannot sample from a sum tree whose weights are all zero")
        target = u * total
        if target >= total:
            target = np.nextafter(total, 0.0)
        return self.locate(target)

    def check(self, rtol=1e-12):
        inner = self.nodes[1:self.capacity]
        sums = self.nodes[2:2 * self.capacity:2] + self.nodes[3:2 * self.capacity:2]
        return bool(np.all(np.abs(inner - sums) <= rtol * np.maximum(np.abs(sums), 1.0)))


def sumtree_sample(tree, u):
    return tree.sample(u)


def sumtree_update(tree, i, w):
    tree.update(i, w)


def qualifying_rows(scores, epsilon, additive):
    top = scores.max()
    if additive:
        return np.flatnonzero(scores ** 2 >= top ** 2 - epsilon)
    return np.flatnonzero(scores >= (1.0 - epsilon) * top)


def select(rule, residuals, norms, less_equal=None, rng=None, iteration=0, selectable=None, order=None):
    """One-shot selection from an explicit residual vector (no incremental state).

    RP reads position `iteration % m` of `order`, the permutation of the
    current pass, which the caller owns (see RandomPermutationSelector).
    """
    norms = np.asarray(getattr(norms, "norms", norms), dtype=np.float64)
    residuals = np.asarray(residuals, dtype=np.float64)
    m = residuals.shape[0]
    kind = rule.kind
    if kind is RuleKind.CYCLIC:
        return iteration % m
    if kind is RuleKind.RANDOM_PERMUTATION:
        if order is None or len(order) != m:
            raise ConfigurationError("rule RP needs the row permutation of the current pass")
        return int(order[iteration % m])
    if kind in (RuleKind.MAX_RESIDUAL, RuleKind.MAX_DISTANCE, RuleKind.HYBRID):
        if kind is RuleKind.HYBRID:
            mode = ScoreMode.RESIDUAL if iteration % 2 == 0 else ScoreMode.DISTANCE
        else:
            mode = ScoreMode.RESIDUAL if kind is RuleKind.MAX_RESIDUAL else ScoreMode.DISTANCE
        return int(np.argmax(row_scores(residuals, norms, mode, less_equal)))
    if rng is None:
        raise ConfigurationError("rule {} needs a random generator".format(rule.label))
    if kind in APPROXIMATE_RULES:
        rows = qualifying_rows(row_scores(residuals, norms, rule.target, less_equal), rule.epsilon,
                               kind is RuleKind.APPROX_ADDITIVE)
        return int(rows[rng.integers(rows.size)])
    weights = norms ** 2 if kind in (RuleKind.NON_UNIFORM, RuleKind.ADAPTIVE_NON_UNIFORM) else np.ones(m)
    if kind in ADAPTIVE_RULES:
        if selectable is None:
            raise ConfigurationError("adaptive rules need a selectable set")
        weights = np.where(selectable.flags, weights, 0.0)
    return SumTree.build(weights).sample(rng.random())


class CyclicSelector(object):

    def __init__(self, m):
        self.m = m

    def select(self, k):
        return k % self.m

    def observe(self, i, touched):
        pass

    def refresh(self):
        pass


class RandomPermutationSelector(CyclicSelector):

    def __init__(self, m, rng):
        super(RandomPermutationSelector, self).__init__(m)
        self.rng = rng
        self.order = None

    def select(self, k):
        if k % self.m == 0 or self.order is None:
            self.order = self.rng.permutation(self.m)
        return int(self.order[k % self.m])


class UniformSelector(CyclicSelector):

    def __init__(self, m, rng):
        super(UniformSelector, self).__init__(m)
        self.rng = rng

    def select(self, k):
        return int(self.rng.integers(self.m))


class NonUniformSelector(CyclicSelector):

    def __init__(self, sq_norms, rng):
        super(NonUniformSelector, self).__init__(sq_norms.shape[0])
        self.rng = rng
        self.cumulative = np.cumsum(sq_norms)

    def select(self, k):
        target = self.rng.random() * self.cumulative[-1]
        return min(int(np.searchsorted(self.cumulative, target, side="right")), self.m - 1)


class AdaptiveSelector(CyclicSelector):
    """Samples among selectable rows with weight 1 (A(u)) or ||a_i||^2 (A(Nu))."""

    def __init__(self, weights, graph, selectable, rng):
        super(AdaptiveSelector, self).__init__(weights.shape[0])
        self.base = np.asarray(weights, dtype=np.float64)
        self.graph = graph
        self.selectable = selectable
        self.rng = rng
        self.tree = SumTree.build(np.where(selectable.flags, self.base, 0.0))

    def select(self, k):
        if self.selectable.count == 0:
            raise NoSelectableRowError("no selectable rows remain")
        return self.tree.sample(self.rng.random())

    def observe(self, i, touched):
        for j in self.selectable.mark_selected(self.graph, i):
            self.tree.update(int(j), self.base[j] if self.selectable.flags[j] else 0.0)


class GreedySelector(CyclicSelector):

    def __init__(self, heap):
        super(GreedySelector, self).__init__(len(heap))
        self.heap = heap

    def select(self, k):
        return self.heap.peek()[0]

    def observe(self, i, touched):
        self.heap.update_rows(touched)

    def refresh(self):
        self.heap.refresh()


class HybridSelector(CyclicSelector):
    """MR on even iterations, MD on odd ones; one heap per score."""

    def __init__(self, residual_heap, distance_heap):
        super(HybridSelector, self).__init__(len(residual_heap))
        self.heaps = (residual_heap, distance_heap)

    def select(self, k):
        return self.heaps[k % 2].peek()[0]

    def observe(self, i, touched):
        for heap in self.heaps:
            heap.update_rows(touched)

    def refresh(self):
        for heap in self.heaps:
            heap.refresh()


class ApproximateSelector(CyclicSelector):
    """Uniform pick among rows meeting the multiplicative or additive error bound."""

    def __init__(self, residuals, norms, less_equal, rule, rng):
        super(ApproximateSelector, self).__init__(residuals.shape[0])
        self.r = residuals
        self.norms = norms
        self.less_equal = less_equal
        self.rule = rule
        self.rng = rng

    def select(self, k):
        scores = row_scores(self.r, self.norms, self.rule.target, self.less_equal)
        rows = qualifying_rows(scores, self.rule.epsilon, self.rule.kind is RuleKind.APPROX_ADDITIVE)
        return int(rows[self.rng.integers(rows.size)])


def make_selector(rule, system, residuals, graph=None, selectable=None):
    m = system.m
    rng = make_rng(rule.seed)
    norms = system.norms.norms
    less_equal = system.less_equal if system.has_inequalities else None
    kind = rule.kind
    if kind is RuleKind.CYCLIC:
        return CyclicSelector(m)
    if kind is RuleKind.RANDOM_PERMUTATION:
        return RandomPermutationSelector(m, rng)
    if kind is RuleKind.UNIFORM:
        return UniformSelector(m, rng)
    if kind is RuleKind.NON_UNIFORM:
        return NonUniformSelector(system.norms.sq_norms, rng)
    if kind in ADAPTIVE_RULES:
        if graph is None or selectable is None:
            raise ConfigurationError("adaptive rule {} needs an orthogonality graph".format(rule.label))
        weights = system.norms.sq_norms if kind is RuleKind.ADAPTIVE_NON_UNIFORM else np.ones(m)
        return AdaptiveSelector(weights, graph, selectable, rng)
    if kind is RuleKind.MAX_RESIDUAL:
        return GreedySelector(ResidualHeap(residuals, norms, ScoreMode.RESIDUAL, less_equal))
    if kind is RuleKind.MAX_DISTANCE:
        return GreedySelector(ResidualHeap(residuals, norms, ScoreMode.DISTANCE, less_equal))
    if kind is RuleKind.HYBRID:
        return HybridSelector(ResidualHeap(residuals, norms, ScoreMode.RESIDUAL, less_equal),
                              ResidualHeap(residuals, norms, ScoreMode.DISTANCE, less_equal))
    return ApproximateSelector(residuals, norms, less_equal, rule, rng)


class CoordinateRule(enum.Enum):
    GS = "gs"
    GSL = "gsl"


def cd_select_and_step(a, b, x, rule, residual=None):
    """One exact coordinate-minimization step on 1/2 ||Ax - b||^2.

    GS takes the largest |gradient_j|, GSL the largest |gradient_j| / ||A_:j||.
    Returns (j, new x).
    """
    rule = CoordinateRule(rule)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n,):
        raise DimensionError("x has shape {} but A has {} columns".format(x.shape, a.n))
    r = a.dot(x) - b if residual is None else residual
    grad = a.csc.T @ r
    col_sq = np.asarray(a.csc.multiply(a.csc).sum(axis=0)).ravel()
    if rule is CoordinateRule.GS:
        scores = np.abs(grad)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(col_sq > 0, np.abs(grad) / np.sqrt(col_sq), -1.0)
    j = int(np.argmax(scores))
    if col_sq[j] == 0:
        raise ZeroRowError("coordinate descent selected the all-zero column {}".format(j))
    new_x = x.copy()
    new_x[j] -= grad[j] / col_sq[j]
    return j, new_x
