# -*- coding: utf-8 -*-
"""Orthogonality graph, selectable rows and star-subgraph bounds."""
from __future__ import absolute_import, division, print_function
__metaclass__ = type

import enum
import itertools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DataFileError, DimensionError, EmptyGraphError, SizeGuardError
from .linalg import clipped_residual

log = logging.getLogger(__name__)

DEFAULT_TAU = 1e-12
EXHAUSTIVE_MAX_DEGREE = 12
PROBLEM1_MAX_NODES = 6
PROBLEM1_MAX_STEPS = 14


class GraphMode(enum.Enum):
    EXACT = "exact"
    SUPPORT = "support"


class OrthogonalityGraph(object):

    def __init__(self, adjacency, mode):
        coo = sp.coo_matrix(adjacency)
        keep = (coo.row != coo.col) & (coo.data != 0)
        rows = np.concatenate([coo.row[keep], coo.col[keep]])
        cols = np.concatenate([coo.col[keep], coo.row[keep]])
        shape = coo.shape
        adjacency = sp.coo_matrix((np.ones(rows.size, dtype=np.int32), (rows, cols)), shape=shape).tocsr()
        adjacency.data[:] = 1
        adjacency.sort_indices()
        self.adjacency = adjacency
        self.mode = mode

    @property
    def m(self):
        return self.adjacency.shape[0]

    def neighbors(self, i):
        return self.adjacency.indices[self.adjacency.indptr[i]:self.adjacency.indptr[i + 1]]

    def degrees(self):
        return np.diff(self.adjacency.indptr)

    @property
    def max_degree(self):
        return int(self.degrees().max()) if self.m else 0

    @property
    def edge_count(self):
        return self.adjacency.nnz // 2

    def has_edge(self, i, j):
        return j in self.neighbors(i)

    def edges(self):
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return list(zip(coo.row[order].tolist(), coo.col[order].tolist()))

    def is_subgraph_of(self, other):
        return (self.adjacency - self.adjacency.multiply(other.adjacency)).nnz == 0

    @classmethod
    def from_edges(cls, m, edges, mode=GraphMode.EXACT):
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        return cls(sp.coo_matrix((np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])), shape=(m, m)), mode)

    def __repr__(self):
        return "OrthogonalityGraph(m={}, edges={}, max_degree={}, mode={})".format(
            self.m, self.edge_count, self.max_degree, self.mode.value)


def build_exact_graph(system, tau=DEFAULT_TAU):
    a = system.matrix.csr
    gram = (a @ a.T).tocoo()
    norms = system.norms.norms
    keep = (gram.row != gram.col) & (np.abs(gram.data) > tau * norms[gram.row] * norms[gram.col])
    adj = sp.coo_matrix((np.ones(int(keep.sum())), (gram.row[keep], gram.col[keep])),
                        shape=(system.m, system.m))
    graph = OrthogonalityGraph(adj, GraphMode.EXACT)
    log.debug("built %r", graph)
    return graph


def build_support_graph(system):
    pattern = system.matrix.csr.copy()
    pattern.data = np.ones_like(pattern.data)
    overlap = (pattern @ pattern.T).tocoo()
    keep = overlap.row != overlap.col
    adj = sp.coo_matrix((np.ones(int(keep.sum())), (overlap.row[keep], overlap.col[keep])),
                        shape=(system.m, system.m))
    graph = OrthogonalityGraph(adj, GraphMode.SUPPORT)
    log.debug("built %r", graph)
    return graph


def build_graph(system, mode, tau=DEFAULT_TAU):
    if mode is None:
        return None
    mode = GraphMode(mode)
    return build_exact_graph(system, tau) if mode is GraphMode.EXACT else build_support_graph(system)


def graph_edge_list(graph):
    return ["{} {}".format(i, j) for i, j in graph.edges()]


def write_edge_list(path, graph):
    try:
        with open(path, "w") as f:
            f.write("# m={} mode={}\n".format(graph.m, graph.mode.value))
            for line in graph_edge_list(graph):
                f.write(line + "\n")
    except OSError as e:
        raise DataFileError("Failed to write edge list {}: {}".format(path, e), path=path)
    return path


class SelectableSet(object):
    """Rows whose equality may currently be violated."""

    def __init__(self, flags):
        self.flags = np.asarray(flags, dtype=bool).copy()
        self.count = int(self.flags.sum())

    def __len__(self):
        return self.count

    def __contains__(self, i):
        return bool(self.flags[i])

    def rows(self):
        return np.flatnonzero(self.flags)

    def mark_selected(self, graph, i):
        """Clear row i and re-activate its neighbours; returns rows whose flag changed."""
        if not 0 <= i < self.flags.shape[0]:
            raise IndexError("row {} out of range for {} rows".format(i, self.flags.shape[0]))
        nbrs = graph.neighbors(i)
        woken = nbrs[~self.flags[nbrs]]
        was_set = bool(self.flags[i])
        self.flags[i] = False
        self.flags[woken] = True
        self.count += woken.size - int(was_set)
        return np.append(woken, i) if was_set else woken


def mark_selected(selectable, graph, i):
    return selectable.mark_selected(graph, i)


def init_selectable(system, x0_is_zero):
    """All rows selectable; with x0 = 0, rows already satisfied by x0 start cleared."""
    flags = np.ones(system.m, dtype=bool)
    if x0_is_zero:
        flags &= clipped_residual(system, -system.rhs) != 0
    return SelectableSet(flags)


@dataclass(eq=False)
class StarBoundResult:
    best_center: int
    best_leaf_set: tuple
    geometric_mean: float
    weights: np.ndarray

    @property
    def star(self):
        return (self.best_center,) + tuple(self.best_leaf_set)

    @property
    def cycle_length(self):
        return 1 + len(self.best_leaf_set)


def _check_weights(graph, weights):
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if weights.shape[0] != graph.m:
        raise DimensionError("weights have length {} but the graph has {} nodes".format(weights.shape[0], graph.m))
    if graph.edge_count == 0:
        raise EmptyGraphError("star bounds need a graph with at least one edge")
    return weights


def _log(w):
    with np.errstate(divide="ignore"):
        return np.log(w)


def _best_leaves(center, nbrs, logw):
    order = nbrs[np.lexsort((nbrs, -logw[nbrs]))]
    total = logw[center] + logw[order[0]]
    size = 2
    for j in order[1:]:
        if logw[j] * size <= total:
            break
        total += logw[j]
        size += 1
    return tuple(sorted(order[:size - 1].tolist())), total / size


def star_bound(graph, weights):
    """Largest geometric mean over star subgraphs with at least two nodes.

    For a fixed center the best leaves are a prefix of its neighbours sorted
    by weight: a leaf raises the mean exactly when it exceeds the current
    mean, and once one does not, no lighter leaf can.
    """
    weights = _check_weights(graph, weights)
    logw = _log(weights)
    best = None
    for c in range(graph.m):
        nbrs = graph.neighbors(c)
        if nbrs.size == 0:
            continue
        leaves, mean = _best_leaves(c, nbrs, logw)
        if best is None or mean > best[2]:
            best = (c, leaves, mean)
    return StarBoundResult(best[0], best[1], float(np.exp(best[2])), weights)


def exhaustive_star_bound(graph, weights):
    weights = _check_weights(graph, weights)
    if graph.max_degree > EXHAUSTIVE_MAX_DEGREE:
        raise SizeGuardError("exhaustive star enumeration limited to degree <= {}".format(EXHAUSTIVE_MAX_DEGREE))
    logw = _log(weights)
    best = None
    for c in range(graph.m):
        nbrs = graph.neighbors(c).tolist()
        for size in range(1, len(nbrs) + 1):
            for leaves in itertools.combinations(nbrs, size):
                mean = (logw[c] + logw[list(leaves)].sum()) / (size + 1)
                if best is None or mean > best[2]:
                    best = (c, tuple(leaves), mean)
    return StarBoundResult(best[0], best[1], float(np.exp(best[2])), weights)


def problem1_bruteforce(graph, weights, k):
    """Best product of weights over length-k sequences in which a node,
    once chosen, waits for a neighbour to be chosen before it is eligible
    again. All nodes start eligible.
    """
    weights = _check_weights(graph, weights)
    m = graph.m
    if m > PROBLEM1_MAX_NODES or k > PROBLEM1_MAX_STEPS:
        raise SizeGuardError("Problem 1 dynamic program limited to m <= {} and k <= {}".format(
            PROBLEM1_MAX_NODES, PROBLEM1_MAX_STEPS))
    nbr_mask = [sum(1 << int(j) for j in graph.neighbors(i)) for i in range(m)]
    frontier = {(1 << m) - 1: 1.0}
    for _ in range(k):
        nxt = {}
        for mask, value in frontier.items():
            for i in range(m):
                if mask >> i & 1:
                    new_mask = (mask & ~(1 << i)) | nbr_mask[i]
                    candidate = value * weights[i]
                    if candidate > nxt.get(new_mask, -1.0):
                        nxt[new_mask] = candidate
        frontier = nxt
    return max(frontier.values())
