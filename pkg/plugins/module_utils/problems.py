# -*- coding: utf-8 -*-
"""Seeded test-problem generators.

Every generator draws from one numpy Generator(PCG64(seed)) in a fixed
order, so the same spec always yields a bitwise-identical system.
"""
from __future__ import absolute_import, division, print_function
__metaclass__ = type

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg
import yaml
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import ConfigurationError, DimensionError, InconsistentSystemError, ZeroRowError
from .linalg import ConstraintKind, LinearSystem, SparseMatrix
from .selection import make_rng

log = logging.getLogger(__name__)

TWO_MOONS_RETRIES = 10

DEFAULTS = {
    "lattice": {"side": 50},
    "overdetermined": {"m": 2500, "n": 1000, "scale_prob": 1.0 / 11, "scale_factor": 1e4},
    "two_moons": {"samples": 2000, "labeled": 100, "k_neighbors": 5, "noise": 0.1},
    "diagonal": {"lam": None},
    "random_consistent": {"m": 50, "n": 20, "density": 1.0},
    "halfspaces": {"m": 50, "n": 10, "equalities": 0},
    "box": {"n": 5},
}


@dataclass
class GeneratorSpec:
    kind: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DEFAULTS:
            raise ConfigurationError("Unknown problem kind '{}', expected one of: {}".format(
                self.kind, ", ".join(sorted(DEFAULTS))))
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ConfigurationError("Unknown parameter(s) for {}: {}".format(self.kind, ", ".join(sorted(unknown))))
        merged = dict(DEFAULTS[self.kind])
        merged.update(self.params)
        self.params = merged
        try:
            self.seed = int(self.seed)
        except (TypeError, ValueError):
            raise ConfigurationError("seed must be an integer, got {!r}".format(self.seed))
        self._check()

    def _check(self):
        p = self.params
        if self.kind == "diagonal":
            if p["lam"] is None:
                raise ConfigurationError("diagonal problems need a 'lam' list")
            return
        for key, value in p.items():
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0:
                raise ConfigurationError("{} must be a nonnegative number, got {!r}".format(key, value))
        if self.kind == "lattice" and p["side"] < 2:
            raise ConfigurationError("lattice side must be at least 2")
        if self.kind == "overdetermined" and not p["m"] > p["n"] >= 1:
            raise ConfigurationError("overdetermined problems need m > n >= 1")
        if self.kind == "two_moons":
            if not 2 <= p["labeled"] < p["samples"]:
                raise ConfigurationError("two_moons needs 2 <= labeled < samples")
            if p["k_neighbors"] < 1:
                raise ConfigurationError("two_moons needs k_neighbors >= 1")
        if self.kind == "random_consistent" and not 0 < p["density"] <= 1:
            raise ConfigurationError("density must lie in (0, 1]")

    @classmethod
    def from_mapping(cls, data):
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigurationError("problem mapping needs a 'kind' key")
        data = dict(data)
        kind = data.pop("kind")
        seed = data.pop("seed", 0)
        return cls(kind, seed=seed, params=data)

    @classmethod
    def parse(cls, text):
        """'lattice:side=20,seed=3' or a bare kind name."""
        kind, _, body = text.partition(":")
        data = {}
        if body.strip():
            try:
                data = yaml.safe_load("{" + body.replace("=", ": ") + "}")
            except yaml.YAMLError as e:
                raise ConfigurationError("Could not parse problem parameters '{}': {}".format(body, e))
        data["kind"] = kind.strip()
        return cls.from_mapping(data)

    def to_mapping(self):
        out = {"kind": self.kind, "seed": self.seed}
        out.update({k: (list(v) if isinstance(v, (list, tuple, np.ndarray)) else v) for k, v in self.params.items()})
        return out

    def describe(self):
        return yaml.safe_dump(self.to_mapping(), default_flow_style=True).strip()


def _consistent(matrix, z):
    return LinearSystem(matrix, matrix.dot(z), reference_solution=z)


def gen_lattice(side, seed):
    """A_ii, A_{i,i+1} / A_{i+1,i} unless i+1 ends a lattice row, and the bands A_{i,i+side} / A_{i+side,i}."""
    side = int(side)
    if side < 2:
        raise ConfigurationError("lattice side must be at least 2")
    n = side * side
    idx = np.arange(n)
    right = idx[(idx + 1) % side != 0]
    down = idx[idx + side < n]
    rows = np.concatenate([idx, right, right + 1, down, down + side])
    cols = np.concatenate([idx, right + 1, right, down + side, down])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    rng = make_rng(seed)
    values = rng.standard_normal(rows.shape[0])
    matrix = SparseMatrix.from_triples((n, n), rows, cols, values)
    return _consistent(matrix, rng.standard_normal(n))


def gen_overdetermined(m, n, seed, scale_prob=1.0 / 11, scale_factor=1e4):
    """Each entry nonzero with probability log(m)/(2m), Uniform(0,1] values, rows rescaled with probability scale_prob."""
    m, n = int(m), int(n)
    if not m > n >= 1:
        raise ConfigurationError("overdetermined problems need m > n >= 1")
    rng = make_rng(seed)
    p = np.log(m) / (2.0 * m)
    mask = rng.random((m, n)) < p
    empty = np.flatnonzero(~mask.any(axis=1))
    while empty.size:
        mask[empty] = rng.random((empty.size, n)) < p
        empty = empty[~mask[empty].any(axis=1)]
    rows, cols = np.nonzero(mask)
    values = 1.0 - rng.random(rows.shape[0])
    scaled = rng.random(m) < scale_prob
    values = np.where(scaled[rows], values * scale_factor, values)
    matrix = SparseMatrix.from_triples((m, n), rows, cols, values)
    log.debug("overdetermined %dx%d: %d nonzeros, %d scaled rows", m, n, matrix.nnz, int(scaled.sum()))
    return _consistent(matrix, rng.standard_normal(n))


def label_propagation_system(weights, labels, labeled):
    """Harmonic-function system over the unlabeled nodes.

    A_kk = sum_j w_kj over all nodes, A_ki = -w_ki between unlabeled nodes
    and b_k = sum over labeled i of w_ki y_i.
    """
    w = sp.csr_matrix(weights, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    labeled = np.asarray(labeled, dtype=bool)
    if w.shape[0] != w.shape[1] or labels.shape[0] != w.shape[0] or labeled.shape[0] != w.shape[0]:
        raise DimensionError("weights, labels and labeled mask disagree in size")
    free = np.flatnonzero(~labeled)
    fixed = np.flatnonzero(labeled)
    if free.size == 0:
        return LinearSystem(SparseMatrix(sp.csr_matrix((0, 0))), np.zeros(0), reference_solution=np.zeros(0))
    degree = np.asarray(w.sum(axis=1)).ravel()
    isolated = free[degree[free] == 0]
    if isolated.size:
        raise ZeroRowError("unlabeled node {} is isolated (zero diagonal)".format(isolated[0]), nodes=isolated.tolist())
    w_ff = w[free][:, free]
    ncomp, comp = connected_components(w_ff, directed=False)
    reach = np.asarray(w[free][:, fixed].sum(axis=1)).ravel() > 0
    orphan = np.setdiff1d(np.arange(ncomp), np.unique(comp[reach]))
    if orphan.size:
        raise InconsistentSystemError("{} unlabeled component(s) have no labeled neighbour".format(orphan.size),
                                      components=orphan.size)
    a = (sp.diags(degree[free]) - w_ff).tocsr()
    b = w[free][:, fixed] @ labels[fixed]
    reference = scipy.sparse.linalg.spsolve(a.tocsc(), b)
    return LinearSystem(SparseMatrix(a), b, reference_solution=np.atleast_1d(reference))


def two_moons(samples, noise, rng):
    """Two interleaving radius-1 half circles; the second is flipped and shifted by (1, -0.5) from its mirror image."""
    outer = samples // 2
    inner = samples - outer
    t_out = np.pi * rng.random(outer)
    t_in = np.pi * rng.random(inner)
    points = np.vstack([
        np.column_stack([np.cos(t_out), np.sin(t_out)]),
        np.column_stack([1.0 - np.cos(t_in), 0.5 - np.sin(t_in)]),
    ])
    points += noise * rng.standard_normal(points.shape)
    labels = np.concatenate([np.ones(outer), -np.ones(inner)])
    return points, labels


def knn_weights(points, k):
    """Binary k-nearest-neighbour adjacency, symmetrized by union."""
    count = points.shape[0]
    _, nbrs = cKDTree(points).query(points, k=min(k + 1, count))
    nbrs = np.asarray(nbrs).reshape(count, -1)[:, 1:]
    rows = np.repeat(np.arange(count), nbrs.shape[1])
    w = sp.coo_matrix((np.ones(rows.size), (rows, nbrs.ravel())), shape=(count, count)).tocsr()
    w = ((w + w.T) > 0).astype(np.float64)
    w.setdiag(0)
    w.eliminate_zeros()
    return w


def _pick_labeled(labels, labeled, rng):
    chosen = rng.choice(labels.shape[0], size=labeled, replace=False)
    for cls in (1.0, -1.0):
        if not np.any(labels[chosen] == cls):
            candidates = np.setdiff1d(np.flatnonzero(labels == cls), chosen)
            replace = 0 if cls == 1.0 else labeled - 1
            chosen[replace] = rng.choice(candidates)
    mask = np.zeros(labels.shape[0], dtype=bool)
    mask[chosen] = True
    return mask


def gen_two_moons_label_prop(samples, labeled, k, noise, seed):
    samples, labeled, k = int(samples), int(labeled), int(k)
    if not 2 <= labeled < samples:
        raise ConfigurationError("two_moons needs 2 <= labeled < samples")
    if k < 1:
        raise ConfigurationError("two_moons needs k_neighbors >= 1")
    for attempt in range(TWO_MOONS_RETRIES):
        rng = make_rng(seed + attempt)
        points, labels = two_moons(samples, noise, rng)
        mask = _pick_labeled(labels, labeled, rng)
        try:
            return label_propagation_system(knn_weights(points, k), labels, mask)
        except InconsistentSystemError as e:
            log.warning("two-moons instance with seed %d is singular (%s); regenerating with seed %d",
                        seed + attempt, e, seed + attempt + 1)
    raise InconsistentSystemError("no nonsingular two-moons instance after {} seeds".format(TWO_MOONS_RETRIES))


def gen_diagonal(lam, seed, reference=None):
    lam = np.asarray(lam, dtype=np.float64).ravel()
    if lam.size == 0 or np.any(lam <= 0):
        raise ConfigurationError("diagonal entries must be positive")
    z = make_rng(seed).standard_normal(lam.size) if reference is None else np.asarray(reference, dtype=np.float64)
    if z.shape != lam.shape:
        raise DimensionError("reference has length {} but there are {} diagonal entries".format(z.shape[0], lam.size))
    idx = np.arange(lam.size)
    matrix = SparseMatrix.from_triples((lam.size, lam.size), idx, idx, lam)
    return LinearSystem(matrix, lam * z, reference_solution=z)


def gen_random_consistent(m, n, density, seed):
    m, n = int(m), int(n)
    if m < 1 or n < 1 or not 0 < density <= 1:
        raise ConfigurationError("random_consistent needs m, n >= 1 and density in (0, 1]")
    rng = make_rng(seed)
    mask = rng.random((m, n)) < density
    empty = np.flatnonzero(~mask.any(axis=1))
    while empty.size:
        mask[empty] = rng.random((empty.size, n)) < density
        empty = empty[~mask[empty].any(axis=1)]
    rows, cols = np.nonzero(mask)
    matrix = SparseMatrix.from_triples((m, n), rows, cols, rng.standard_normal(rows.shape[0]))
    return _consistent(matrix, rng.standard_normal(n))


def gen_halfspaces(m, n, seed, equalities=0):
    """Gaussian halfspaces a_i x <= b_i containing a known point; the first `equalities` rows pass through it."""
    m, n, equalities = int(m), int(n), int(equalities)
    if m < 1 or n < 1 or not 0 <= equalities <= m:
        raise ConfigurationError("halfspaces need m, n >= 1 and 0 <= equalities <= m")
    rng = make_rng(seed)
    point = rng.standard_normal(n)
    dense = rng.standard_normal((m, n))
    slack = rng.random(m)
    slack[:equalities] = 0.0
    kinds = np.full(m, ConstraintKind.LESS_EQUAL, dtype=np.int8)
    kinds[:equalities] = ConstraintKind.EQUALITY
    matrix = SparseMatrix.from_dense(dense)
    return LinearSystem(matrix, matrix.dot(point) + slack, kinds=kinds, reference_solution=point)


def gen_box(n, seed):
    """lower_j <= x_j <= upper_j around a random center, as 2n single-coordinate rows."""
    n = int(n)
    if n < 1:
        raise ConfigurationError("box needs n >= 1")
    rng = make_rng(seed)
    center = 3.0 * rng.standard_normal(n)
    half = 0.5 + rng.random(n)
    idx = np.arange(n)
    rows = np.concatenate([2 * idx, 2 * idx + 1])
    cols = np.concatenate([idx, idx])
    values = np.concatenate([np.ones(n), -np.ones(n)])
    rhs = np.empty(2 * n)
    rhs[0::2] = center + half
    rhs[1::2] = -(center - half)
    matrix = SparseMatrix.from_triples((2 * n, n), rows, cols, values)
    kinds = np.full(2 * n, ConstraintKind.LESS_EQUAL, dtype=np.int8)
    return LinearSystem(matrix, rhs, kinds=kinds, reference_solution=center)


def generate(spec):
    p = spec.params
    kind = spec.kind
    log.debug("generating %s", spec.describe())
    if kind == "lattice":
        return gen_lattice(p["side"], spec.seed)
    if kind == "overdetermined":
        return gen_overdetermined(p["m"], p["n"], spec.seed, p["scale_prob"], p["scale_factor"])
    if kind == "two_moons":
        return gen_two_moons_label_prop(p["samples"], p["labeled"], p["k_neighbors"], p["noise"], spec.seed)
    if kind == "diagonal":
        return gen_diagonal(p["lam"], spec.seed)
    if kind == "random_consistent":
        return gen_random_consistent(p["m"], p["n"], p["density"], spec.seed)
    if kind == "halfspaces":
        return gen_halfspaces(p["m"], p["n"], spec.seed, p["equalities"])
    return gen_box(p["n"], spec.seed)
