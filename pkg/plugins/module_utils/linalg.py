# -*- coding: utf-8 -*-
"""Sparse storage, linear systems and the Hoffman-type constants.

Matrices keep both a CSR and a CSC view of the same nonzeros: a projection
touches the columns of one row, and the rows sharing those columns are the
residuals that change.
"""
from __future__ import absolute_import, division, print_function
__metaclass__ = type

import enum
import itertools
import logging
from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from .errors import DimensionError, InconsistentSystemError, SizeGuardError, ZeroRowError

log = logging.getLogger(__name__)

DENSE_LIMIT = 10 ** 7
CONSISTENCY_RTOL = 1e-10
ORACLE_MAX_COLUMNS = 3
VERTEX_LIMIT = 2 * 10 ** 6
_VERTEX_CHUNK = 20000


class ConstraintKind(enum.IntEnum):
    EQUALITY = 0
    LESS_EQUAL = 1


class SparseMatrix(object):
    """Row- and column-major views of one real sparse matrix."""

    def __init__(self, data, shape=None):
        csr = sp.csr_matrix(data, shape=shape, dtype=np.float64)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        self.csr = csr
        self.csc = csr.tocsc()
        self.csc.sort_indices()

    @classmethod
    def from_triples(cls, shape, rows, cols, values):
        coo = sp.coo_matrix((np.asarray(values, dtype=np.float64),
                             (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
                            shape=shape)
        return cls(coo)

    @classmethod
    def from_dense(cls, array):
        array = np.atleast_2d(np.asarray(array, dtype=np.float64))
        return cls(array)

    @property
    def shape(self):
        return self.csr.shape

    @property
    def m(self):
        return self.csr.shape[0]

    @property
    def n(self):
        return self.csr.shape[1]

    @property
    def nnz(self):
        return self.csr.nnz

    def row(self, i):
        start, end = self.csr.indptr[i], self.csr.indptr[i + 1]
        return self.csr.indices[start:end], self.csr.data[start:end]

    def column(self, j):
        start, end = self.csc.indptr[j], self.csc.indptr[j + 1]
        return self.csc.indices[start:end], self.csc.data[start:end]

    def row_dot(self, i, x):
        idx, vals = self.row(i)
        return float(np.dot(vals, x[idx]))

    def dot(self, x):
        return self.csr @ x

    def triples(self):
        coo = self.csr.tocoo()
        return coo.row.copy(), coo.col.copy(), coo.data.copy()

    def row_nnz(self):
        return np.diff(self.csr.indptr)

    def col_nnz(self):
        return np.diff(self.csc.indptr)

    @property
    def max_row_nnz(self):
        return int(self.row_nnz().max()) if self.m else 0

    @property
    def max_col_nnz(self):
        return int(self.col_nnz().max()) if self.n else 0

    def scale_rows(self, factors):
        return SparseMatrix(sp.diags(np.asarray(factors, dtype=np.float64)) @ self.csr)

    def toarray(self):
        return self.csr.toarray()

    def __repr__(self):
        return "SparseMatrix(shape={}, nnz={})".format(self.shape, self.nnz)


@dataclass(frozen=True, eq=False)
class RowNormCache:
    norms: np.ndarray
    frobenius_sq: float
    max_norm: float

    @classmethod
    def from_matrix(cls, matrix):
        sq = np.asarray(matrix.csr.multiply(matrix.csr).sum(axis=1)).ravel()
        norms = np.sqrt(sq)
        return cls(norms=norms, frobenius_sq=float(sq.sum()),
                   max_norm=float(norms.max()) if norms.size else 0.0)

    @property
    def sq_norms(self):
        # also the coordinate Lipschitz constants of the dual problem
        return self.norms ** 2


@dataclass(eq=False)
class LinearSystem:
    matrix: SparseMatrix
    rhs: np.ndarray
    kinds: Optional[np.ndarray] = None
    reference_solution: Optional[np.ndarray] = None
    norms: RowNormCache = field(init=False, repr=False)

    def __post_init__(self):
        m, n = self.matrix.shape
        self.rhs = np.asarray(self.rhs, dtype=np.float64).ravel()
        if self.rhs.shape[0] != m:
            raise DimensionError("rhs has length {} but the matrix has {} rows".format(self.rhs.shape[0], m))
        if self.kinds is None:
            self.kinds = np.zeros(m, dtype=np.int8)
        else:
            self.kinds = np.asarray(self.kinds, dtype=np.int8).ravel()
            if self.kinds.shape[0] != m:
                raise DimensionError("kinds has length {} but the matrix has {} rows".format(self.kinds.shape[0], m))
        self.norms = RowNormCache.from_matrix(self.matrix)
        zero_rows = np.flatnonzero(self.norms.norms == 0)
        if zero_rows.size:
            raise ZeroRowError("system has {} all-zero row(s), first is row {}".format(zero_rows.size, zero_rows[0]),
                               rows=zero_rows.tolist())
        if self.reference_solution is not None:
            self.reference_solution = np.asarray(self.reference_solution, dtype=np.float64).ravel()
            if self.reference_solution.shape[0] != n:
                raise DimensionError("reference solution has length {} but the matrix has {} columns".format(
                    self.reference_solution.shape[0], n))
            gap = np.max(np.abs(clipped_residual(self, residual_vector(self, self.reference_solution))), initial=0.0)
            tol = CONSISTENCY_RTOL * (1.0 + np.max(np.abs(self.rhs), initial=0.0))
            if gap > tol:
                raise InconsistentSystemError("reference solution violates the system by {:.3e} (tolerance {:.3e})".format(gap, tol))

    @property
    def m(self):
        return self.matrix.m

    @property
    def n(self):
        return self.matrix.n

    @property
    def less_equal(self):
        return self.kinds == ConstraintKind.LESS_EQUAL

    @property
    def has_inequalities(self):
        return bool(np.any(self.less_equal))


def residual_vector(system, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (system.n,):
        raise DimensionError("x has shape {} but the system has {} columns".format(x.shape, system.n))
    return system.matrix.dot(x) - system.rhs


def clipped_residual(system, r):
    """e(r): positive part on less-equal rows, identity on equality rows."""
    return np.where(system.less_equal, np.maximum(r, 0.0), r)


def normalized_matrix(system):
    if np.any(system.norms.norms == 0):
        raise ZeroRowError("cannot normalize a matrix with zero rows")
    return system.matrix.scale_rows(1.0 / system.norms.norms)


def diagonal_entries(matrix):
    """|values| when every row holds one nonzero in its own column, else None."""
    if matrix.nnz != matrix.m or np.any(matrix.row_nnz() != 1):
        return None
    if np.unique(matrix.csr.indices).size != matrix.m:
        return None
    return np.abs(matrix.csr.data.copy())


def _as_matrix(obj):
    return obj.matrix if isinstance(obj, LinearSystem) else obj


def _dense(matrix):
    m, n = matrix.shape
    if m * n > DENSE_LIMIT:
        raise SizeGuardError("dense factorization of a {}x{} matrix exceeds the m*n <= {} guard".format(m, n, DENSE_LIMIT))
    return matrix.toarray()


def singular_values(obj):
    return np.linalg.svd(_dense(_as_matrix(obj)), compute_uv=False)


def rank_tolerance(shape, s_max):
    return max(shape) * np.finfo(np.float64).eps * s_max


def sigma_two(obj):
    """Smallest singular value above the numerical-rank tolerance."""
    matrix = _as_matrix(obj)
    s = singular_values(matrix)
    if s.size == 0 or s[0] == 0:
        return 0.0
    nonzero = s[s > rank_tolerance(matrix.shape, s[0])]
    return float(nonzero[-1])


def row_space_basis(dense):
    _, s, vt = np.linalg.svd(dense, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((dense.shape[1], 0))
    rank = int(np.sum(s > rank_tolerance(dense.shape, s[0])))
    return vt[:rank].T


def _vertex_max_norm(b):
    m, r = b.shape
    if r == 1:
        return 1.0 / np.max(np.abs(b))
    signs = np.array([(1.0,) + rest for rest in itertools.product((1.0, -1.0), repeat=r - 1)]).T
    best = 0.0
    combos = itertools.combinations(range(m), r)
    while True:
        chunk = np.array(list(itertools.islice(combos, _VERTEX_CHUNK)), dtype=np.int64)
        if chunk.size == 0:
            break
        mats = b[chunk]
        scale = np.prod(np.linalg.norm(mats, axis=2), axis=1)
        ok = np.abs(np.linalg.det(mats)) > 1e-12 * scale
        if not np.any(ok):
            continue
        mats = mats[ok]
        sol = np.linalg.solve(mats, np.broadcast_to(signs, (mats.shape[0], r, signs.shape[1])))
        vertices = sol.transpose(0, 2, 1).reshape(-1, r)
        feasible = np.max(np.abs(b @ vertices.T), axis=0) <= 1.0 + 1e-9
        if np.any(feasible):
            best = max(best, float(np.max(np.linalg.norm(vertices[feasible], axis=1))))
    return best


def _sampled_min(b, samples, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    r = b.shape[1]

    def objective(u):
        nrm = np.linalg.norm(u)
        return np.inf if nrm == 0 else float(np.max(np.abs(b @ (u / nrm))))

    dirs = rng.standard_normal((samples, r))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    _, _, vt = np.linalg.svd(b, full_matrices=False)
    dirs = np.vstack([dirs, vt])
    values = np.max(np.abs(dirs @ b.T), axis=1)
    best = float(values.min())
    for start in dirs[np.argsort(values)[:5]]:
        res = minimize(objective, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        best = min(best, float(res.fun))
    return best


def sigma_infinity_oracle(obj, samples=20000, seed=0):
    """inf over x outside the solution set of ||A(x - x*)||_inf / ||x - x*||.

    Diagonal (one nonzero per row, distinct columns) matrices use the closed
    form (sum 1/lambda_i^2)^(-1/2). Otherwise n <= 3 is required: the
    constant is the reciprocal of the largest vertex norm of the polytope
    {u : ||B u||_inf <= 1}, B being A expressed in a basis of its row space.
    Vertices are enumerated exactly while that stays under VERTEX_LIMIT
    linear solves; beyond it, dense direction sampling refined by
    Nelder-Mead gives an estimate from above.
    """
    matrix = _as_matrix(obj)
    lam = diagonal_entries(matrix)
    if lam is not None:
        return float(np.sum(1.0 / lam ** 2) ** -0.5)
    if matrix.n > ORACLE_MAX_COLUMNS:
        raise SizeGuardError("generic sigma_infinity oracle needs n <= {}, got n = {}".format(ORACLE_MAX_COLUMNS, matrix.n))
    dense = _dense(matrix)
    b = dense @ row_space_basis(dense)
    m, r = b.shape
    if r == 0:
        return 0.0
    if comb(m, r) * 2 ** (r - 1) <= VERTEX_LIMIT:
        return 1.0 / _vertex_max_norm(b)
    log.warning("vertex enumeration for a %dx%d system is too large, falling back to direction sampling", m, r)
    return _sampled_min(b, samples, seed)


def augment_least_squares(a, b, with_reference=False):
    """[[A, -I], [0, A^T]] (x; y) = (b; 0), consistent for any A and b."""
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = a.shape
    if b.shape[0] != m:
        raise DimensionError("b has length {} but A has {} rows".format(b.shape[0], m))
    block = sp.bmat([[a.csr, -sp.identity(m, format="csr")],
                     [sp.csr_matrix((n, n)), a.csr.T]], format="csr")
    reference = None
    if with_reference:
        x = np.linalg.lstsq(_dense(a), b, rcond=None)[0]
        reference = np.concatenate([x, a.dot(x) - b])
    return LinearSystem(SparseMatrix(block), np.concatenate([b, np.zeros(n)]), reference_solution=reference)
