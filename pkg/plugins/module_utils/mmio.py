# -*- coding: utf-8 -*-
"""Matrix Market matrices and one-value-per-line vector files."""
from __future__ import absolute_import, division, print_function
__metaclass__ = type

import logging
import os

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import DataFileError
from .linalg import ConstraintKind, LinearSystem, SparseMatrix

log = logging.getLogger(__name__)

KIND_TOKENS = {"eq": ConstraintKind.EQUALITY, "le": ConstraintKind.LESS_EQUAL}

SYSTEM_FILES = {
    "matrix": "A.mtx",
    "rhs": "b.txt",
    "reference": "z.txt",
    "kinds": "kinds.txt",
}


def read_matrix(path):
    try:
        data = scipy.io.mmread(path)
    except (OSError, ValueError) as e:
        raise DataFileError("Failed to read Matrix Market file {}: {}".format(path, e), path=path)
    if not sp.issparse(data):
        data = sp.csr_matrix(np.atleast_2d(data))
    return SparseMatrix(data)


def write_matrix(path, matrix, comment=""):
    try:
        scipy.io.mmwrite(path, matrix.csr.tocoo(), comment=comment, field="real", symmetry="general")
    except OSError as e:
        raise DataFileError("Failed to write Matrix Market file {}: {}".format(path, e), path=path)
    return _mtx_path(path)


def _mtx_path(path):
    return path if str(path).endswith(".mtx") else "{}.mtx".format(path)


def read_vector(path):
    try:
        return np.atleast_1d(np.loadtxt(path, dtype=np.float64, ndmin=1))
    except (OSError, ValueError) as e:
        raise DataFileError("Failed to read vector file {}: {}".format(path, e), path=path)


def write_vector(path, values):
    try:
        np.savetxt(path, np.asarray(values, dtype=np.float64).ravel(), fmt="%.17g")
    except OSError as e:
        raise DataFileError("Failed to write vector file {}: {}".format(path, e), path=path)
    return path


def read_kinds(path):
    try:
        with open(path, "r") as f:
            tokens = [line.strip().lower() for line in f if line.strip()]
    except OSError as e:
        raise DataFileError("Failed to read kinds file {}: {}".format(path, e), path=path)
    try:
        return np.array([KIND_TOKENS[t] for t in tokens], dtype=np.int8)
    except KeyError as e:
        raise DataFileError("Unknown constraint kind {} in {} (expected eq or le)".format(e, path), path=path)


def write_kinds(path, kinds):
    names = {v: k for k, v in KIND_TOKENS.items()}
    try:
        with open(path, "w") as f:
            for kind in kinds:
                f.write(names[int(kind)] + "\n")
    except OSError as e:
        raise DataFileError("Failed to write kinds file {}: {}".format(path, e), path=path)
    return path


def write_system(out_dir, system, comment=""):
    """Write A.mtx, b.txt and, when present, z.txt and kinds.txt into out_dir."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise DataFileError("Failed to create output directory {}: {}".format(out_dir, e), path=out_dir)
    written = [
        write_matrix(os.path.join(out_dir, SYSTEM_FILES["matrix"]), system.matrix, comment=comment),
        write_vector(os.path.join(out_dir, SYSTEM_FILES["rhs"]), system.rhs),
    ]
    if system.reference_solution is not None:
        written.append(write_vector(os.path.join(out_dir, SYSTEM_FILES["reference"]), system.reference_solution))
    if system.has_inequalities:
        written.append(write_kinds(os.path.join(out_dir, SYSTEM_FILES["kinds"]), system.kinds))
    log.info("wrote %d file(s) to %s", len(written), out_dir)
    return written


def read_system(matrix, rhs, reference=None, kinds=None):
    return LinearSystem(
        read_matrix(matrix),
        read_vector(rhs),
        kinds=read_kinds(kinds) if kinds else None,
        reference_solution=read_vector(reference) if reference else None,
    )


def read_system_dir(path):
    files = {key: os.path.join(path, name) for key, name in SYSTEM_FILES.items()}
    if not os.path.exists(files["matrix"]):
        raise DataFileError("No {} in {}".format(SYSTEM_FILES["matrix"], path), path=path)
    return read_system(
        files["matrix"],
        files["rhs"],
        reference=files["reference"] if os.path.exists(files["reference"]) else None,
        kinds=files["kinds"] if os.path.exists(files["kinds"]) else None,
    )
