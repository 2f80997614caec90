# -*- coding: utf-8 -*-
import os
import sys

import numpy as np
import pytest

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from plugins.module_utils.linalg import LinearSystem, SparseMatrix  # noqa: E402
from plugins.module_utils.problems import gen_diagonal  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte-Carlo and desk-scale experiment checks")


class ModuleExit(Exception):

    def __init__(self, result):
        super(ModuleExit, self).__init__(result.get("msg"))
        self.result = result


class ModuleFail(ModuleExit):
    pass


class FakeModule(object):
    """Stands in for AnsibleModule: exit_json/fail_json raise so run() stops where Ansible would."""

    def __init__(self, argument_spec, params, check_mode=False):
        self.params = {key: spec.get("default") for key, spec in argument_spec.items()}
        self.params.update(params)
        self.check_mode = check_mode
        self.warnings = []

    def warn(self, msg):
        self.warnings.append(msg)

    def exit_json(self, **kwargs):
        raise ModuleExit(kwargs)

    def fail_json(self, **kwargs):
        raise ModuleFail(kwargs)


@pytest.fixture
def fake_module():
    return FakeModule


def dense_system(rows, rhs=None, reference=None, kinds=None):
    matrix = SparseMatrix.from_dense(rows)
    if rhs is None:
        rhs = matrix.dot(np.asarray(reference, dtype=np.float64))
    return LinearSystem(matrix, rhs, kinds=kinds, reference_solution=reference)


@pytest.fixture
def identity3():
    return dense_system(np.eye(3), reference=[1.0, -2.0, 3.0])


@pytest.fixture
def diag12():
    return gen_diagonal([1.0, 2.0], seed=0, reference=[1.0, 1.0])


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    monkeypatch.setenv("KACZ_THREADS", "1")


@pytest.fixture
def make_system():
    return dense_system
