# -*- coding: utf-8 -*-
import pytest

from conftest import ModuleExit, ModuleFail
from plugins.modules.kaczmarz_compare_cd import ARGUMENT_SPEC, KaczmarzCompareCD


def run_module(fake_module, check_mode=False, **params):
    module = fake_module(ARGUMENT_SPEC, params, check_mode=check_mode)
    with pytest.raises(ModuleExit) as e:
        KaczmarzCompareCD(module).run()
    return e


def test_default_rules_are_mr_and_md(fake_module, tmp_path):
    e = run_module(fake_module, problem="random_consistent:m=10,n=5,seed=1", iterations=20, out_dir=str(tmp_path))
    result = e.value.result
    assert not isinstance(e.value, ModuleFail)
    assert result["effective_passes"] == 2.0
    assert sorted(p.rsplit("/", 1)[-1] for p in result["traces"]) == [
        "cd_gs.csv", "cd_gsl.csv", "kaczmarz_md_seed0.csv", "kaczmarz_mr_seed0.csv"]


def test_check_mode(fake_module, tmp_path):
    e = run_module(fake_module, check_mode=True, problem="random_consistent:m=10,n=5", rules=["mr"],
                   out_dir=str(tmp_path / "out"))
    assert len(e.value.result["traces"]) == 3
    assert not (tmp_path / "out").exists()


def test_inequality_systems_fail(fake_module, tmp_path):
    e = run_module(fake_module, problem="halfspaces:m=6,n=2", rules=["mr"], out_dir=str(tmp_path))
    assert isinstance(e.value, ModuleFail)
    assert e.value.result["exit_code"] == 1
