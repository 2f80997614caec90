# -*- coding: utf-8 -*-
import pytest

from conftest import ModuleExit, ModuleFail
from plugins.modules.kaczmarz_bench import ARGUMENT_SPEC, KaczmarzBench


def run_module(fake_module, check_mode=False, **params):
    module = fake_module(ARGUMENT_SPEC, params, check_mode=check_mode)
    with pytest.raises(ModuleExit) as e:
        KaczmarzBench(module).run()
    return e


def test_bench_writes_traces_and_summary(fake_module, tmp_path):
    e = run_module(fake_module, problem="diagonal:lam=[1,2]", rules=["mr", "nu"], seeds=[0, 1], iterations=6,
                   graph="none", out_dir=str(tmp_path))
    result = e.value.result
    assert not isinstance(e.value, ModuleFail)
    assert len(result["traces"]) == 4
    assert result["summary"]["rules"]["NU"]["seeds"] == [0, 1]
    assert (tmp_path / "summary.json").exists()


def test_bench_reads_a_config_file(fake_module, tmp_path):
    config = tmp_path / "run.yml"
    config.write_text("problem: {kind: box, n: 2}\nrules: [md]\niterations: 3\n")
    e = run_module(fake_module, config_file=str(config), out_dir=str(tmp_path / "out"))
    assert e.value.result["summary"]["max_iterations"] == 3
    assert list(e.value.result["summary"]["rules"]) == ["MD"]


def test_check_mode_plans_the_traces(fake_module, tmp_path):
    e = run_module(fake_module, check_mode=True, problem="box:n=2", rules=["mr"], seeds=[3],
                   out_dir=str(tmp_path / "out"))
    assert e.value.result["traces"] == [str(tmp_path / "out" / "mr_seed3.csv")]
    assert not (tmp_path / "out").exists()


def test_missing_problem_fails(fake_module, tmp_path):
    e = run_module(fake_module, out_dir=str(tmp_path))
    assert isinstance(e.value, ModuleFail)
    assert e.value.result["exit_code"] == 1


def test_adaptive_rule_without_graph_fails(fake_module, tmp_path):
    e = run_module(fake_module, problem="box:n=2", rules=["anu"], graph="none", out_dir=str(tmp_path))
    assert isinstance(e.value, ModuleFail)
    assert "graph" in e.value.result["msg"]
