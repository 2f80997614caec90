# -*- coding: utf-8 -*-
import pytest

from plugins.module_utils.config import (DEFAULT_RULES, THREADS_ENV, ProblemFiles, build_config, config_from_params,
                                         default_threads, load_config_file)
from plugins.module_utils.errors import ConfigurationError, DataFileError
from plugins.module_utils.mmio import write_system
from plugins.module_utils.orthogonality import GraphMode
from plugins.module_utils.problems import GeneratorSpec, gen_diagonal


def test_defaults():
    config = build_config({"problem": "box:n=2"})
    assert isinstance(config.problem, GeneratorSpec)
    assert [r.label for r in config.rules] == ["C", "RP", "U", "NU", "A(u)", "A(Nu)", "MR", "MD"]
    assert config.iterations == 1000
    assert config.seeds == [0]
    assert config.graph_mode is GraphMode.SUPPORT
    assert config.threads == 1


def test_overrides_win_over_the_file():
    file_data = {"problem": "box:n=2", "iterations": 50, "rules": ["mr"], "seeds": [1, 2]}
    config = build_config(file_data, {"iterations": 7, "rules": None, "seeds": [], "graph": "exact"})
    assert config.iterations == 7
    assert [r.label for r in config.rules] == ["MR"]
    assert config.seeds == [1, 2]
    assert config.graph_mode is GraphMode.EXACT


def test_config_file_values_are_cast(tmp_path):
    path = tmp_path / "run.yml"
    path.write_text("problem: {kind: lattice, side: 3, seed: 2}\niterations: '25'\nseeds: 4\nresidual_tolerance: 1e-8\n")
    config = build_config(load_config_file(str(path)))
    assert config.problem.params["side"] == 3
    assert config.problem.seed == 2
    assert config.iterations == 25
    assert config.seeds == [4]
    assert config.residual_tolerance == 1e-8


def test_empty_config_file(tmp_path):
    path = tmp_path / "empty.yml"
    path.write_text("")
    assert load_config_file(str(path)) == {}


@pytest.mark.parametrize("text, error", [
    ("- a\n- b\n", ConfigurationError),
    ("problem: [\n", ConfigurationError),
])
def test_bad_config_files(tmp_path, text, error):
    path = tmp_path / "bad.yml"
    path.write_text(text)
    with pytest.raises(error):
        load_config_file(str(path))


def test_missing_config_file(tmp_path):
    with pytest.raises(DataFileError):
        load_config_file(str(tmp_path / "missing.yml"))


@pytest.mark.parametrize("data", [
    {"problem": "box", "colour": "red"},
    {"iterations": 3},
    {"problem": "box", "iterations": "many"},
    {"problem": "box", "graph": "dense"},
    {"problem": "box", "propagation": "graph", "graph": "none"},
    {"problem": "box", "seeds": ["a"]},
    {"problem": "box", "runs": 0},
    {"problem": 42},
    {"problem": {"matrix": "A.mtx"}},
])
def test_invalid_configurations(data):
    with pytest.raises(ConfigurationError):
        build_config(data)


def test_problem_files_from_a_directory(tmp_path):
    write_system(str(tmp_path), gen_diagonal([1.0, 2.0], seed=0))
    config = build_config({"problem": {"directory": str(tmp_path)}, "rules": "mr"})
    assert isinstance(config.problem, ProblemFiles)
    assert config.load_system().m == 2
    assert config.describe_problem() == str(tmp_path)


def test_problem_files_by_name(tmp_path):
    write_system(str(tmp_path), gen_diagonal([1.0, 2.0], seed=0))
    problem = {"matrix": str(tmp_path / "A.mtx"), "rhs": str(tmp_path / "b.txt"), "reference": str(tmp_path / "z.txt")}
    system = build_config({"problem": problem}).load_system()
    assert system.reference_solution is not None


def test_x0_must_match_the_system(tmp_path):
    (tmp_path / "x0.txt").write_text("1\n2\n3\n")
    config = build_config({"problem": "diagonal:lam=[1,2]", "x0": str(tmp_path / "x0.txt")})
    with pytest.raises(ConfigurationError):
        config.load_x0(config.load_system())


def test_thread_count_from_the_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_threads() == 3
    monkeypatch.delenv(THREADS_ENV)
    assert default_threads() >= 1


def test_thread_count_is_capped_by_the_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "2")
    assert build_config({"problem": "box", "threads": 8}).threads == 2
    assert build_config({"problem": "box", "threads": 1}).threads == 1
    monkeypatch.delenv(THREADS_ENV)
    assert build_config({"problem": "box", "threads": 8}).threads == 8


@pytest.mark.parametrize("value", ["0", "-2", "many"])
def test_thread_count_must_be_positive(monkeypatch, value):
    monkeypatch.setenv(THREADS_ENV, value)
    with pytest.raises(ConfigurationError):
        default_threads()


def test_config_from_module_params(tmp_path):
    path = tmp_path / "run.yml"
    path.write_text("problem: diagonal:lam=[1,2]\niterations: 9\n")
    params = dict.fromkeys(("problem", "rules", "iterations", "seeds", "out_dir", "graph", "x0",
                            "residual_tolerance", "time_budget", "refresh_every", "checkpoint_every",
                            "propagation", "runs", "threads"))
    params.update(config_file=str(path), out_dir=str(tmp_path / "out"))
    config = config_from_params(params, default_rules=["mr", "md"])
    assert config.iterations == 9
    assert config.out_dir == str(tmp_path / "out")
    assert [r.label for r in config.rules] == ["MR", "MD"]
    assert len(DEFAULT_RULES) == 8
