# -*- coding: utf-8 -*-
"""Run configuration: YAML file keys overridden by command-line flags or module parameters."""
from __future__ import absolute_import, division, print_function
__metaclass__ = type

import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Union

import yaml

from .errors import ConfigurationError, DataFileError
from .mmio import read_system, read_system_dir, read_vector
from .orthogonality import GraphMode
from .problems import GeneratorSpec, generate
from .selection import RuleConfig

log = logging.getLogger(__name__)

THREADS_ENV = "KACZ_THREADS"
GRAPH_CHOICES = ("exact", "support", "none")
DEFAULT_RULES = ("c", "rp", "u", "nu", "au", "anu", "mr", "md")


@dataclass
class ProblemFiles:
    matrix: Optional[str] = None
    rhs: Optional[str] = None
    reference: Optional[str] = None
    kinds: Optional[str] = None
    directory: Optional[str] = None

    def __post_init__(self):
        if self.directory is None and (self.matrix is None or self.rhs is None):
            raise ConfigurationError("file problems need either 'directory' or both 'matrix' and 'rhs'")

    def load(self):
        if self.directory is not None:
            return read_system_dir(self.directory)
        return read_system(self.matrix, self.rhs, reference=self.reference, kinds=self.kinds)

    def describe(self):
        return self.directory or self.matrix


def thread_cap():
    """Upper bound on the pool width from KACZ_THREADS, or None when unset."""
    value = os.environ.get(THREADS_ENV)
    if not value:
        return None
    try:
        threads = int(value)
    except ValueError:
        raise ConfigurationError("{} must be a positive integer, got {!r}".format(THREADS_ENV, value))
    if threads < 1:
        raise ConfigurationError("{} must be a positive integer, got {!r}".format(THREADS_ENV, value))
    return threads


def default_threads():
    cap = thread_cap()
    return cap if cap is not None else os.cpu_count() or 1


@dataclass
class RunConfig:
    problem: Union[GeneratorSpec, ProblemFiles]
    rules: List[RuleConfig] = field(default_factory=lambda: [RuleConfig.parse(r) for r in DEFAULT_RULES])
    iterations: int = 1000
    seeds: List[int] = field(default_factory=lambda: [0])
    out_dir: str = "kacz-out"
    graph: str = "support"
    x0: Optional[str] = None
    residual_tolerance: Optional[float] = None
    time_budget: Optional[float] = None
    refresh_every: Optional[int] = None
    checkpoint_every: Optional[int] = None
    propagation: str = "sparse"
    runs: int = 1000
    threads: int = field(default_factory=default_threads)

    def __post_init__(self):
        if not self.rules:
            raise ConfigurationError("at least one rule is required")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        if self.graph not in GRAPH_CHOICES:
            raise ConfigurationError("graph must be one of {}, got {!r}".format(", ".join(GRAPH_CHOICES), self.graph))
        if self.iterations < 0:
            raise ConfigurationError("iterations must be nonnegative")
        if self.runs < 1:
            raise ConfigurationError("runs must be positive")
        if self.threads < 1:
            raise ConfigurationError("threads must be positive")
        cap = thread_cap()
        if cap is not None and self.threads > cap:
            log.debug("capping %d thread(s) at %s=%d", self.threads, THREADS_ENV, cap)
            self.threads = cap
        if self.propagation == "graph" and self.graph == "none":
            raise ConfigurationError("graph propagation needs graph mode exact or support")

    @property
    def graph_mode(self):
        return None if self.graph == "none" else GraphMode(self.graph)

    def load_system(self):
        if isinstance(self.problem, GeneratorSpec):
            return generate(self.problem)
        return self.problem.load()

    def load_x0(self, system):
        if self.x0 is None:
            return None
        x0 = read_vector(self.x0)
        if x0.shape != (system.n,):
            raise ConfigurationError("x0 has length {} but the system has {} columns".format(x0.shape[0], system.n))
        return x0

    def describe_problem(self):
        return self.problem.describe()


def load_config_file(path):
    """YAML mapping (plain 'key: value' lines work too)."""
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise DataFileError("Failed to read config file {}: {}".format(path, e), path=path)
    except yaml.YAMLError as e:
        raise ConfigurationError("Failed to parse config file {}: {}".format(path, e), path=path)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError("config file {} must hold a mapping".format(path), path=path)
    return data


def _problem(value):
    if isinstance(value, (GeneratorSpec, ProblemFiles)):
        return value
    if isinstance(value, str):
        return GeneratorSpec.parse(value)
    if isinstance(value, dict):
        if "kind" in value:
            return GeneratorSpec.from_mapping(value)
        try:
            return ProblemFiles(**value)
        except TypeError as e:
            raise ConfigurationError("Bad problem files mapping: {}".format(e))
    raise ConfigurationError("problem must be a spec string or a mapping, got {!r}".format(value))


def _rules(value, default_seed=0):
    if isinstance(value, str):
        value = [value]
    return [r if isinstance(r, RuleConfig) else RuleConfig.parse(str(r), seed=default_seed) for r in value]


def _int_list(value, name):
    if isinstance(value, (int, str)):
        value = [value]
    try:
        return [int(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigurationError("{} must be a list of integers, got {!r}".format(name, value))


_SCALARS = {
    "iterations": int,
    "out_dir": str,
    "graph": str,
    "x0": str,
    "residual_tolerance": float,
    "time_budget": float,
    "refresh_every": int,
    "checkpoint_every": int,
    "propagation": str,
    "runs": int,
    "threads": int,
}


def build_config(file_data=None, overrides=None):
    """Merge config-file keys with overrides (None means 'not given'); overrides win."""
    merged = dict(file_data or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None and v != []})
    unknown = set(merged) - set(_SCALARS) - {"problem", "rules", "seeds"}
    if unknown:
        raise ConfigurationError("Unknown configuration key(s): {}".format(", ".join(sorted(unknown))))
    if "problem" not in merged:
        raise ConfigurationError("a problem is required (--problem or 'problem:' in the config file)")
    kwargs = {"problem": _problem(merged["problem"])}
    if "rules" in merged:
        kwargs["rules"] = _rules(merged["rules"])
    if "seeds" in merged:
        kwargs["seeds"] = _int_list(merged["seeds"], "seeds")
    for key, cast in _SCALARS.items():
        if key in merged:
            try:
                kwargs[key] = cast(merged[key])
            except (TypeError, ValueError):
                raise ConfigurationError("{} must be {}, got {!r}".format(key, cast.__name__, merged[key]))
    config = RunConfig(**kwargs)
    log.debug("run config: %s", config)
    return config


RUN_PARAMS = ("problem", "rules", "iterations", "seeds", "out_dir", "graph", "x0", "residual_tolerance",
              "time_budget", "refresh_every", "checkpoint_every", "propagation", "runs", "threads")


def config_from_params(params, default_rules=None):
    """RunConfig from Ansible module parameters; `config_file` supplies defaults."""
    file_data = load_config_file(params["config_file"]) if params.get("config_file") else {}
    overrides = {key: params.get(key) for key in RUN_PARAMS}
    if default_rules and not overrides["rules"] and "rules" not in file_data:
        overrides["rules"] = list(default_rules)
    return build_config(file_data, overrides)
