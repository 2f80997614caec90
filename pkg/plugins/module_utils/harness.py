# -*- coding: utf-8 -*-
"""Benchmark, validation, comparison and generation drivers.

Each (rule, seed) cell runs with private state in a thread pool; traces
are written to distinct files and summaries are built after every cell
has finished.
"""
from __future__ import absolute_import, division, print_function
__metaclass__ = type

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ConfigurationError, DataFileError, TraceError
from .linalg import DENSE_LIMIT
from .mmio import SYSTEM_FILES, write_system
from .orthogonality import GraphMode, build_graph, write_edge_list
from .problems import generate
from .rates import STANDARD_ERRORS, bounds_general, multi_step_bound_check, validate_trace
from .selection import CoordinateRule, RuleKind
from .solver import StoppingCriteria, closest_solution, solve, solve_coordinate_descent

log = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
VALIDATION_FILE = "validation.json"
EDGE_LIST_FILE = "graph.edges"
COMPARE_RULES = ("mr", "md")


def trace_name(rule, seed, prefix=""):
    return "{}{}_seed{}.csv".format(prefix, rule.slug, seed)


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise DataFileError("Failed to create output directory {}: {}".format(path, e), path=path)


def _write_json(path, data):
    try:
        with open(path, "w") as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise DataFileError("Failed to write {}: {}".format(path, e), path=path)
    return path


def _stop(config, iterations=None):
    return StoppingCriteria(max_iterations=config.iterations if iterations is None else iterations,
                            residual_tolerance=config.residual_tolerance,
                            time_budget=config.time_budget)


def _needs_graph(config):
    return config.propagation == "graph" or any(rule.is_adaptive for rule in config.rules)


def _graph_for(config, system, required=False):
    mode = config.graph_mode
    if mode is None:
        if required:
            raise ConfigurationError("adaptive rules and graph propagation need --graph exact or support")
        return None
    return build_graph(system, mode)


def _run_cells(cells, threads, fn):
    """Apply fn to every cell in a pool; results keep the order of `cells`."""
    if not cells:
        return []
    width = max(1, min(threads, len(cells)))
    if width == 1:
        return [fn(cell) for cell in cells]
    with ThreadPoolExecutor(max_workers=width) as pool:
        return list(pool.map(fn, cells))


def cmd_generate(spec, out_dir, edge_list=False, check_mode=False):
    """Write A.mtx, b.txt, z.txt (and kinds.txt for inequality systems) for a GeneratorSpec."""
    system = generate(spec)
    planned = [os.path.join(out_dir, SYSTEM_FILES["matrix"]), os.path.join(out_dir, SYSTEM_FILES["rhs"])]
    if system.reference_solution is not None:
        planned.append(os.path.join(out_dir, SYSTEM_FILES["reference"]))
    if system.has_inequalities:
        planned.append(os.path.join(out_dir, SYSTEM_FILES["kinds"]))
    if edge_list:
        planned.append(os.path.join(out_dir, EDGE_LIST_FILE))
    result = {"m": system.m, "n": system.n, "nnz": system.matrix.nnz,
              "max_row_nnz": system.matrix.max_row_nnz, "files": planned}
    if check_mode:
        return result
    written = write_system(out_dir, system, comment=spec.describe())
    if edge_list:
        written.append(write_edge_list(os.path.join(out_dir, EDGE_LIST_FILE),
                                       build_graph(system, GraphMode.SUPPORT)))
    result["files"] = written
    return result


def _median(values):
    values = [v for v in values if v is not None]
    return float(np.median(values)) if values else None


def summarize(config, system, results):
    """Median over seeds of the final normalized squared error and distance, per rule."""
    rules = {}
    for rule in config.rules:
        finals = [(trace.seed, trace.final(), len(trace)) for r, trace in results if r.label == rule.label]
        rules[rule.label] = {
            "seeds": [seed for seed, _, _ in finals],
            "iterations": [count for _, _, count in finals],
            "final_sq_error_norm": [f["sq_error_norm"] for _, f, _ in finals],
            "final_sq_dist_norm": [f["sq_dist_norm"] for _, f, _ in finals],
            "median_sq_error_norm": _median([f["sq_error_norm"] for _, f, _ in finals]),
            "median_sq_dist_norm": _median([f["sq_dist_norm"] for _, f, _ in finals]),
        }
    return {
        "problem": config.describe_problem(),
        "m": system.m,
        "n": system.n,
        "nnz": system.matrix.nnz,
        "max_iterations": config.iterations,
        "graph": config.graph,
        "rules": rules,
    }


def run_benchmark(config, system=None):
    """Solve every (rule, seed) cell; returns (system, [(rule, trace), ...])."""
    system = config.load_system() if system is None else system
    x0 = config.load_x0(system)
    graph = _graph_for(config, system, required=_needs_graph(config))
    stop = _stop(config)

    def cell(item):
        rule, seed = item
        _, trace = solve(system, rule.with_seed(seed), x0=x0, stop=stop, graph=graph,
                         propagation=config.propagation, refresh_every=config.refresh_every,
                         checkpoint_every=config.checkpoint_every)
        return rule, trace

    cells = [(rule, seed) for rule in config.rules for seed in config.seeds]
    log.info("running %d cell(s) on a %dx%d system with %d thread(s)", len(cells), system.m, system.n, config.threads)
    return system, _run_cells(cells, config.threads, cell)


def cmd_bench(config, check_mode=False):
    planned = [os.path.join(config.out_dir, trace_name(rule, seed)) for rule in config.rules for seed in config.seeds]
    summary_path = os.path.join(config.out_dir, SUMMARY_FILE)
    if check_mode:
        return {"traces": planned, "summary_file": summary_path, "summary": None}
    system, results = run_benchmark(config)
    _ensure_dir(config.out_dir)
    traces = [trace.to_csv(os.path.join(config.out_dir, trace_name(rule, trace.seed))) for rule, trace in results]
    summary = summarize(config, system, results)
    _write_json(summary_path, summary)
    log.info("wrote %d trace(s) and %s", len(traces), summary_path)
    return {"traces": traces, "summary_file": summary_path, "summary": summary}


def _validation_seeds(config, rule):
    if rule.is_random and not rule.is_greedy:
        start = min(config.seeds)
        return list(range(start, start + config.runs))
    return list(config.seeds)


def run_validation(config, system=None):
    """Traces for every rule checked against the rate bounds; returns the report mapping."""
    system = config.load_system() if system is None else system
    if system.reference_solution is None:
        raise TraceError("validation needs a reference solution (z.txt or a generated problem)")
    x0 = config.load_x0(system)
    needs_graph = _needs_graph(config) or any(r.kind is RuleKind.MAX_RESIDUAL for r in config.rules)
    graph = _graph_for(config, system, required=_needs_graph(config)) if needs_graph else None
    reference = system.reference_solution
    bound = None
    if not system.has_inequalities:
        if system.m * system.n > DENSE_LIMIT:
            raise ConfigurationError("validation needs dense rate constants; {}x{} is too large".format(system.m, system.n))
        reference = closest_solution(system, x0)
        bound = bounds_general(system, graph=graph)
    stop = _stop(config)
    report = {
        "problem": config.describe_problem(),
        "m": system.m,
        "n": system.n,
        "bound": bound.as_dict() if bound is not None else None,
        "rules": {},
    }
    passed = True
    for rule in config.rules:
        seeds = _validation_seeds(config, rule)

        def cell(seed, rule=rule):
            return solve(system, rule.with_seed(seed), x0=x0, stop=stop, graph=graph, reference=reference,
                         propagation=config.propagation, refresh_every=config.refresh_every,
                         checkpoint_every=config.checkpoint_every)[1]

        traces = _run_cells(seeds, config.threads, cell)
        result = validate_trace(traces, bound, rule, system=system)
        if rule.kind is RuleKind.MAX_RESIDUAL and bound is not None and graph is not None:
            result["multi_step"] = multi_step_bound_check(traces[0], system, graph, bound.sigma_inf)
        report["rules"][rule.label] = result
        if not result["statistical"] and result["violations"]:
            passed = False
        elif result.get("surrogate") and result["violations"]:
            log.warning("rule %s raised the surrogate violation ||e(Ax - b)||_inf %d time(s)", rule.label,
                        result["violations"])
        elif result["statistical"] and not result["passed"]:
            log.warning("rule %s mean ratio exceeds its bound by more than %g standard errors", rule.label,
                        STANDARD_ERRORS)
    report["passed"] = passed
    return report


def failed_rules(report):
    """Labels of rules with a binding (non-statistical) violation."""
    return sorted(label for label, r in report["rules"].items() if not r["statistical"] and r["violations"])


def cmd_validate(config, check_mode=False):
    report_path = os.path.join(config.out_dir, VALIDATION_FILE)
    if check_mode:
        return {"report_file": report_path, "report": None, "passed": True}
    report = run_validation(config)
    _ensure_dir(config.out_dir)
    _write_json(report_path, report)
    return {"report_file": report_path, "report": report, "passed": report["passed"]}


def cmd_compare_cd(config, check_mode=False):
    """Kaczmarz traces next to Gauss-Southwell (GS, GSL) coordinate descent over the same effective passes."""
    kacz = [os.path.join(config.out_dir, trace_name(rule, seed, prefix="kaczmarz_"))
            for rule in config.rules for seed in config.seeds]
    cd = [os.path.join(config.out_dir, "cd_{}.csv".format(r.value)) for r in CoordinateRule]
    if check_mode:
        return {"traces": kacz + cd}
    system, results = run_benchmark(config)
    if system.has_inequalities:
        raise ConfigurationError("coordinate descent comparison needs an equality system")
    _ensure_dir(config.out_dir)
    written = [trace.to_csv(os.path.join(config.out_dir, trace_name(rule, trace.seed, prefix="kaczmarz_")),
                            with_passes=True) for rule, trace in results]
    passes = config.iterations / system.m
    cd_iterations = int(round(passes * system.n))
    x0 = config.load_x0(system)
    for rule, path in zip(CoordinateRule, cd):
        _, trace = solve_coordinate_descent(system, rule, x0=x0, stop=_stop(config, cd_iterations))
        written.append(trace.to_csv(path, with_passes=True))
    log.info("wrote %d comparison trace(s) to %s", len(written), config.out_dir)
    return {"traces": written, "effective_passes": passes}
