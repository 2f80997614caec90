# -*- coding: utf-8 -*-
import numpy as np
import pytest

from plugins.module_utils.orthogonality import GraphMode, build_graph
from plugins.module_utils.problems import gen_lattice, gen_overdetermined
from plugins.module_utils.selection import RuleConfig
from plugins.module_utils.solver import StoppingCriteria, closest_solution, solve

pytestmark = pytest.mark.slow

SEEDS = range(10)
ITERATIONS = 5000
# both greedy variants reach roundoff on the overdetermined instance
ROUNDOFF = 1e-14


def median_finals(make, rules, iterations=ITERATIONS, graph_mode=None):
    finals = {text: {"sq_error_norm": [], "sq_dist_norm": []} for text in rules}
    for seed in SEEDS:
        system = make(seed)
        graph = build_graph(system, graph_mode)
        reference = closest_solution(system)
        for text in rules:
            _, trace = solve(system, RuleConfig.parse(text, seed=seed), stop=StoppingCriteria(iterations),
                             graph=graph, reference=reference)
            for key, value in trace.final().items():
                finals[text][key].append(value)
    return {text: {key: float(np.median(values)) for key, values in columns.items()}
            for text, columns in finals.items()}


def overdetermined(seed):
    return gen_overdetermined(500, 200, seed)


def test_lattice_ordering_of_greedy_and_classic_rules():
    finals = median_finals(lambda seed: gen_lattice(20, seed), ["md", "mr", "u", "nu", "c", "rp"])
    dist = {text: columns["sq_dist_norm"] for text, columns in finals.items()}
    assert dist["md"] <= dist["mr"]
    assert dist["mr"] <= min(dist["u"], dist["nu"], dist["c"], dist["rp"])


def test_adaptive_nonuniform_beats_nonuniform_on_overdetermined():
    finals = median_finals(overdetermined, ["anu", "nu"], graph_mode=GraphMode.EXACT)
    assert finals["anu"]["sq_error_norm"] <= finals["nu"]["sq_error_norm"]


def test_hybrid_against_mr_and_md_on_overdetermined():
    finals = median_finals(overdetermined, ["hybrid", "mr", "md"])
    error = {text: max(columns["sq_error_norm"], ROUNDOFF) for text, columns in finals.items()}
    dist = {text: max(columns["sq_dist_norm"], ROUNDOFF) for text, columns in finals.items()}
    assert error["hybrid"] <= error["md"]
    assert dist["hybrid"] <= dist["mr"]
