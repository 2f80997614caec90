# -*- coding: utf-8 -*-
"""kacz: generate problems, benchmark selection rules, validate rate bounds."""
from __future__ import absolute_import, division, print_function
__metaclass__ = type

import argparse
import json
import logging
import sys

from .config import GRAPH_CHOICES, RUN_PARAMS, config_from_params
from .errors import EXIT_IO, EXIT_OK, ConfigurationError, KaczmarzError, ValidationFailure
from .harness import COMPARE_RULES, cmd_bench, cmd_compare_cd, cmd_generate, cmd_validate, failed_rules
from .problems import GeneratorSpec

log = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class _Parser(argparse.ArgumentParser):

    def error(self, message):
        raise ConfigurationError("{}: {}".format(self.prog, message))


def _run_options(parser):
    parser.add_argument("--config", help="YAML file of run settings; flags override its keys")
    parser.add_argument("--problem", help="generator spec (e.g. lattice:side=20,seed=3)")
    parser.add_argument("--rule", dest="rules", action="append", help="selection rule, repeatable")
    parser.add_argument("--iters", dest="iterations", type=int, help="iterations per run")
    parser.add_argument("--seed", dest="seeds", type=int, action="append", help="rule seed, repeatable")
    parser.add_argument("--graph", choices=GRAPH_CHOICES, help="orthogonality graph for adaptive rules")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--x0", help="starting point vector file")
    parser.add_argument("--tol", dest="residual_tolerance", type=float, help="stop once the max residual is below this")
    parser.add_argument("--time-budget", dest="time_budget", type=float, help="stop after this many seconds")
    parser.add_argument("--propagation", choices=("sparse", "graph"), help="residual update path")
    parser.add_argument("--refresh-every", dest="refresh_every", type=int, help="full residual recompute period")
    parser.add_argument("--checkpoint-every", dest="checkpoint_every", type=int,
                        help="selectable-set snapshot period for adaptive bounds")
    parser.add_argument("--threads", type=int, help="work-pool width (default and cap KACZ_THREADS, else CPU count)")


def build_parser():
    parser = _Parser(prog="kacz", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    gen = sub.add_parser("generate", help="write a generated problem as Matrix Market and vector files")
    gen.add_argument("--problem", required=True, help="generator spec (e.g. diagonal:lam=[1,2])")
    gen.add_argument("--out", dest="out_dir", required=True, help="output directory")
    gen.add_argument("--edge-list", action="store_true", help="also write the support orthogonality graph")

    bench = sub.add_parser("bench", help="run rules over seeds and write traces plus a summary")
    _run_options(bench)

    validate = sub.add_parser("validate", help="check traces against every rate bound")
    _run_options(validate)
    validate.add_argument("--runs", type=int, help="independent runs for random rules")

    compare = sub.add_parser("compare-cd", help="Kaczmarz traces next to greedy coordinate descent")
    _run_options(compare)
    return parser


def _overrides(args):
    return {k: getattr(args, k, None) for k in RUN_PARAMS}


def _config(args, default_rules=None):
    params = _overrides(args)
    params["config_file"] = args.config
    return config_from_params(params, default_rules=default_rules)


def _configure_logging(args):
    level = logging.WARNING
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.ERROR
    logging.basicConfig(level=level, format=LOG_FORMAT)


def run(args):
    if args.command == "generate":
        result = cmd_generate(GeneratorSpec.parse(args.problem), args.out_dir, edge_list=args.edge_list)
        print("\n".join(result["files"]))
        return EXIT_OK
    if args.command == "bench":
        result = cmd_bench(_config(args))
        print(json.dumps(result["summary"], indent=2, sort_keys=True))
        return EXIT_OK
    if args.command == "validate":
        result = cmd_validate(_config(args))
        print(json.dumps(result["report"], indent=2, sort_keys=True))
        if not result["passed"]:
            raise ValidationFailure("deterministic bound violated by rule(s) {}; see {}".format(
                ", ".join(failed_rules(result["report"])), result["report_file"]), report_file=result["report_file"])
        return EXIT_OK
    result = cmd_compare_cd(_config(args, default_rules=COMPARE_RULES))
    print("\n".join(result["traces"]))
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except KaczmarzError as e:
        sys.stderr.write("error: {}\n".format(e.msg))
        return e.exit_code
    _configure_logging(args)
    try:
        return run(args)
    except KaczmarzError as e:
        log.error("%s", e.msg)
        return e.exit_code
    except OSError as e:
        log.error("%s", e)
        return EXIT_IO
