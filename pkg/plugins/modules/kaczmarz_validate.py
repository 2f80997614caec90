#!/usr/bin/python
# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function
__metaclass__ = type
DOCUMENTATION = r'''
---
module: kaczmarz_validate
short_description: Validate Kaczmarz traces against their convergence-rate bounds
description:
  - Compute every rate constant of the problem and check solver traces against them.
  - Greedy rules (mr, md, hybrid, approximate rules) are checked at every step with a slack of 1e-9.
  - Random rules are checked in expectation over C(runs) independent runs, within three standard errors.
  - Adaptive rules are checked against their restricted factors at selectable-set checkpoints.
  - Writes C(validation.json) and fails when a deterministic bound is violated.
  - The problem needs a reference solution.
version_added: "1.0.0"
options:
  problem:
    description:
      - Generator spec string, generator dictionary or dictionary of files, as for M(crystian.kaczmarz.kaczmarz_bench).
    required: false
    type: raw
  config_file:
    description:
      - YAML file of run settings. Module options override its keys.
    required: false
    type: path
  rules:
    description:
      - Selection rules to validate.
    required: false
    type: list
    elements: str
  iterations:
    description:
      - Iterations per run.
    required: false
    type: int
  seeds:
    description:
      - Seeds for the greedy rules; random rules use C(runs) consecutive seeds from the smallest one.
    required: false
    type: list
    elements: int
  runs:
    description:
      - Independent runs per random rule.
    required: false
    type: int
  out_dir:
    description:
      - Directory for the report.
    required: true
    type: path
    aliases: [ dest ]
  graph:
    description:
      - Orthogonality graph for adaptive rules and the multi-step MR check.
    required: false
    type: str
    choices: [ exact, support, none ]
  checkpoint_every:
    description:
      - Iterations between selectable-set snapshots for adaptive bounds. Defaults to the number of rows.
    required: false
    type: int
  threads:
    description:
      - Width of the work pool, capped by C(KACZ_THREADS).
    required: false
    type: int
requirements:
  - numpy
  - scipy
author:
  - Crystian (@crystian)
'''
EXAMPLES = r'''
- name: Validate greedy rules on a diagonal system
  crystian.kaczmarz.kaczmarz_validate:
    problem: diagonal:lam=[1,2]
    rules: [mr, md]
    iterations: 50
    out_dir: /tmp/validate
  register: report
- name: Check the uniform rule in expectation
  crystian.kaczmarz.kaczmarz_validate:
    problem: diagonal:lam=[1,2]
    rules: [u]
    iterations: 20
    runs: 1000
    out_dir: /tmp/validate-u
'''
RETURN = r'''
msg:
  description: Status message
  returned: always
  type: str
report_file:
  description: Path of the validation JSON
  returned: always
  type: str
report:
  description: Rate constants and per-rule bound, worst_ratio, mean_ratio and violations
  returned: when not in check mode
  type: dict
'''
import traceback
from ansible.module_utils.basic import AnsibleModule, missing_required_lib
try:
    from ..module_utils.config import config_from_params
    from ..module_utils.errors import EXIT_VALIDATION, KaczmarzError
    from ..module_utils.harness import cmd_validate, failed_rules
    HAS_NUMPY = True
    NUMPY_IMPORT_ERROR = None
except ImportError:
    HAS_NUMPY = False
    NUMPY_IMPORT_ERROR = traceback.format_exc()
ARGUMENT_SPEC = dict(
    problem=dict(type='raw', required=False),
    config_file=dict(type='path', required=False),
    rules=dict(type='list', elements='str', required=False),
    iterations=dict(type='int', required=False),
    seeds=dict(type='list', elements='int', required=False),
    runs=dict(type='int', required=False),
    out_dir=dict(type='path', required=True, aliases=['dest']),
    graph=dict(type='str', required=False, choices=['exact', 'support', 'none']),
    checkpoint_every=dict(type='int', required=False),
    threads=dict(type='int', required=False),
)
class KaczmarzValidate(object):
    def __init__(self, module):
        self.module = module
        self.params = module.params
    def run(self):
        try:
            config = config_from_params(self.params)
            result = cmd_validate(config, check_mode=self.module.check_mode)
        except KaczmarzError as e:
            self.module.fail_json(msg="Failed to validate bounds: " + e.msg, exit_code=e.exit_code)
        if self.module.check_mode:
            self.module.exit_json(changed=True, msg="Validation report would be written",
                                  report_file=result['report_file'])
        report = result['report']
        for label, r in report['rules'].items():
            if r.get('surrogate') and r['violations']:
                self.module.warn("Rule {} raised the surrogate feasibility violation {} time(s)".format(label, r['violations']))
            elif r['statistical'] and not r['passed']:
                self.module.warn("Rule {} exceeds its expected-rate bound by more than three standard errors".format(label))
        if not result['passed']:
            self.module.fail_json(msg="Bound violated by rule(s): " + ", ".join(failed_rules(report)),
                                  exit_code=EXIT_VALIDATION, report_file=result['report_file'], report=report)
        self.module.exit_json(changed=True, msg="All deterministic bounds hold", report_file=result['report_file'],
                              report=report)
def main():
    module = AnsibleModule(argument_spec=ARGUMENT_SPEC, supports_check_mode=True)
    if not HAS_NUMPY:
        module.fail_json(msg=missing_required_lib('numpy and scipy'), exception=NUMPY_IMPORT_ERROR)
    manager = KaczmarzValidate(module)
    manager.run()
if __name__ == '__main__':
    main()
