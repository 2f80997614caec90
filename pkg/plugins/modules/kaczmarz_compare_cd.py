#!/usr/bin/python
# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function
__metaclass__ = type
DOCUMENTATION = r'''
---
module: kaczmarz_compare_cd
short_description: Compare Kaczmarz rules with greedy coordinate descent
description:
  - Run Kaczmarz rules next to Gauss-Southwell (GS) and Lipschitz-scaled Gauss-Southwell (GSL) coordinate descent
    on the least-squares objective of the same equality system.
  - Every trace carries an extra C(effective_passes) column, iterations/m for Kaczmarz and iterations/n for
    coordinate descent; coordinate descent runs for the same number of effective passes.
version_added: "1.0.0"
options:
  problem:
    description:
      - Generator spec string, generator dictionary or dictionary of files. Must be an equality system.
    required: false
    type: raw
  config_file:
    description:
      - YAML file of run settings. Module options override its keys.
    required: false
    type: path
  rules:
    description:
      - Kaczmarz rules to run. Defaults to mr and md.
    required: false
    type: list
    elements: str
  iterations:
    description:
      - Kaczmarz iterations per run.
    required: false
    type: int
  seeds:
    description:
      - Seeds for the Kaczmarz rules.
    required: false
    type: list
    elements: int
  out_dir:
    description:
      - Directory for the traces.
    required: true
    type: path
    aliases: [ dest ]
requirements:
  - numpy
  - scipy
author:
  - Crystian (@crystian)
'''
EXAMPLES = r'''
- name: MR and MD against GS and GSL on the overdetermined problem
  crystian.kaczmarz.kaczmarz_compare_cd:
    problem: overdetermined:m=500,n=200,seed=1
    iterations: 2000
    out_dir: /tmp/compare
'''
RETURN = r'''
msg:
  description: Status message
  returned: always
  type: str
traces:
  description: Trace files written (or that would be written in check mode)
  returned: always
  type: list
  elements: str
effective_passes:
  description: Effective passes covered by every trace
  returned: when not in check mode
  type: float
'''
import traceback
from ansible.module_utils.basic import AnsibleModule, missing_required_lib
try:
    from ..module_utils.config import config_from_params
    from ..module_utils.errors import KaczmarzError
    from ..module_utils.harness import COMPARE_RULES, cmd_compare_cd
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
    out_dir=dict(type='path', required=True, aliases=['dest']),
)
class KaczmarzCompareCD(object):
    def __init__(self, module):
        self.module = module
        self.params = module.params
    def run(self):
        try:
            config = config_from_params(self.params, default_rules=COMPARE_RULES)
            result = cmd_compare_cd(config, check_mode=self.module.check_mode)
        except KaczmarzError as e:
            self.module.fail_json(msg="Failed to compare with coordinate descent: " + e.msg, exit_code=e.exit_code)
        if self.module.check_mode:
            self.module.exit_json(changed=True, msg="Comparison traces would be written", traces=result['traces'])
        self.module.exit_json(changed=True, msg="Wrote {} trace(s)".format(len(result['traces'])),
                              traces=result['traces'], effective_passes=result['effective_passes'])
def main():
    module = AnsibleModule(argument_spec=ARGUMENT_SPEC, supports_check_mode=True)
    if not HAS_NUMPY:
        module.fail_json(msg=missing_required_lib('numpy and scipy'), exception=NUMPY_IMPORT_ERROR)
    manager = KaczmarzCompareCD(module)
    manager.run()
if __name__ == '__main__':
    main()
