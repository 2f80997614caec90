#!/usr/bin/python
# -*- coding: utf-8 -*-
from __future__ import absolute_import, division, print_function
__metaclass__ = type
DOCUMENTATION = r'''
---
module: kaczmarz_generate
short_description: Generate seeded test systems for Kaczmarz solvers
description:
  - Generate a lattice, sparse overdetermined, two-moons label propagation, diagonal, random consistent,
    halfspace or box system from a seed and write it as Matrix Market and vector files.
  - Writes C(A.mtx), C(b.txt), C(z.txt) (reference solution) and, for inequality systems, C(kinds.txt).
  - The same problem and seed always produce identical files.
version_added: "1.0.0"
options:
  problem:
    description:
      - Generator spec, either as a string such as C(lattice:side=20,seed=3) or as a dictionary with a C(kind) key.
      - 'Kinds: lattice, overdetermined, two_moons, diagonal, random_consistent, halfspaces, box.'
    required: true
    type: raw
  dest:
    description:
      - Directory to write the system files into. Created when missing.
    required: true
    type: path
    aliases: [ out_dir ]
  edge_list:
    description:
      - Also write the support orthogonality graph as C(graph.edges).
    required: false
    type: bool
    default: false
requirements:
  - numpy
  - scipy
author:
  - Crystian (@crystian)
'''
EXAMPLES = r'''
- name: Generate the 20x20 lattice problem
  crystian.kaczmarz.kaczmarz_generate:
    problem: lattice:side=20,seed=3
    dest: /tmp/lattice20
- name: Generate a diagonal system from a dictionary spec
  crystian.kaczmarz.kaczmarz_generate:
    problem:
      kind: diagonal
      lam: [1, 2]
      seed: 0
    dest: /tmp/diag
    edge_list: true
'''
RETURN = r'''
msg:
  description: Status message
  returned: always
  type: str
files:
  description: Files written (or that would be written in check mode)
  returned: always
  type: list
  elements: str
shape:
  description: Rows and columns of the generated matrix
  returned: success
  type: list
  elements: int
nnz:
  description: Number of stored nonzeros
  returned: success
  type: int
'''
import traceback
from ansible.module_utils.basic import AnsibleModule, missing_required_lib
try:
    from ..module_utils.errors import KaczmarzError
    from ..module_utils.harness import cmd_generate
    from ..module_utils.problems import GeneratorSpec
    HAS_NUMPY = True
    NUMPY_IMPORT_ERROR = None
except ImportError:
    HAS_NUMPY = False
    NUMPY_IMPORT_ERROR = traceback.format_exc()
ARGUMENT_SPEC = dict(
    problem=dict(type='raw', required=True),
    dest=dict(type='path', required=True, aliases=['out_dir']),
    edge_list=dict(type='bool', default=False),
)
class KaczmarzGenerate(object):
    def __init__(self, module):
        self.module = module
        self.problem = module.params['problem']
        self.dest = module.params['dest']
        self.edge_list = module.params['edge_list']
    def spec(self):
        if isinstance(self.problem, dict):
            return GeneratorSpec.from_mapping(self.problem)
        return GeneratorSpec.parse(str(self.problem))
    def run(self):
        try:
            spec = self.spec()
            result = cmd_generate(spec, self.dest, edge_list=self.edge_list, check_mode=self.module.check_mode)
        except KaczmarzError as e:
            self.module.fail_json(msg="Failed to generate problem: " + e.msg, exit_code=e.exit_code)
        if self.module.check_mode:
            self.module.exit_json(changed=True, msg="Problem files would be written", files=result['files'])
        self.module.exit_json(changed=True, msg="Generated {} system".format(spec.kind), files=result['files'],
                              shape=[result['m'], result['n']], nnz=result['nnz'])
def main():
    module = AnsibleModule(argument_spec=ARGUMENT_SPEC, supports_check_mode=True)
    if not HAS_NUMPY:
        module.fail_json(msg=missing_required_lib('numpy and scipy'), exception=NUMPY_IMPORT_ERROR)
    manager = KaczmarzGenerate(module)
    manager.run()
if __name__ == '__main__':
    main()
