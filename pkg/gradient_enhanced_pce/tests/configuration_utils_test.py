# coding=utf-8
# Copyright 2019 The Gradient-Enhanced PCE Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function

import os
import unittest

from gradient_enhanced_pce.configuration_utils import RunConfig
from gradient_enhanced_pce.experiments import ManufacturedConfig

from .tests_commons import FIXTURES_DIR, ConfigTester, TemporaryDirectory


class RunConfigTest(unittest.TestCase):

    def test_config(self):
        ConfigTester(self, RunConfig, seed=3, out="results").run_common_tests()

    def test_update(self):
        config = RunConfig(seed=5)
        unused = config.update(seed=None, verbosity=2, color=True)
        self.assertEqual(config.seed, 5)
        self.assertEqual(config.verbosity, 2)
        self.assertEqual(unused, {'color': True})

    def test_read_flat_file(self):
        values = RunConfig.read_flat_file(os.path.join(FIXTURES_DIR, "manufactured.conf"))
        self.assertEqual(values['dim'], 3)
        self.assertEqual(values['n_grid'], [20, 40])
        self.assertEqual(values['noise_target'], 'values')
        self.assertNotIn('n-grid', values)

    def test_malformed_flat_file(self):
        with TemporaryDirectory() as tmpdirname:
            path = os.path.join(tmpdirname, "broken.conf")
            with open(path, "w") as writer:
                writer.write("dim = 3\norder 2\n")
            with self.assertRaises(ValueError) as context:
                RunConfig.read_flat_file(path)
        self.assertIn(":2:", str(context.exception))

    def test_from_flat_file(self):
        path = os.path.join(FIXTURES_DIR, "manufactured.conf")
        with self.assertLogs('gradient_enhanced_pce.configuration_utils', level='WARNING') as logs:
            config = ManufacturedConfig.from_flat_file(path, reps=7)
        self.assertIn('label', logs.output[0])
        self.assertEqual((config.dim, config.order, config.sparsity), (3, 2, [3]))
        self.assertEqual(config.n_grid, [20, 40])
        self.assertEqual(config.reps, 7)
        self.assertEqual(config.noise_target, 'values')
        self.assertFalse(hasattr(config, 'label'))

    def test_missing_flat_file(self):
        self.assertIsNone(ManufacturedConfig.from_flat_file(os.path.join(FIXTURES_DIR, "missing.conf")))


if __name__ == "__main__":
    unittest.main()
