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

import io
import json
import os
import unittest
from contextlib import redirect_stderr, redirect_stdout
from unittest import mock

import numpy as np

from gradient_enhanced_pce.__main__ import build_parser, main
from gradient_enhanced_pce.file_utils import BUILD_ENV, WORKERS_ENV

from .tests_commons import FIXTURES_DIR, TemporaryDirectory

ENVIRONMENT = {BUILD_ENV: 'v0.0-test', WORKERS_ENV: '1'}


def run_main(argv, verbosity=0):
    """ Exit code, stdout and stderr of one command line run; `verbosity` None leaves the flag out. """
    if verbosity is not None:
        argv = ['--verbosity', str(verbosity)] + argv
    stdout, stderr = io.StringIO(), io.StringIO()
    with mock.patch.dict(os.environ, ENVIRONMENT), redirect_stdout(stdout), redirect_stderr(stderr):
        try:
            code = main(argv)
        except SystemExit as exc:
            code = exc.code
    return code, stdout.getvalue(), stderr.getvalue()


def read(path):
    with open(path, 'rb') as reader:
        return reader.read()


class ParserTest(unittest.TestCase):

    def test_lists(self):
        args = build_parser().parse_args(['experiment', 'manufactured', '--n-grid', '30,50', '--fraction', '0.5,1'])
        self.assertEqual(args.n_grid, [30, 50])
        self.assertEqual(args.fraction, [0.5, 1.0])
        self.assertIsNone(args.reps)

    def test_bad_flags(self):
        self.assertEqual(run_main(['basis', '--dim', 'three', '--order', '2'])[0], 2)
        self.assertEqual(run_main(['experiment', 'manufactured', '--n-grid', '30,x'])[0], 2)
        self.assertEqual(run_main(['recover', '--delta', '0.1', '--cv'])[0], 2)
        self.assertEqual(run_main(['selftest', '--unknown'])[0], 2)

    def test_missing_command(self):
        self.assertEqual(run_main([])[0], 2)
        self.assertEqual(run_main(['experiment'])[0], 2)

    def test_missing_out(self):
        self.assertEqual(run_main(['experiment', 'manufactured', '--reps', '1'])[0], 2)


class BasisCommandTest(unittest.TestCase):

    def test_cardinality(self):
        code, stdout, _ = run_main(['basis', '--dim', '25', '--order', '3'])
        lines = stdout.splitlines()
        self.assertEqual(code, 0)
        self.assertEqual(lines[0], 'P=3276')
        self.assertEqual(lines[1].split(','), ['column', 'total'] + ['i{}'.format(k + 1) for k in range(25)])
        self.assertEqual(len(lines), 2 + 3276)
        self.assertEqual(lines[2], ','.join(['0', '0'] + ['0'] * 25))

    def test_invalid_order(self):
        code, _, stderr = run_main(['basis', '--dim', '2', '--order', '-1'])
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(stderr.strip().splitlines()[-1])['error'], 'ValueError')


class RecoverCommandTest(unittest.TestCase):

    def test_requires_tolerance(self):
        with TemporaryDirectory() as tmpdirname:
            code, _, stderr = run_main(['recover', '--out', tmpdirname])
        self.assertEqual(code, 1)
        error = json.loads(stderr.strip().splitlines()[-1])
        self.assertEqual(error['error'], 'ValueError')
        self.assertIn('--system', error['message'])

    def test_diagnose_then_recover(self):
        with TemporaryDirectory() as tmpdirname:
            diagnose_dir = os.path.join(tmpdirname, 'diagnose')
            recover_dir = os.path.join(tmpdirname, 'recover')
            code, _, _ = run_main(['diagnose', '--dim', '2', '--order', '3', '--samples', '12', '--ric-sparsity', '1,2',
                                   '--ric-trials', '50', '--budget', '100', '--save-system', '--seed', '5',
                                   '--out', diagnose_dir])
            self.assertEqual(code, 0)
            with open(os.path.join(diagnose_dir, 'diagnostics.json')) as reader:
                report = json.load(reader)
            self.assertEqual(report['cardinality'], 10)
            self.assertEqual(report['n_rows'], 36)
            self.assertEqual(report['build'], 'v0.0-test')
            self.assertEqual(report['seed'], 5)

            code, _, _ = run_main(['recover', '--system', os.path.join(diagnose_dir, 'system.csv'), '--delta', '0',
                                   '--out', recover_dir])
            self.assertEqual(code, 0)
            with open(os.path.join(recover_dir, 'telemetry.json')) as reader:
                telemetry = json.load(reader)
            self.assertTrue(telemetry['converged'])
            self.assertEqual(telemetry['system']['n_columns'], 10)
            self.assertIsNone(telemetry['cv'])
            with open(os.path.join(recover_dir, 'solution.csv')) as reader:
                lines = reader.read().splitlines()
            self.assertEqual(lines[0].split(',')[-2:], ['coefficient', 'system_coefficient'])
            self.assertEqual(len(lines), 11)


class ExperimentCommandTest(unittest.TestCase):

    ARGS = ['experiment', 'manufactured', '--dim', '2', '--order', '2', '--sparsity', '2', '--fraction', '1',
            '--n-grid', '10,14', '--reps', '2', '--folds', '2', '--seed', '3']

    def test_byte_identical_reruns(self):
        with TemporaryDirectory() as tmpdirname:
            self.assertEqual(run_main(self.ARGS + ['--out', tmpdirname])[0], 0)
            first = [read(os.path.join(tmpdirname, name)) for name in ('report.json', 'curves.csv')]
            self.assertEqual(run_main(self.ARGS + ['--out', tmpdirname])[0], 0)
            second = [read(os.path.join(tmpdirname, name)) for name in ('report.json', 'curves.csv')]
        self.assertEqual(first, second)
        lines = first[1].decode('utf-8').splitlines()
        self.assertEqual(lines[0], 'curve,n_tilde,n_e,n_g,replications,success_probability,mean_rrmse,std_rrmse')
        self.assertEqual(len(lines), 1 + 2 * 2)

    def test_config_file_and_flags(self):
        with TemporaryDirectory() as tmpdirname:
            code, _, _ = run_main(['--config', os.path.join(FIXTURES_DIR, 'manufactured.conf'),
                                   'experiment', 'manufactured', '--reps', '1', '--folds', '2', '--out', tmpdirname])
            self.assertEqual(code, 0)
            with open(os.path.join(tmpdirname, 'report.json')) as reader:
                report = json.load(reader)
        self.assertEqual(report['config']['dim'], 3)
        self.assertEqual(report['config']['n_grid'], [20, 40])
        self.assertEqual(report['config']['reps'], 1)
        self.assertEqual([curve['label'] for curve in report['curves']], ['standard', 'gradient-100'])
        for curve in report['curves']:
            self.assertEqual([point['replications'] for point in curve['points']], [1, 1])
            self.assertTrue(np.all(np.isfinite([point['mean_rrmse'] for point in curve['points']])))

    def test_verbosity_precedence(self):
        args = ['experiment', 'manufactured', '--reps', '1', '--n-grid', '14', '--folds', '2']
        with TemporaryDirectory() as tmpdirname:
            config_file = os.path.join(tmpdirname, 'quiet.conf')
            with open(config_file, 'w') as writer:
                writer.write("dim = 2\norder = 2\nsparsity = [2]\nverbosity = 0\n")
            levels = []
            for verbosity in (None, 1):
                out_dir = os.path.join(tmpdirname, 'run-{}'.format(verbosity))
                code, _, _ = run_main(['--config', config_file] + args + ['--out', out_dir], verbosity=verbosity)
                self.assertEqual(code, 0)
                with open(os.path.join(out_dir, 'report.json')) as reader:
                    levels.append(json.load(reader)['config']['verbosity'])
        self.assertEqual(levels, [0, 1])

    def test_invalid_verbosity_in_file(self):
        with TemporaryDirectory() as tmpdirname:
            config_file = os.path.join(tmpdirname, 'loud.conf')
            with open(config_file, 'w') as writer:
                writer.write("verbosity = 7\n")
            code, _, stderr = run_main(['--config', config_file, 'experiment', 'manufactured',
                                        '--out', tmpdirname], verbosity=None)
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(stderr.strip().splitlines()[-1])['error'], 'ValueError')


class SelftestCommandTest(unittest.TestCase):

    def test_quick_selftest(self):
        code, stdout, _ = run_main(['selftest', '--quick'])
        self.assertEqual(code, 0)
        self.assertNotIn('FAILED', stdout)


if __name__ == "__main__":
    unittest.main()
