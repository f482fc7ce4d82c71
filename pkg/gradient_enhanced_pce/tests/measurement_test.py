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
from __future__ import absolute_import, division, print_function

import math
import os
import unittest

import numpy as np

from gradient_enhanced_pce.experiments import manufacture
from gradient_enhanced_pce.hermite_basis import enumerate_basis
from gradient_enhanced_pce.measurement import (GRADIENT_ENHANCED, STANDARD, MeasurementSystem, SampleSet, assemble,
                                               draw_samples, gramian, load_samples, load_system, rows_for_samples,
                                               save_samples, save_system)

from .tests_commons import TemporaryDirectory, seeded_system


def zero_evaluator(point, need_gradient):
    return 0.0, (np.zeros(point.shape[0]) if need_gradient else None)


def failing_evaluator(point, need_gradient):
    if point[0] > 10.0:
        raise ArithmeticError("solver diverged")
    return 0.0, (np.zeros(point.shape[0]) if need_gradient else None)


class DrawSamplesTest(unittest.TestCase):

    def test_flag_counts(self):
        samples = draw_samples(2, 5, 1.0, 7)
        self.assertEqual(samples.n_samples, 5)
        self.assertEqual(samples.n_gradient, 5)
        self.assertEqual(draw_samples(2, 10, 0.2, 7).n_gradient, 2)
        self.assertEqual(draw_samples(3, 10, 0.0, 7).n_gradient, 0)
        self.assertEqual(draw_samples(3, 10, 0.25, 7).n_gradient, 3)

    def test_reproducible(self):
        first, second = draw_samples(4, 12, 0.5, 11), draw_samples(4, 12, 0.5, 11)
        np.testing.assert_array_equal(first.points, second.points)
        np.testing.assert_array_equal(first.with_gradient, second.with_gradient)
        self.assertFalse(np.array_equal(first.points, draw_samples(4, 12, 0.5, 12).points))

    def test_invalid(self):
        with self.assertRaises(ValueError):
            draw_samples(2, 0, 0.5, 0)
        with self.assertRaises(ValueError):
            draw_samples(2, 4, 1.5, 0)
        with self.assertRaises(ValueError):
            SampleSet(np.zeros((3, 2)), [True, False])

    def test_read_only(self):
        samples = draw_samples(2, 4, 0.5, 0)
        with self.assertRaises(ValueError):
            samples.points[0, 0] = 1.0


class AssembleTest(unittest.TestCase):

    def test_hand_computed_system(self):
        basis = enumerate_basis(1, 1)
        samples = SampleSet([[0.3]], [True])
        system = assemble(basis, samples, lambda point, need_gradient: (2.0, np.array([-1.0])))
        expected = np.array([[1.0, 0.3 / math.sqrt(2.0)], [0.0, 1.0 / math.sqrt(2.0)]])
        np.testing.assert_allclose(system.matrix, expected, rtol=0, atol=1e-15)
        np.testing.assert_array_equal(system.rhs, [2.0, -1.0])
        np.testing.assert_array_equal(system.row_map, [[0, 0], [0, 1]])
        self.assertTrue(system.weights_applied)

    def test_row_counts(self):
        basis = enumerate_basis(4, 2)
        flags = [False, True, False, True, False]
        samples = SampleSet(np.random.default_rng(0).standard_normal((5, 4)), flags)
        enhanced = assemble(basis, samples, zero_evaluator)
        self.assertEqual(enhanced.n_rows, 13)
        self.assertEqual(enhanced.n_rows, rows_for_samples(5, 2, 4))
        standard = assemble(basis, samples, zero_evaluator, kind=STANDARD)
        self.assertEqual(standard.n_rows, 5)
        self.assertEqual(standard.n_samples, enhanced.n_samples)
        self.assertEqual(enhanced.value_rows().sum(), 5)

    def test_standard_is_sub_matrix(self):
        basis = enumerate_basis(3, 3)
        samples = draw_samples(3, 8, 1.0, 5)
        problem = manufacture(basis, 4, 5)
        standard = assemble(basis, samples, problem, kind=STANDARD, apply_weights=False)
        enhanced = assemble(basis, samples, problem, kind=GRADIENT_ENHANCED, apply_weights=False)
        np.testing.assert_array_equal(enhanced.matrix[enhanced.value_rows()], standard.matrix)
        np.testing.assert_array_equal(enhanced.rhs[enhanced.value_rows()], standard.rhs)
        weighted = assemble(basis, samples, problem)
        np.testing.assert_allclose(weighted.matrix, enhanced.matrix * basis.weights[None, :], rtol=1e-15)

    def test_rhs_matches_planted_expansion(self):
        problem, system = seeded_system(dim=3, order=3, n_samples=6, fraction=0.5, seed=2)
        coefficients = problem.planted / system.basis.weights
        np.testing.assert_allclose(system.matrix.dot(coefficients), system.rhs, atol=1e-12)

    def test_evaluator_failure_names_sample(self):
        basis = enumerate_basis(2, 1)
        points = np.array([[0.0, 0.0], [1.0, 0.0], [11.0, 0.0]])
        with self.assertRaises(RuntimeError) as context:
            assemble(basis, SampleSet(points), failing_evaluator)
        self.assertIn("sample 2", str(context.exception))
        self.assertIsInstance(context.exception.__cause__, ArithmeticError)

    def test_non_finite_rejected(self):
        basis = enumerate_basis(2, 1)
        with self.assertRaises(FloatingPointError):
            assemble(basis, draw_samples(2, 3, 0.0, 0), lambda point, need_gradient: (float('nan'), None))

    def test_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            assemble(enumerate_basis(3, 1), draw_samples(2, 3, 0.0, 0), zero_evaluator)

    def test_workers_do_not_change_system(self):
        basis = enumerate_basis(2, 2)
        samples = draw_samples(2, 6, 0.5, 1)
        problem = manufacture(basis, 3, 1)
        serial = assemble(basis, samples, problem)
        parallel = assemble(basis, samples, problem, workers=2)
        np.testing.assert_array_equal(serial.matrix, parallel.matrix)
        np.testing.assert_array_equal(serial.rhs, parallel.rhs)

    def test_select_samples(self):
        _, system = seeded_system(dim=2, order=2, n_samples=6, fraction=0.5, seed=4)
        sub = system.select_samples([1, 4])
        self.assertEqual(sub.n_samples, 2)
        self.assertEqual(set(sub.row_map[:, 0]), {1, 4})
        np.testing.assert_array_equal(system.sample_ids, np.arange(6))


class GramianTest(unittest.TestCase):

    def test_single_sample(self):
        basis = enumerate_basis(1, 2)
        system = assemble(basis, SampleSet([[0.7]]), zero_evaluator, kind=STANDARD, apply_weights=False)
        np.testing.assert_allclose(gramian(system), system.matrix.T.dot(system.matrix), rtol=1e-15)

    def test_normalized_by_samples(self):
        _, system = seeded_system(dim=2, order=2, n_samples=7, seed=3)
        gram = gramian(system)
        np.testing.assert_allclose(gram, gram.T, rtol=0, atol=0)
        np.testing.assert_allclose(gram * 7, system.matrix.T.dot(system.matrix), rtol=1e-12)

    def test_expected_identity(self):
        basis = enumerate_basis(2, 2)
        system = assemble(basis, draw_samples(2, 200000, 1.0, 17), zero_evaluator)
        gram = gramian(system)
        np.testing.assert_allclose(np.diag(gram), np.ones(basis.cardinality), atol=0.02)
        np.testing.assert_allclose(gram - np.diag(np.diag(gram)), np.zeros_like(gram), atol=0.02)


class SystemFileTest(unittest.TestCase):

    def test_system_layout(self):
        _, system = seeded_system(dim=2, order=2, n_samples=4, fraction=0.5, seed=6)
        with TemporaryDirectory() as tmpdirname:
            path = os.path.join(tmpdirname, 'system.csv')
            save_system(system, path)
            with open(path) as reader:
                self.assertEqual(reader.readline().strip(),
                                 "# dim=2,order=2,kind=gradient-enhanced,weights_applied=true,n_samples=4")
                self.assertEqual(reader.readline().strip(), "sample,role,rhs,c0,c1,c2,c3,c4,c5")
            loaded = load_system(path)
        self.assertIsInstance(loaded, MeasurementSystem)
        np.testing.assert_array_equal(loaded.matrix, system.matrix)
        np.testing.assert_array_equal(loaded.row_map, system.row_map)
        self.assertEqual(loaded.kind, system.kind)
        self.assertEqual(loaded.n_samples, 4)

    def test_sample_layout(self):
        samples = draw_samples(3, 5, 0.4, 9)
        with TemporaryDirectory() as tmpdirname:
            path = os.path.join(tmpdirname, 'samples.csv')
            save_samples(samples, path)
            loaded = load_samples(path)
        np.testing.assert_array_equal(loaded.points, samples.points)
        np.testing.assert_array_equal(loaded.with_gradient, samples.with_gradient)
        self.assertEqual(loaded.seed, 9)


if __name__ == "__main__":
    unittest.main()
