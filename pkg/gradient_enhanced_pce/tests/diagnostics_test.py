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
import unittest
from itertools import combinations

import numpy as np
from scipy.stats import chi2

from gradient_enhanced_pce.diagnostics import (DELTA_STAR, DiagnoseConfig, TruncationSet, candidate_points,
                                               coherence_beta, coherence_mu, column_inner_products,
                                               decomposed_inner_products, diagnose, epsilon_q_estimate,
                                               inner_product_bound_chain, lowered_weight_factor, nullspace_dim,
                                               ric_estimate, ric_exhaustive, ric_monte_carlo, sample_bound,
                                               weight_factor)
from gradient_enhanced_pce.hermite_basis import enumerate_basis
from gradient_enhanced_pce.measurement import (GRADIENT_ENHANCED, STANDARD, MeasurementSystem, assemble,
                                               draw_samples, gramian)

from .measurement_test import zero_evaluator
from .tests_commons import ConfigTester, seeded_system, standard_and_enhanced

# Configurations where double points fail to impose independent conditions on polynomials of the given
# degree; there the gradient-enhanced null space is larger than the row count predicts.
SUPERABUNDANT = {(2, 4, 5), (3, 4, 9), (4, 4, 14), (4, 3, 7)}


def plain_system(matrix, basis):
    n_rows = matrix.shape[0]
    row_map = np.stack([np.arange(n_rows), np.zeros(n_rows, dtype=np.int64)], axis=1)
    return MeasurementSystem(matrix, np.zeros(n_rows), STANDARD, False, row_map, n_rows, basis)


def brute_force_ric(system, s):
    """ Definition of the restricted isometry constant, one subset at a time with a general eigensolver. """
    scaled = system.matrix / math.sqrt(system.n_samples)
    value = 0.0
    for subset in combinations(range(system.n_columns), s):
        sub = scaled[:, list(subset)]
        eigenvalues = np.linalg.eigvals(sub.T.dot(sub)).real
        value = max(value, float(np.max(np.abs(eigenvalues - 1.0))))
    return value


def scan_sample_bound(s, P, mu, C_Q, delta_star, p_star):
    n = 1
    while n * delta_star < (s * mu / C_Q) * (s + math.log(2 * s) + s * math.log(P / s) - math.log(1.0 - p_star)):
        n += 1
    return n


class TruncationSetTest(unittest.TestCase):

    def test_radius(self):
        trunc = TruncationSet(3, 0.01)
        self.assertAlmostEqual(trunc.radius_sq, 4.01 * 3 + 2, places=12)
        self.assertTrue(trunc.contains(np.zeros(4)))
        self.assertFalse(trunc.contains(np.full(2, trunc.radius)))
        self.assertAlmostEqual(trunc.probability(2), chi2.cdf(trunc.radius_sq, 2), places=14)
        with self.assertRaises(ValueError):
            TruncationSet(2, 0.0)

    def test_candidates_inside(self):
        trunc = TruncationSet(2)
        points = candidate_points(3, trunc, 1000, seed=4)
        self.assertEqual(points.shape, (1000, 3))
        self.assertTrue(np.all(trunc.contains(points)))


class CoherenceTest(unittest.TestCase):

    def test_one_dimensional_values(self):
        trunc0, trunc1 = TruncationSet(0), TruncationSet(1)
        self.assertEqual(coherence_mu(enumerate_basis(1, 0), trunc0, 1000), 1.0)
        self.assertEqual(coherence_beta(enumerate_basis(1, 0), trunc0, 1000), 1.0)
        self.assertAlmostEqual(coherence_mu(enumerate_basis(1, 1), trunc1, 1000), trunc1.radius_sq, places=10)
        self.assertAlmostEqual(coherence_beta(enumerate_basis(1, 1), trunc1, 1000), (trunc1.radius_sq + 1) / 2,
                               places=10)

    def test_growth_sanity(self):
        trunc = TruncationSet(3)
        mu = coherence_mu(enumerate_basis(2, 3), trunc, 2000)
        self.assertGreater(mu, 1.0)
        self.assertLess(mu, 100.0 * 3.8 ** 3)

    def test_beta_below_mu(self):
        strict = 0
        for seed in range(100):
            dimension, order = 1 + seed % 4, 1 + (seed // 4) % 4
            basis, trunc = enumerate_basis(dimension, order), TruncationSet(order)
            points = candidate_points(dimension, trunc, 1000, seed)
            mu = coherence_mu(basis, trunc, points=points)
            beta = coherence_beta(basis, trunc, points=points)
            self.assertLessEqual(beta, mu * (1 + 1e-12))
            strict += beta < mu
        self.assertGreaterEqual(strict, 99)


class RicTest(unittest.TestCase):

    def test_single_column(self):
        _, system = seeded_system(dim=2, order=2, n_samples=6, seed=1)
        norms = np.sum(system.matrix ** 2, axis=0) / system.n_samples
        estimate = ric_exhaustive(system, 1)
        self.assertAlmostEqual(estimate.value, float(np.max(np.abs(norms - 1.0))), places=12)
        self.assertTrue(estimate.exhaustive)
        self.assertEqual(estimate.subsets_examined, 6)

    def test_isometry(self):
        basis = enumerate_basis(2, 2)
        q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((9, basis.cardinality)))
        system = plain_system(3.0 * q, basis)
        for s in (1, 2, 3):
            self.assertAlmostEqual(ric_exhaustive(system, s).value, 0.0, places=12)

    def test_brute_force_oracle(self):
        basis = enumerate_basis(2, 4).truncated(12)
        system = assemble(basis, draw_samples(2, 5, 1.0, 3), zero_evaluator)
        for s in (1, 2, 3):
            self.assertAlmostEqual(ric_exhaustive(system, s).value, brute_force_ric(system, s), delta=1e-12)

    def test_full_order_is_spectral_norm(self):
        _, system = seeded_system(dim=2, order=2, n_samples=5, seed=8)
        expected = np.linalg.norm(gramian(system) - np.eye(system.n_columns), 2)
        self.assertAlmostEqual(ric_exhaustive(system, system.n_columns).value, expected, places=12)

    def test_monte_carlo(self):
        _, system = seeded_system(dim=2, order=2, n_samples=5, seed=2)
        exhaustive = ric_exhaustive(system, 2)
        covering = ric_monte_carlo(system, 2, 2000, seed=5)
        self.assertEqual(covering.subsets_examined, 15)
        self.assertFalse(covering.exhaustive)
        self.assertAlmostEqual(covering.value, exhaustive.value, delta=1e-12)
        values = [ric_monte_carlo(system, 2, trials, seed=5).value for trials in (1, 2, 4, 8, 16)]
        self.assertGreaterEqual(values[0], 0.0)
        self.assertEqual(values, sorted(values))

    def test_guard(self):
        _, system = seeded_system(dim=8, order=3, n_samples=3, seed=0)
        with self.assertRaises(ValueError) as context:
            ric_exhaustive(system, 4)
        self.assertIn("ric_monte_carlo", str(context.exception))
        estimate = ric_estimate(system, 4, 50, 0)
        self.assertFalse(estimate.exhaustive)


class NullspaceTest(unittest.TestCase):

    def test_dimensions(self):
        passed = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            dimension, order = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            basis = enumerate_basis(dimension, order)
            n = int(rng.integers(1, basis.cardinality + 2))
            if (dimension, order, n) in SUPERABUNDANT or (order == 2 and 2 <= n <= dimension):
                n = 1
            samples = draw_samples(dimension, n, 1.0, seed)
            standard = assemble(basis, samples, zero_evaluator, kind=STANDARD, apply_weights=False)
            enhanced = assemble(basis, samples, zero_evaluator)
            P = basis.cardinality
            passed += (nullspace_dim(standard) == max(0, P - n)
                       and nullspace_dim(enhanced) == max(0, P - (dimension + 1) * n))
        self.assertGreaterEqual(passed, 99)

    def test_quadric_through_two_points(self):
        # u = (line through both samples)^2 vanishes there with its gradient.
        basis = enumerate_basis(2, 2)
        enhanced = assemble(basis, draw_samples(2, 2, 1.0, 0), zero_evaluator)
        self.assertEqual(enhanced.n_rows, basis.cardinality)
        self.assertEqual(nullspace_dim(enhanced), 1)


class InnerProductTest(unittest.TestCase):

    def test_orthogonal_columns(self):
        basis = enumerate_basis(1, 2)
        system = plain_system(np.diag([1.0, 2.0, 3.0]), basis)
        np.testing.assert_array_equal(column_inner_products(system), np.zeros((3, 3)))

    def test_bound_chain(self):
        for seed in range(20):
            dimension, order = 1 + seed % 3, 1 + seed % 4
            standard, enhanced = standard_and_enhanced(dimension, order, n_samples=4 + seed % 5, seed=seed)
            chain = inner_product_bound_chain(standard, enhanced)
            slack = 1e-12 * max(1.0, chain['standard_sup'])
            self.assertTrue(np.all(chain['enhanced'] <= chain['triangle'] + slack))
            self.assertTrue(np.all(chain['triangle'] <= chain['weighted_sup'] + slack))
            self.assertTrue(np.all(chain['weighted_sup'] <= chain['standard_sup'] + slack))
            self.assertLessEqual(chain['enhanced_sup'], chain['standard_sup'] + slack)

    def test_decomposition(self):
        standard, enhanced = standard_and_enhanced(3, 3, n_samples=6, seed=2)
        np.testing.assert_allclose(decomposed_inner_products(standard), enhanced.matrix.T.dot(enhanced.matrix),
                                   rtol=1e-10, atol=1e-10)

    def test_one_dimensional_pair(self):
        standard, enhanced = standard_and_enhanced(1, 3, n_samples=5, seed=9)
        psi = standard.matrix
        expected = (psi[:, 1].dot(psi[:, 2]) + math.sqrt(2.0) * psi[:, 0].dot(psi[:, 1])) / math.sqrt(2.0 * 3.0)
        self.assertAlmostEqual(enhanced.matrix[:, 1].dot(enhanced.matrix[:, 2]), expected, places=10)
        self.assertAlmostEqual(decomposed_inner_products(standard)[1, 2], expected, places=10)

    def test_chain_requires_all_gradient(self):
        basis = enumerate_basis(2, 2)
        samples = draw_samples(2, 4, 0.5, 0)
        standard = assemble(basis, samples, zero_evaluator, kind=STANDARD, apply_weights=False)
        partial = assemble(basis, samples, zero_evaluator, kind=GRADIENT_ENHANCED)
        with self.assertRaises(ValueError):
            inner_product_bound_chain(standard, partial)

    def test_weight_factors(self):
        for i in range(1, 51):
            for j in range(1, 51):
                self.assertLessEqual(lowered_weight_factor(i, j), weight_factor(i, j) + 1e-15)
                self.assertLessEqual(weight_factor(i, j), 1.0 + 1e-15)


class SampleBoundTest(unittest.TestCase):

    def test_matches_scalar_scan(self):
        self.assertAlmostEqual(DELTA_STAR, 0.4652, places=4)
        self.assertEqual(sample_bound(5, 165, 50.0, 1.0, DELTA_STAR, 0.9, 1.0),
                         scan_sample_bound(5, 165, 50.0, 1.0, DELTA_STAR, 0.9))

    def test_closed_form(self):
        s, P, mu, p_star = 3, 84, 12.0, 0.5
        closed = (s * mu / DELTA_STAR) * (s + math.log(2 * s) + s * math.log(P / s) - math.log(1 - p_star))
        self.assertEqual(sample_bound(s, P, mu, 1.0, DELTA_STAR, p_star, 1.0), int(math.ceil(closed)))

    def test_truncated_probability_needs_more_samples(self):
        exact = sample_bound(3, 84, 12.0, 1.0, DELTA_STAR, 0.1, 1.0)
        truncated = sample_bound(3, 84, 12.0, 1.0, DELTA_STAR, 0.1, 1.0 - 1e-6)
        self.assertGreaterEqual(truncated, exact)

    def test_unsatisfiable(self):
        self.assertIsNone(sample_bound(5, 165, 50.0, 1.0, DELTA_STAR, 0.9, 0.5))
        with self.assertRaises(ValueError):
            sample_bound(5, 165, 50.0, 1.0, 1.5, 0.9, 1.0)


class EpsilonQTest(unittest.TestCase):

    def test_estimate(self):
        basis, trunc = enumerate_basis(1, 1), TruncationSet(1)
        bias = epsilon_q_estimate(basis, trunc, 200000, seed=0)
        self.assertAlmostEqual(bias['prob_q'], chi2.cdf(trunc.radius_sq, 1), places=14)
        self.assertAlmostEqual(bias['prob_q_estimate'], bias['prob_q'], delta=2e-3)
        self.assertGreater(bias['n_outside'], 0)
        self.assertLessEqual(bias['epsilon_q'], 0.1 / math.sqrt(basis.cardinality))


class DiagnoseTest(unittest.TestCase):

    def setUp(self):
        self.config_tester = ConfigTester(self, config_class=DiagnoseConfig, dim=3, order=2, samples=7,
                                          ric_sparsity=[1, 2])

    def test_config(self):
        self.config_tester.run_common_tests()

    def test_report(self):
        config = DiagnoseConfig(dim=2, order=2, samples=4, ric_sparsity=[1, 2, 9], budget=500,
                                epsilon_q_samples=2000, seed=3)
        report, system = diagnose(config)
        self.assertEqual(report['cardinality'], 6)
        self.assertEqual(report['n_rows'], 12)
        self.assertEqual([entry['s'] for entry in report['ric']], [1, 2])
        self.assertEqual(report['nullspace_dim'], 0)
        self.assertLessEqual(report['beta'], report['mu'])
        for key in ('max_offdiag_inner_product', 'epsilon_Q_estimate', 'prob_Q', 'prob_Q_estimate', 'radius_sq'):
            self.assertIn(key, report)
        self.assertEqual(system.kind, GRADIENT_ENHANCED)


if __name__ == "__main__":
    unittest.main()
