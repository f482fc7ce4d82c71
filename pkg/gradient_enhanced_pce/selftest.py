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
""" Property checks run by the ``selftest`` subcommand: quadrature and finite-difference oracles for the
    basis, analytic solver cases and the adjoint gradient.
"""

from __future__ import absolute_import, division, print_function

import logging
import math
from collections import namedtuple

import numpy as np

from .elliptic_pde import build_kl, solve_adjoint_gradient, solve_forward
from .experiments import manufacture
from .hermite_basis import (basis_gradient_matrices, basis_matrix, enumerate_basis, eval_multivariate,
                            eval_multivariate_partial, gauss_hermite_rule, hermite_derivative, hermite_eval)
from .measurement import STANDARD, MeasurementSystem, assemble, draw_samples
from .optimization import solve_bpdn, solve_least_squares

logger = logging.getLogger(__name__)

CheckResult = namedtuple('CheckResult', ['name', 'passed', 'detail'])


def check_quadrature_identities(max_dimension=3, order=5):
    """ Orthonormality and the gradient-norm identity by tensor Gauss-Hermite quadrature. """
    worst_orthonormal, worst_gradient = 0.0, 0.0
    for d in range(1, max_dimension + 1):
        basis = enumerate_basis(d, order)
        nodes, weights = gauss_hermite_rule(2 * order + 1, d)
        values = basis_matrix(basis, nodes)
        derivatives = basis_gradient_matrices(basis, nodes)
        gram = values.T.dot(weights[:, None] * values)
        sobolev = gram + sum(derivatives[:, k, :].T.dot(weights[:, None] * derivatives[:, k, :]) for k in range(d))
        totals = basis.degree_array.sum(axis=1)
        worst_orthonormal = max(worst_orthonormal, float(np.max(np.abs(gram - np.eye(basis.cardinality)))))
        worst_gradient = max(worst_gradient, float(np.max(np.abs(sobolev - np.diag(1.0 + totals)))))
    return [CheckResult('orthonormality', worst_orthonormal <= 1e-10, worst_orthonormal),
            CheckResult('gradient-norm identity', worst_gradient <= 1e-10, worst_gradient)]


def check_derivative_identity(seed=0, n_points=1000, max_order=20):
    """ Exact derivative identity for orders up to `max_order`, and central differences for orders up to 10. """
    rng = np.random.default_rng(seed)
    points = rng.standard_normal(n_points)
    exact = all(np.array_equal(hermite_derivative(i, points), math.sqrt(i) * hermite_eval(i - 1, points))
                for i in range(1, max_order + 1))
    exact = exact and np.all(hermite_derivative(0, points) == 0.0)

    step, worst = 1e-6, 0.0
    grid = np.linspace(-2.0, 2.0, 101)
    for i in range(1, 11):
        difference = (hermite_eval(i, grid + step) - hermite_eval(i, grid - step)) / (2.0 * step)
        scale = np.maximum(1.0, np.abs(difference))
        worst = max(worst, float(np.max(np.abs(difference - hermite_derivative(i, grid)) / scale)))
    return [CheckResult('derivative identity', bool(exact), 0.0 if exact else 1.0),
            CheckResult('derivative finite differences', worst <= 1e-8, worst)]


def check_partial_derivatives(seed=0):
    """ Multivariate partial derivatives against central differences. """
    rng = np.random.default_rng(seed)
    step, worst = 1e-6, 0.0
    for index in [(2, 3), (1, 0), (0, 4), (3, 1, 2)]:
        point = rng.standard_normal(len(index))
        for k in range(len(index)):
            shift = np.zeros(len(index))
            shift[k] = step
            difference = (eval_multivariate(index, point + shift) - eval_multivariate(index, point - shift)) / (2 * step)
            partial = eval_multivariate_partial(index, point, k + 1)
            worst = max(worst, abs(difference - partial) / max(1.0, abs(partial)))
    return [CheckResult('partial derivative finite differences', worst <= 1e-6, worst)]


def check_bpdn_analytic(seed=0):
    """ Zero solution for a large tolerance and exact recovery with orthogonal columns. """
    rng = np.random.default_rng(seed)
    basis = enumerate_basis(2, 2)
    n = basis.cardinality
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    matrix = math.sqrt(n) * q
    planted = np.zeros(n)
    planted[[1, 4]] = [1.5, -0.75]
    rhs = matrix.dot(planted)
    system = MeasurementSystem(matrix, rhs, STANDARD, False, np.stack([np.arange(n), np.zeros(n, dtype=int)], 1),
                               n, basis)
    zero = solve_bpdn(system, 1.01 * np.linalg.norm(rhs))
    exact = solve_bpdn(system, 0.0)
    error = float(np.max(np.abs(exact.coefficients - planted)))
    return [CheckResult('bpdn zero solution', bool(np.all(zero.coefficients == 0.0)), float(np.max(np.abs(zero.coefficients)))),
            CheckResult('bpdn orthogonal recovery', error <= 1e-10, error)]


def check_least_squares_reference(seed=0):
    """ Oversampled least squares reproduces a planted expansion. """
    basis = enumerate_basis(3, 2)
    problem = manufacture(basis, 4, seed)
    samples = draw_samples(3, 10 * basis.cardinality, 0.0, seed)
    system = assemble(basis, samples, problem, kind=STANDARD, apply_weights=False)
    error = float(np.max(np.abs(solve_least_squares(system).coefficients - problem.planted)))
    return [CheckResult('least-squares reference', error <= 1e-8, error)]


def check_adjoint_gradient(seed=0, mesh_n=8):
    """ Adjoint gradient of the center value against central differences of the forward solve. """
    field = build_kl(2, 8, 0.5, 0.1, 0.25)
    xi = np.random.default_rng(seed).standard_normal(2)
    _, state, operator = solve_forward(field, xi, mesh_n)
    gradient = solve_adjoint_gradient(operator, state, field, xi)
    step, worst = 1e-5, 0.0
    for k in range(2):
        shift = np.zeros(2)
        shift[k] = step
        difference = (solve_forward(field, xi + shift, mesh_n)[0] - solve_forward(field, xi - shift, mesh_n)[0]) / (2 * step)
        worst = max(worst, abs(gradient[k] - difference) / max(abs(difference), 1e-12))
    return [CheckResult('adjoint finite differences', worst <= 1e-4, worst)]


def run_selftest(quick=False):
    """ Runs every check and returns the list of :class:`CheckResult`; `quick` shrinks the quadrature range. """
    results = []
    results.extend(check_quadrature_identities(*((2, 3) if quick else (3, 5))))
    results.extend(check_derivative_identity())
    results.extend(check_partial_derivatives())
    results.extend(check_bpdn_analytic())
    results.extend(check_least_squares_reference())
    results.extend(check_adjoint_gradient())
    for result in results:
        if result.passed:
            logger.info("selftest {}: ok ({:.3e})".format(result.name, result.detail))
        else:
            logger.error("selftest {}: FAILED ({:.3e})".format(result.name, result.detail))
    return results
