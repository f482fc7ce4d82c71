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
"""Orthonormal probabilists' Hermite polynomials and total-degree chaos bases."""

from __future__ import absolute_import, division, print_function

import logging
import math
from itertools import product

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

logger = logging.getLogger(__name__)

MAX_CARDINALITY = 2 ** 63 - 1

# Bounds the (samples x columns x dimension) factor tensor built during evaluation.
_EVALUATION_CHUNK_ENTRIES = 2 * 10 ** 7


class MultiIndex(tuple):
    r""" Multi-index :math:`(i_1, \ldots, i_d)` of non-negative univariate degrees.

        A ``MultiIndex`` is an immutable tuple, so it hashes and compares like one.
        ``total`` is the total degree :math:`\sum_k i_k`.
    """
    def __new__(cls, degrees):
        degrees = tuple(int(i) for i in degrees)
        if not degrees:
            raise ValueError("A multi-index needs at least one dimension")
        if any(i < 0 for i in degrees):
            raise ValueError("Invalid multi-index {}: degrees should be >= 0".format(degrees))
        return super(MultiIndex, cls).__new__(cls, degrees)

    @property
    def degrees(self):
        return tuple(self)

    @property
    def total(self):
        return sum(self)

    @property
    def dimension(self):
        return len(self)

    def __repr__(self):
        return "MultiIndex({})".format(tuple(self))


class Basis(object):
    r""" Ordered set of multi-indices defining a truncated polynomial chaos expansion.

        A basis returned by :func:`enumerate_basis` holds every multi-index of total degree
        at most ``order``, so ``cardinality`` equals :math:`(d+p)!/(d!\,p!)`. :meth:`truncated`
        keeps only a leading block of columns; such a basis reports ``complete == False``.

        Instances are immutable: ``degree_array`` and ``weights`` are read-only arrays.
    """
    def __init__(self, dimension, order, indices):
        self.dimension = int(dimension)
        self.order = int(order)
        self.indices = tuple(MultiIndex(i) for i in indices)
        for index in self.indices:
            if index.dimension != self.dimension:
                raise ValueError("Multi-index {} does not have dimension {}".format(index, self.dimension))
            if index.total > self.order:
                raise ValueError("Multi-index {} exceeds total order {}".format(index, self.order))
        self.cardinality = len(self.indices)

        degree_array = np.array([index.degrees for index in self.indices], dtype=np.int64)
        degree_array = degree_array.reshape(self.cardinality, self.dimension)
        degree_array.setflags(write=False)
        self.degree_array = degree_array

        weights = np.array([gradient_weight(index) for index in self.indices], dtype=np.float64)
        weights.setflags(write=False)
        self.weights = weights

    @property
    def complete(self):
        return self.cardinality == basis_cardinality(self.dimension, self.order)

    def __len__(self):
        return self.cardinality

    def __iter__(self):
        return iter(self.indices)

    def __getitem__(self, item):
        return self.indices[item]

    def __eq__(self, other):
        return (isinstance(other, Basis) and self.dimension == other.dimension
                and self.order == other.order and self.indices == other.indices)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self.dimension, self.order, self.indices))

    def __repr__(self):
        return "Basis(dimension={}, order={}, cardinality={})".format(
            self.dimension, self.order, self.cardinality)

    def position(self, index):
        """ Column of `index` in this basis, or ``None`` when it is not a member. """
        if not hasattr(self, '_positions'):
            self._positions = dict((idx, j) for j, idx in enumerate(self.indices))
        return self._positions.get(MultiIndex(index))

    def truncated(self, columns):
        """ Basis made of the first `columns` multi-indices (lower-order variables first). """
        columns = int(columns)
        if not 1 <= columns <= self.cardinality:
            raise ValueError("Invalid number of retained columns: {} - should be in [1, {}]".format(
                columns, self.cardinality))
        if columns == self.cardinality:
            return self
        return Basis(self.dimension, self.order, self.indices[:columns])

    def to_csv_rows(self):
        """ Header and rows ``(column, total, i_1, ..., i_d)`` describing the ordered basis. """
        header = ["column", "total"] + ["i{}".format(k + 1) for k in range(self.dimension)]
        rows = [[j, index.total] + list(index.degrees) for j, index in enumerate(self.indices)]
        return header, rows


def basis_cardinality(dimension, order):
    """ Number of multi-indices of `dimension` variables with total degree at most `order`. """
    return math.factorial(dimension + order) // (math.factorial(dimension) * math.factorial(order))


def _compositions(total, dimension):
    """ Yields the `dimension`-part compositions of `total`, descending lexicographically. """
    if dimension == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, dimension - 1):
            yield (head,) + tail


def enumerate_basis(dimension, order):
    """ Total-degree basis of `dimension` variables and order `order`.

        Multi-indices are sorted by ascending total degree; within one total degree they are
        sorted descending lexicographically so that variables with smaller indices contribute
        first, e.g. ``(1, 0, ...)`` precedes ``(0, 1, ...)``.
    """
    if int(dimension) != dimension or dimension < 1:
        raise ValueError("Invalid dimension: {} - should be an integer >= 1".format(dimension))
    if int(order) != order or order < 0:
        raise ValueError("Invalid order: {} - should be an integer >= 0".format(order))
    dimension, order = int(dimension), int(order)

    cardinality = basis_cardinality(dimension, order)
    if cardinality > MAX_CARDINALITY:
        raise OverflowError("Basis with d={} and p={} has {} functions, which overflows a 64-bit "
                            "integer".format(dimension, order, cardinality))

    indices = []
    for total in range(order + 1):
        indices.extend(_compositions(total, dimension))
    basis = Basis(dimension, order, indices)
    logger.debug("Enumerated {}".format(basis))
    return basis


def _check_finite(point):
    if not np.all(np.isfinite(point)):
        raise FloatingPointError("Hermite polynomials need finite evaluation points, got {}".format(point))


def hermite_table(max_order, points):
    r""" Orthonormal Hermite polynomials :math:`\psi_0, \ldots, \psi_{max\_order}` at `points`.

        Uses the normalized three-term recurrence
        :math:`\psi_{n+1} = (x \psi_n - \sqrt{n}\,\psi_{n-1}) / \sqrt{n+1}`.

        Returns an array of shape ``points.shape + (max_order + 1,)``.
    """
    points = np.asarray(points, dtype=np.float64)
    _check_finite(points)
    table = np.empty(points.shape + (max_order + 1,), dtype=np.float64)
    table[..., 0] = 1.0
    if max_order >= 1:
        table[..., 1] = points
    for n in range(1, max_order):
        table[..., n + 1] = (points * table[..., n] - math.sqrt(n) * table[..., n - 1]) / math.sqrt(n + 1)
    return table


def hermite_derivative_table(max_order, points):
    r""" Derivatives :math:`\psi_n' = \sqrt{n}\,\psi_{n-1}` for ``n = 0 .. max_order``. """
    table = hermite_table(max_order, points)
    derivatives = np.zeros_like(table)
    for n in range(1, max_order + 1):
        derivatives[..., n] = math.sqrt(n) * table[..., n - 1]
    return derivatives


def hermite_eval(order, point):
    r""" Orthonormal probabilists' Hermite polynomial :math:`\psi_{order}` at `point`.

        Normalized so that :math:`\mathbb{E}[\psi_n(\Xi)^2] = 1` for a standard Gaussian
        :math:`\Xi`. `point` may be a scalar or an array.
    """
    if int(order) != order or order < 0:
        raise ValueError("Invalid order: {} - should be an integer >= 0".format(order))
    order = int(order)
    values = hermite_table(order, point)[..., order]
    if np.ndim(values) == 0:
        return float(values)
    return values


def hermite_derivative(order, point):
    r""" Derivative :math:`\psi_{order}'(x) = \sqrt{order}\,\psi_{order-1}(x)`, zero for order 0. """
    if int(order) != order or order < 0:
        raise ValueError("Invalid order: {} - should be an integer >= 0".format(order))
    order = int(order)
    if order == 0:
        zeros = np.zeros_like(np.asarray(point, dtype=np.float64))
        return float(zeros) if zeros.ndim == 0 else zeros
    return math.sqrt(order) * hermite_eval(order - 1, point)


def _check_point(index, point):
    point = np.asarray(point, dtype=np.float64)
    if point.ndim != 1 or point.shape[0] != len(index):
        raise ValueError("Point of shape {} does not match multi-index dimension {}".format(
            point.shape, len(index)))
    return point


def eval_multivariate(index, point):
    """ Tensor-product basis function ``psi_index(point)`` (product of univariate factors). """
    index = MultiIndex(index)
    point = _check_point(index, point)
    value = 1.0
    for degree, coordinate in zip(index, point):
        value *= hermite_eval(degree, coordinate)
    return value


def eval_multivariate_partial(index, point, direction):
    """ Partial derivative of ``psi_index`` along variable `direction` (1-based).

        The factor of variable `direction` is replaced by its derivative, the other factors
        are kept.
    """
    index = MultiIndex(index)
    point = _check_point(index, point)
    if int(direction) != direction or not 1 <= direction <= len(index):
        raise ValueError("Invalid direction: {} - should be in [1, {}]".format(direction, len(index)))
    direction = int(direction) - 1
    value = 1.0
    for k, (degree, coordinate) in enumerate(zip(index, point)):
        if k == direction:
            value *= hermite_derivative(degree, coordinate)
        else:
            value *= hermite_eval(degree, coordinate)
    return value


def gradient_weight(index):
    r""" Gradient-normalization weight :math:`(1 + \sum_k i_k)^{-1/2}`, in (0, 1]. """
    return 1.0 / math.sqrt(1.0 + sum(index))


def _check_points(basis, points):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[None, :]
    if points.ndim != 2 or points.shape[1] != basis.dimension:
        raise ValueError("Points of shape {} do not match basis dimension {}".format(
            points.shape, basis.dimension))
    return points


def _chunks(basis, n_points):
    step = max(1, _EVALUATION_CHUNK_ENTRIES // max(1, basis.cardinality * basis.dimension))
    for start in range(0, n_points, step):
        yield slice(start, min(n_points, start + step))


def basis_matrix(basis, points):
    """ Matrix ``Psi`` with ``Psi[n, j] = psi_j(points[n])``, shape ``(N, P)``. """
    points = _check_points(basis, points)
    matrix = np.empty((points.shape[0], basis.cardinality), dtype=np.float64)
    variables = np.arange(basis.dimension)[None, :]
    for rows in _chunks(basis, points.shape[0]):
        table = hermite_table(basis.order, points[rows])
        factors = table[:, variables, basis.degree_array]
        matrix[rows] = np.prod(factors, axis=-1)
    return matrix


def basis_gradient_matrices(basis, points):
    """ Partial derivatives of every basis function, shape ``(N, d, P)``.

        ``out[n, k, j]`` is the derivative of ``psi_j`` along variable ``k`` at ``points[n]``.
    """
    points = _check_points(basis, points)
    out = np.empty((points.shape[0], basis.dimension, basis.cardinality), dtype=np.float64)
    variables = np.arange(basis.dimension)[None, :]
    for rows in _chunks(basis, points.shape[0]):
        table = hermite_table(basis.order, points[rows])
        derivatives = hermite_derivative_table(basis.order, points[rows])
        factors = table[:, variables, basis.degree_array]
        derivative_factors = derivatives[:, variables, basis.degree_array]
        for k in range(basis.dimension):
            replaced = factors.copy()
            replaced[..., k] = derivative_factors[..., k]
            out[rows, k, :] = np.prod(replaced, axis=-1)
    return out


def gauss_hermite_rule(n_points, dimension):
    """ Tensor Gauss-Hermite rule for the standard Gaussian measure on R^dimension.

        Returns ``(nodes, weights)`` with nodes of shape ``(n_points**dimension, dimension)``
        and weights summing to one. Exact for polynomials of degree ``2 * n_points - 1`` in
        each variable.
    """
    x, w = hermegauss(n_points)
    w = w / math.sqrt(2.0 * math.pi)
    nodes = np.array(list(product(*(x,) * dimension)), dtype=np.float64)
    weights = np.prod(np.array(list(product(*(w,) * dimension)), dtype=np.float64), axis=1)
    return nodes, weights
