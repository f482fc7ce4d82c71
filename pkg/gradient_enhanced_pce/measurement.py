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
"""Random inputs, standard and gradient-enhanced measurement systems and their Gramian."""

from __future__ import absolute_import, division, print_function

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from io import open

import numpy as np

from .hermite_basis import basis_gradient_matrices, basis_matrix, enumerate_basis

logger = logging.getLogger(__name__)

STANDARD = 'standard'
GRADIENT_ENHANCED = 'gradient-enhanced'
SYSTEM_KINDS = (STANDARD, GRADIENT_ENHANCED)

# Row roles in ``MeasurementSystem.row_map``: 0 is the value row, k is the derivative along variable k.
VALUE_ROLE = 0


def _read_only(array):
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


class SampleSet(object):
    r""" Realizations :math:`\xi^{(1)}, \ldots, \xi^{(N)}` of the standard Gaussian input.

        ``points`` is an ``(N, d)`` array, ``with_gradient`` a boolean flag per sample telling
        whether derivative observations are taken there, ``seed`` the seed that produced it
        (``None`` for externally supplied points).
    """
    def __init__(self, points, with_gradient=None, seed=None):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 1:
            raise ValueError("Sample points should be a non-empty (N, d) array, got shape {}".format(points.shape))
        if with_gradient is None:
            with_gradient = np.zeros(points.shape[0], dtype=bool)
        with_gradient = np.asarray(with_gradient, dtype=bool)
        if with_gradient.shape != (points.shape[0],):
            raise ValueError("Expected {} gradient flags, got shape {}".format(points.shape[0], with_gradient.shape))
        self.points = _read_only(points)
        self.with_gradient = _read_only(with_gradient)
        self.seed = seed

    @property
    def n_samples(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.points.shape[1]

    @property
    def n_gradient(self):
        return int(np.count_nonzero(self.with_gradient))

    def __len__(self):
        return self.n_samples

    def __repr__(self):
        return "SampleSet(n_samples={}, dimension={}, n_gradient={}, seed={})".format(
            self.n_samples, self.dimension, self.n_gradient, self.seed)


def gradient_count(n, gradient_fraction):
    """ Number of gradient-flagged samples among `n`, rounding halves up. """
    return int(math.floor(gradient_fraction * n + 0.5))


def draw_samples(d, n, gradient_fraction, seed):
    """ Draws `n` independent standard Gaussian points in `d` dimensions.

        ``round(gradient_fraction * n)`` samples are flagged for derivative observations: the
        first ones of a seeded shuffle. The generator is numpy's PCG64 seeded with `seed`.
    """
    if n < 1:
        raise ValueError("Invalid number of samples: {} - should be >= 1".format(n))
    if d < 1:
        raise ValueError("Invalid dimension: {} - should be >= 1".format(d))
    if not 0.0 <= gradient_fraction <= 1.0:
        raise ValueError("Invalid gradient fraction: {} - should be in [0, 1]".format(gradient_fraction))
    rng = np.random.default_rng(seed)
    points = rng.standard_normal((n, d))
    flags = np.zeros(n, dtype=bool)
    flags[rng.permutation(n)[:gradient_count(n, gradient_fraction)]] = True
    return SampleSet(points, flags, seed)


class MeasurementSystem(object):
    r""" Assembled linear system ``matrix . c ~= rhs`` for the expansion coefficients.

        Attributes:
            ``matrix``: ``(R, P)`` array, columns scaled by the gradient weights when ``weights_applied``.
            ``rhs``: ``(R,)`` observations aligned with the rows.
            ``kind``: ``'standard'`` or ``'gradient-enhanced'``.
            ``weights_applied``: whether the columns carry the gradient-normalization weights.
            ``row_map``: ``(R, 2)`` integer array of ``(sample id, role)``, role 0 for a value row and
                ``k`` for the derivative along variable ``k`` (1-based).
            ``n_samples``: number of distinct samples, the normalization of the Gramian.
            ``basis``: the :class:`~gradient_enhanced_pce.hermite_basis.Basis` of the columns.
    """
    def __init__(self, matrix, rhs, kind, weights_applied, row_map, n_samples, basis):
        if kind not in SYSTEM_KINDS:
            raise ValueError("Invalid system kind: {} - should be one of {}".format(kind, ', '.join(SYSTEM_KINDS)))
        matrix = np.asarray(matrix, dtype=np.float64)
        rhs = np.asarray(rhs, dtype=np.float64)
        row_map = np.asarray(row_map, dtype=np.int64).reshape(-1, 2)
        if matrix.ndim != 2 or matrix.shape[1] != basis.cardinality:
            raise ValueError("Matrix of shape {} does not match {} basis columns".format(matrix.shape, basis.cardinality))
        if rhs.shape != (matrix.shape[0],) or row_map.shape[0] != matrix.shape[0]:
            raise ValueError("Matrix rows ({}), rhs shape {} and row map rows ({}) should agree".format(
                matrix.shape[0], rhs.shape, row_map.shape[0]))
        if not (np.all(np.isfinite(matrix)) and np.all(np.isfinite(rhs))):
            raise FloatingPointError("Measurement system contains non-finite entries")
        self.matrix = _read_only(matrix)
        self.rhs = _read_only(rhs)
        self.kind = kind
        self.weights_applied = bool(weights_applied)
        self.row_map = _read_only(row_map)
        self.n_samples = int(n_samples)
        self.basis = basis

    @property
    def n_rows(self):
        return self.matrix.shape[0]

    @property
    def n_columns(self):
        return self.matrix.shape[1]

    @property
    def weights(self):
        """ Column scaling carried by ``matrix``: the gradient weights, or ones. """
        if self.weights_applied:
            return self.basis.weights
        return np.ones(self.basis.cardinality)

    @property
    def sample_ids(self):
        """ Distinct sample ids in row order. """
        ids = self.row_map[:, 0]
        _, first = np.unique(ids, return_index=True)
        return ids[np.sort(first)]

    def value_rows(self):
        """ Boolean mask of the value rows. """
        return self.row_map[:, 1] == VALUE_ROLE

    def select_samples(self, sample_ids):
        """ Sub-system made of every row of the given samples, keeping row order. """
        sample_ids = np.asarray(sample_ids, dtype=np.int64)
        mask = np.isin(self.row_map[:, 0], sample_ids)
        return MeasurementSystem(self.matrix[mask], self.rhs[mask], self.kind, self.weights_applied,
                                 self.row_map[mask], len(np.unique(sample_ids)), self.basis)

    def with_rhs(self, rhs):
        """ Same matrix with new observations (e.g. perturbed by noise). """
        return MeasurementSystem(self.matrix, rhs, self.kind, self.weights_applied, self.row_map,
                                 self.n_samples, self.basis)

    def __repr__(self):
        return "MeasurementSystem(kind={}, rows={}, columns={}, n_samples={}, weights_applied={})".format(
            self.kind, self.n_rows, self.n_columns, self.n_samples, self.weights_applied)


def _evaluate_sample(job):
    evaluator, sample_id, point, need_gradient = job
    try:
        value, gradient = evaluator(point, need_gradient)
    except Exception as exc:
        raise RuntimeError("Evaluator failed on sample {}: {}".format(sample_id, exc)) from exc
    if need_gradient:
        if gradient is None:
            raise RuntimeError("Evaluator returned no gradient for flagged sample {}".format(sample_id))
        gradient = np.asarray(gradient, dtype=np.float64).reshape(-1)
        if gradient.shape[0] != point.shape[0]:
            raise RuntimeError("Evaluator returned a gradient of length {} for sample {} in dimension {}".format(
                gradient.shape[0], sample_id, point.shape[0]))
    else:
        gradient = None
    return float(value), gradient


def _evaluate_samples(evaluator, points, flags, workers):
    jobs = [(evaluator, i, points[i], bool(flags[i])) for i in range(points.shape[0])]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(_evaluate_sample, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_evaluate_sample(job) for job in jobs]


def assemble(basis, samples, evaluator, kind=GRADIENT_ENHANCED, apply_weights=True, workers=1):
    r""" Assembles the measurement system of `samples` for `basis`.

        Parameters:
            basis: :class:`~gradient_enhanced_pce.hermite_basis.Basis` of the expansion.
            samples: :class:`SampleSet`; in a gradient-enhanced system flagged samples contribute their value
                row followed by one row per partial derivative, the other samples their value row only.
            evaluator: callable ``evaluator(point, need_gradient) -> (value, gradient)`` returning the quantity
                of interest and, when ``need_gradient`` is true, its ``d`` partial derivatives.
            kind: ``'standard'`` (values only, every flag ignored) or ``'gradient-enhanced'``.
            apply_weights: scale column ``j`` by the gradient weight of multi-index ``j``.
            workers: number of processes evaluating samples; results do not depend on it.

        Evaluator exceptions are re-raised as ``RuntimeError`` naming the sample; non-finite entries raise
        ``FloatingPointError``.
    """
    if kind not in SYSTEM_KINDS:
        raise ValueError("Invalid system kind: {} - should be one of {}".format(kind, ', '.join(SYSTEM_KINDS)))
    if samples.dimension != basis.dimension:
        raise ValueError("Samples of dimension {} do not match basis dimension {}".format(
            samples.dimension, basis.dimension))
    d = basis.dimension
    points = samples.points
    flags = samples.with_gradient if kind == GRADIENT_ENHANCED else np.zeros(samples.n_samples, dtype=bool)

    values = basis_matrix(basis, points)
    flagged = np.flatnonzero(flags)
    derivatives = basis_gradient_matrices(basis, points[flagged]) if flagged.size else None
    observations = _evaluate_samples(evaluator, points, flags, workers)

    n_rows = samples.n_samples + d * flagged.size
    matrix = np.empty((n_rows, basis.cardinality), dtype=np.float64)
    rhs = np.empty(n_rows, dtype=np.float64)
    row_map = np.empty((n_rows, 2), dtype=np.int64)
    row = 0
    block = 0
    for i in range(samples.n_samples):
        value, gradient = observations[i]
        matrix[row] = values[i]
        rhs[row] = value
        row_map[row] = (i, VALUE_ROLE)
        row += 1
        if flags[i]:
            matrix[row:row + d] = derivatives[block]
            rhs[row:row + d] = gradient
            row_map[row:row + d, 0] = i
            row_map[row:row + d, 1] = np.arange(1, d + 1)
            row += d
            block += 1

    if apply_weights:
        matrix *= basis.weights[None, :]
    if not np.all(np.isfinite(matrix)):
        raise FloatingPointError("Assembled measurement matrix contains non-finite entries")
    if not np.all(np.isfinite(rhs)):
        bad = row_map[np.flatnonzero(~np.isfinite(rhs))[0], 0]
        raise FloatingPointError("Evaluator returned a non-finite observation for sample {}".format(bad))

    system = MeasurementSystem(matrix, rhs, kind, apply_weights, row_map, samples.n_samples, basis)
    logger.debug("Assembled {}".format(system))
    return system


def gramian(system):
    r""" Gramian :math:`M = N^{-1} A^T A`, normalized by the number of distinct samples ``N``. """
    matrix = system.matrix
    gram = matrix.T.dot(matrix) / system.n_samples
    return 0.5 * (gram + gram.T)


def _metadata_line(pairs):
    return "# " + ",".join("{}={}".format(key, value) for key, value in pairs) + "\n"


def _parse_metadata(line):
    if not line.startswith('#'):
        raise ValueError("Expected a '# key=value,...' metadata line, got '{}'".format(line.strip()))
    metadata = {}
    for item in line[1:].strip().split(','):
        key, value = item.split('=', 1)
        metadata[key.strip()] = value.strip()
    return metadata


def save_system(system, path):
    """ Writes `system` as CSV.

        The first line is ``# dim=D,order=P,kind=K,weights_applied=true|false,n_samples=N``, then a header
        ``sample,role,rhs,c0,...`` and one line per row holding its ``row_map`` entry, observation and
        (already weighted) matrix entries.
    """
    basis = system.basis
    with open(path, "w", encoding='utf-8', newline='') as writer:
        writer.write(_metadata_line([('dim', basis.dimension), ('order', basis.order), ('kind', system.kind),
                                     ('weights_applied', str(system.weights_applied).lower()),
                                     ('n_samples', system.n_samples)]))
        csv_writer = csv.writer(writer, lineterminator='\n')
        csv_writer.writerow(['sample', 'role', 'rhs'] + ['c{}'.format(j) for j in range(system.n_columns)])
        for r in range(system.n_rows):
            csv_writer.writerow([int(system.row_map[r, 0]), int(system.row_map[r, 1]), repr(float(system.rhs[r]))]
                                + [repr(float(v)) for v in system.matrix[r]])
    logger.info("Saved {} to {}".format(system, path))
    return path


def load_system(path):
    """ Reads a system written by :func:`save_system` (or by an external tool using the same layout). """
    with open(path, "r", encoding='utf-8', newline='') as reader:
        metadata = _parse_metadata(reader.readline())
        rows = list(csv.reader(reader))
    header, rows = rows[0], [row for row in rows[1:] if row]
    n_columns = len(header) - 3
    basis = enumerate_basis(int(metadata['dim']), int(metadata['order']))
    if n_columns != basis.cardinality:
        basis = basis.truncated(n_columns)
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    weights_applied = metadata.get('weights_applied', 'false').lower() == 'true'
    row_map = data[:, :2].astype(np.int64)
    n_samples = int(metadata.get('n_samples', len(np.unique(row_map[:, 0]))))
    return MeasurementSystem(data[:, 3:], data[:, 2], metadata['kind'], weights_applied, row_map, n_samples, basis)


def save_samples(samples, path):
    """ Writes `samples` as CSV: ``# dim=D,n=N,seed=S`` then ``sample,with_gradient,x1,...,xd``. """
    with open(path, "w", encoding='utf-8', newline='') as writer:
        writer.write(_metadata_line([('dim', samples.dimension), ('n', samples.n_samples), ('seed', samples.seed)]))
        csv_writer = csv.writer(writer, lineterminator='\n')
        csv_writer.writerow(['sample', 'with_gradient'] + ['x{}'.format(k + 1) for k in range(samples.dimension)])
        for i in range(samples.n_samples):
            csv_writer.writerow([i, int(samples.with_gradient[i])] + [repr(float(x)) for x in samples.points[i]])
    return path


def load_samples(path):
    """ Reads a sample set written by :func:`save_samples`. """
    with open(path, "r", encoding='utf-8', newline='') as reader:
        metadata = _parse_metadata(reader.readline())
        rows = [row for row in csv.reader(reader)][1:]
    data = np.array([row for row in rows if row], dtype=np.float64)
    seed = metadata.get('seed')
    seed = None if seed in (None, 'None') else int(seed)
    return SampleSet(data[:, 2:], data[:, 1] != 0, seed)


def rows_for_samples(n_samples, n_gradient, dimension, kind=GRADIENT_ENHANCED):
    """ Row count ``N_e + N_g (d + 1)`` of a gradient-enhanced system, ``N`` of a standard one. """
    if kind == STANDARD:
        return n_samples
    return n_samples + dimension * n_gradient

