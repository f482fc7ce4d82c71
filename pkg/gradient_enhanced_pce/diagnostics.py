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
""" Coherence parameters, restricted isometry constants and sample-count bounds of measurement systems. """

from __future__ import absolute_import, division, print_function

import logging
import math
from collections import namedtuple
from itertools import combinations, islice

import numpy as np
from scipy import linalg
from scipy.stats import chi2

from .configuration_utils import RunConfig
from .hermite_basis import basis_gradient_matrices, basis_matrix, enumerate_basis
from .measurement import GRADIENT_ENHANCED, STANDARD, assemble, draw_samples, gramian

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-2
MAX_EXHAUSTIVE_SUBSETS = 10 ** 6
DEFAULT_RANK_TOLERANCE = 1e-10
RADIAL_POINTS = 50
# Threshold on the restricted isometry constant that guarantees stable recovery.
DELTA_STAR = 3.0 / (4.0 + math.sqrt(6.0))

_SUBSET_BATCH = 4096
_CANDIDATE_BATCH = 1024


class TruncationSet(object):
    r""" Ball :math:`Q = \{\xi : \|\xi\|_2^2 \le (4 + \epsilon) p + 2\}` on which Hermite polynomials
        of total order ``p`` are uniformly bounded.
    """
    def __init__(self, order, epsilon=DEFAULT_EPSILON):
        if order < 0:
            raise ValueError("Invalid order: {} - should be >= 0".format(order))
        if not epsilon > 0:
            raise ValueError("Invalid epsilon: {} - should be > 0".format(epsilon))
        self.order = int(order)
        self.epsilon = float(epsilon)
        self.radius_sq = (4.0 + self.epsilon) * self.order + 2.0

    @property
    def radius(self):
        return math.sqrt(self.radius_sq)

    def contains(self, points):
        """ Membership of each row of `points` (or of a single point). """
        points = np.asarray(points, dtype=np.float64)
        return np.sum(points ** 2, axis=-1) <= self.radius_sq

    def probability(self, dimension):
        r""" :math:`P(\Xi \in Q)` for a ``dimension``-variate standard Gaussian (chi-squared law). """
        return float(chi2.cdf(self.radius_sq, dimension))

    def __repr__(self):
        return "TruncationSet(order={}, epsilon={}, radius_sq={})".format(self.order, self.epsilon, self.radius_sq)


class RicEstimate(namedtuple('RicEstimate', ['s', 'value', 'subsets_examined', 'exhaustive'])):
    """ Restricted isometry constant of order ``s``: exact when ``exhaustive``, a lower bound otherwise. """

    def to_dict(self):
        return {'s': int(self.s), 'value': float(self.value), 'subsets_examined': int(self.subsets_examined),
                'exhaustive': bool(self.exhaustive)}


def candidate_points(dimension, trunc, search_budget=2000, seed=0):
    """ Points of `trunc` used to search the suprema of the coherence parameters.

        Radial grids of :data:`RADIAL_POINTS` points from the origin to the boundary sphere along the
        coordinate axes, the two main diagonals and seeded random directions, filling `search_budget`.
    """
    if search_budget < RADIAL_POINTS:
        raise ValueError("Invalid search budget: {} - should be >= {}".format(search_budget, RADIAL_POINTS))
    n_directions = search_budget // RADIAL_POINTS
    eye = np.eye(dimension)
    diagonal = np.ones((1, dimension)) / math.sqrt(dimension)
    fixed = np.concatenate([eye, -eye, diagonal, -diagonal], axis=0)[:n_directions]
    rng = np.random.default_rng(seed)
    random = rng.standard_normal((n_directions - fixed.shape[0], dimension))
    random /= np.linalg.norm(random, axis=1, keepdims=True)
    directions = np.concatenate([fixed, random], axis=0)
    radii = np.linspace(0.0, trunc.radius, RADIAL_POINTS)
    points = (directions[:, None, :] * radii[None, :, None]).reshape(-1, dimension)
    # Rounding may push boundary points a hair outside Q.
    norms_sq = np.sum(points ** 2, axis=1)
    outside = norms_sq > trunc.radius_sq
    points[outside] *= np.sqrt(trunc.radius_sq / norms_sq[outside])[:, None]
    return points


def _batches(points):
    for start in range(0, points.shape[0], _CANDIDATE_BATCH):
        yield points[start:start + _CANDIDATE_BATCH]


def coherence_mu(basis, trunc, search_budget=2000, seed=0, points=None):
    r""" Lower bound on :math:`\mu_Q = \max_j \sup_{\xi \in Q} |\psi_j(\xi)|^2` over candidate points.

        `points` overrides the candidate set, so :func:`coherence_beta` can be evaluated on the same one.
    """
    if points is None:
        points = candidate_points(basis.dimension, trunc, search_budget, seed)
    value = 0.0
    for batch in _batches(points):
        value = max(value, float(np.max(basis_matrix(basis, batch) ** 2)))
    return value


def coherence_beta(basis, trunc, search_budget=2000, seed=0, points=None):
    r""" Lower bound on :math:`\beta_Q`, the largest squared norm over Q of a gradient-normalized column block.

        The block of column ``j`` stacks :math:`\psi_j` and its ``d`` partial derivatives, all scaled by the
        gradient weight of multi-index ``j``.
    """
    if points is None:
        points = candidate_points(basis.dimension, trunc, search_budget, seed)
    weights_sq = basis.weights ** 2
    value = 0.0
    for batch in _batches(points):
        norms = basis_matrix(basis, batch) ** 2 + np.sum(basis_gradient_matrices(basis, batch) ** 2, axis=1)
        value = max(value, float(np.max(norms * weights_sq[None, :])))
    return value


def _subset_deviations(gram, subsets):
    subsets = np.asarray(subsets, dtype=np.int64)
    blocks = gram[subsets[:, :, None], subsets[:, None, :]]
    eigenvalues = np.linalg.eigvalsh(blocks)
    return np.max(np.abs(eigenvalues - 1.0), axis=1)


def _check_sparsity(s, cardinality):
    if int(s) != s or not 1 <= s <= cardinality:
        raise ValueError("Invalid sparsity: {} - should be an integer in [1, {}]".format(s, cardinality))
    return int(s)


def ric_exhaustive(system, s):
    r""" Restricted isometry constant :math:`\delta_s` of ``matrix / sqrt(N)`` by enumerating every subset.

        Raises ``ValueError`` when there are more than :data:`MAX_EXHAUSTIVE_SUBSETS` subsets.
    """
    cardinality = system.n_columns
    s = _check_sparsity(s, cardinality)
    n_subsets = math.factorial(cardinality) // (math.factorial(s) * math.factorial(cardinality - s))
    if n_subsets > MAX_EXHAUSTIVE_SUBSETS:
        raise ValueError("C({}, {}) = {} subsets exceeds the exhaustive limit of {}; use ric_monte_carlo "
                         "instead".format(cardinality, s, n_subsets, MAX_EXHAUSTIVE_SUBSETS))
    gram = gramian(system)
    value = 0.0
    subsets = combinations(range(cardinality), s)
    while True:
        batch = list(islice(subsets, _SUBSET_BATCH))
        if not batch:
            break
        value = max(value, float(np.max(_subset_deviations(gram, batch))))
    return RicEstimate(s, value, n_subsets, True)


def ric_monte_carlo(system, s, trials, seed=0):
    """ Lower bound on the restricted isometry constant from `trials` random column subsets.

        Subsets are drawn sequentially from one seeded stream, so the first ``k`` trials are the same for
        any ``trials >= k`` and the estimate is nondecreasing in `trials`.
    """
    cardinality = system.n_columns
    s = _check_sparsity(s, cardinality)
    if trials < 1:
        raise ValueError("Invalid number of trials: {} - should be >= 1".format(trials))
    rng = np.random.default_rng(seed)
    subsets = np.stack([np.sort(rng.permutation(cardinality)[:s]) for _ in range(trials)])
    gram = gramian(system)
    value = 0.0
    for start in range(0, trials, _SUBSET_BATCH):
        value = max(value, float(np.max(_subset_deviations(gram, subsets[start:start + _SUBSET_BATCH]))))
    examined = len(set(map(tuple, subsets.tolist())))
    return RicEstimate(s, value, examined, False)


def nullspace_dim(system, tol=DEFAULT_RANK_TOLERANCE):
    """ ``P`` minus the numerical rank, counting singular values above ``tol * sigma_max``. """
    singular_values = linalg.svdvals(system.matrix)
    if singular_values.size == 0 or singular_values[0] == 0.0:
        return system.n_columns
    rank = int(np.count_nonzero(singular_values > tol * singular_values[0]))
    return system.n_columns - rank


def column_inner_products(system):
    """ Absolute inner products ``|(col_i, col_j)|`` of every column pair, with a zero diagonal. """
    products = np.abs(system.matrix.T.dot(system.matrix))
    np.fill_diagonal(products, 0.0)
    return products


def _lowered_columns(basis):
    """ For each variable ``k``, the column of ``i - e_k`` for every column ``i`` (-1 when ``i_k = 0``). """
    lowered = -np.ones((basis.dimension, basis.cardinality), dtype=np.int64)
    for j, index in enumerate(basis.indices):
        for k in range(basis.dimension):
            if index[k] > 0:
                degrees = list(index)
                degrees[k] -= 1
                position = basis.position(degrees)
                if position is None:
                    raise ValueError("Basis is not closed under lowering: {} lacks {}".format(basis, degrees))
                lowered[k, j] = position
    return lowered


def decomposed_inner_products(standard_system):
    r""" Column inner products of the weighted all-gradient system rebuilt from a standard system.

        On the same samples, the value and derivative rows give
        :math:`(\tilde\Psi_i, \tilde\Psi_j) = w_i w_j [(\Psi_i, \Psi_j) + \sum_k \sqrt{i_k j_k} (\Psi_{i-e_k}, \Psi_{j-e_k})]`
        because :math:`\partial_k \psi_i = \sqrt{i_k} \psi_{i-e_k}`. Returns the signed ``(P, P)`` matrix.
    """
    if standard_system.kind != STANDARD or standard_system.weights_applied:
        raise ValueError("Expected an unweighted standard system, got {}".format(standard_system))
    basis = standard_system.basis
    gram = standard_system.matrix.T.dot(standard_system.matrix)
    degrees = basis.degree_array.astype(np.float64)
    lowered = _lowered_columns(basis)
    decomposed = gram.copy()
    for k in range(basis.dimension):
        root = np.sqrt(degrees[:, k])
        active = lowered[k] >= 0
        shifted = np.zeros_like(gram)
        rows = np.flatnonzero(active)
        shifted[np.ix_(rows, rows)] = gram[np.ix_(lowered[k, rows], lowered[k, rows])]
        decomposed += np.outer(root, root) * shifted
    weights = basis.weights
    return decomposed * np.outer(weights, weights)


def inner_product_bound_chain(standard_system, enhanced_system):
    r""" Terms of the chain bounding the column inner products of a weighted all-gradient system by the largest
        off-diagonal inner product ``S`` of the standard system on the same samples:

        :math:`|(\tilde\Psi_i, \tilde\Psi_j)| \le w_i w_j (|(\Psi_i,\Psi_j)| + \sum_k \sqrt{i_k j_k} |(\Psi_{i-e_k},\Psi_{j-e_k})|)
        \le S\, w_i w_j (1 + \sum_k \sqrt{i_k j_k}) \le S`.

        Returns a dict of ``(P, P)`` arrays ``enhanced``, ``triangle`` and ``weighted_sup`` (zero diagonals) and the
        scalars ``standard_sup`` and ``enhanced_sup``.
    """
    basis = standard_system.basis
    if enhanced_system.kind != GRADIENT_ENHANCED or not enhanced_system.weights_applied:
        raise ValueError("Expected a weighted gradient-enhanced system, got {}".format(enhanced_system))
    if enhanced_system.basis != basis or enhanced_system.n_samples != standard_system.n_samples:
        raise ValueError("Systems should share basis and samples")
    if enhanced_system.n_rows != standard_system.n_rows * (basis.dimension + 1):
        raise ValueError("Expected every sample of the gradient-enhanced system to carry derivative rows")

    standard = column_inner_products(standard_system)
    enhanced = column_inner_products(enhanced_system)
    standard_sup = float(np.max(standard)) if standard.size > 1 else 0.0

    degrees = basis.degree_array.astype(np.float64)
    lowered = _lowered_columns(basis)
    triangle = standard.copy()
    cross = np.ones_like(standard)
    for k in range(basis.dimension):
        root = np.sqrt(degrees[:, k])
        rows = np.flatnonzero(lowered[k] >= 0)
        shifted = np.zeros_like(standard)
        shifted[np.ix_(rows, rows)] = standard[np.ix_(lowered[k, rows], lowered[k, rows])]
        triangle += np.outer(root, root) * shifted
        cross += np.outer(root, root)
    weights = np.outer(basis.weights, basis.weights)
    triangle *= weights
    weighted_sup = standard_sup * cross * weights
    np.fill_diagonal(triangle, 0.0)
    np.fill_diagonal(weighted_sup, 0.0)
    return {'enhanced': enhanced, 'triangle': triangle, 'weighted_sup': weighted_sup,
            'standard_sup': standard_sup, 'enhanced_sup': float(np.max(enhanced)) if enhanced.size > 1 else 0.0}


def weight_factor(i, j):
    r""" :math:`(1 + \sqrt{ij}) / \sqrt{(1+i)(1+j)}`, at most one by Cauchy-Schwarz. """
    return (1.0 + math.sqrt(i * j)) / math.sqrt((1.0 + i) * (1.0 + j))


def lowered_weight_factor(i, j):
    r""" :math:`(1 + \sqrt{(i-1)(j-1)}) / \sqrt{ij}` for ``i, j >= 1``, bounded by :func:`weight_factor`. """
    if i < 1 or j < 1:
        raise ValueError("Invalid orders ({}, {}) - should be >= 1".format(i, j))
    return (1.0 + math.sqrt((i - 1) * (j - 1))) / math.sqrt(i * j)


def _bound_terms(s, cardinality):
    return s + math.log(2.0 * s) + s * math.log(cardinality / s)


def sample_bound(s, P, mu, C_Q, delta_star, p_star, prob_Q, cap=10 ** 9):
    r""" Smallest ``N`` with
        :math:`N \delta_\star \ge (s\mu / C_Q)[s + \log 2s + s \log(P/s) - \log(P(Q)^N - p_\star)]`.

        Returns ``None`` (and logs a warning) when :math:`P(Q)^N \le p_\star` before the inequality holds or
        ``cap`` is reached.
    """
    if not 0.0 < delta_star < 1.0:
        raise ValueError("Invalid delta_star: {} - should be in (0, 1)".format(delta_star))
    if not 0.0 < p_star < 1.0:
        raise ValueError("Invalid p_star: {} - should be in (0, 1)".format(p_star))
    if not 0.0 < prob_Q <= 1.0:
        raise ValueError("Invalid prob_Q: {} - should be in (0, 1]".format(prob_Q))
    if not 1 <= s <= P:
        raise ValueError("Invalid sparsity: {} - should be in [1, {}]".format(s, P))
    if not (mu > 0 and C_Q > 0):
        raise ValueError("Invalid mu ({}) or C_Q ({}) - should be > 0".format(mu, C_Q))

    scale = s * mu / C_Q
    terms = _bound_terms(s, P)
    last = cap
    if prob_Q < 1.0:
        # P(Q)^N > p_star only for N < log(p_star) / log(P(Q)).
        last = min(cap, int(math.ceil(math.log(p_star) / math.log(prob_Q))))
    start = max(1, int(math.floor(scale * terms / delta_star)))
    chunk = 1 << 16
    while start <= last:
        n = np.arange(start, min(last, start + chunk - 1) + 1, dtype=np.float64)
        margin = np.power(prob_Q, n) - p_star
        with np.errstate(invalid='ignore', divide='ignore'):
            rhs = scale * (terms - np.log(margin))
        ok = (margin > 0) & (n * delta_star >= rhs)
        if np.any(ok):
            return int(n[np.argmax(ok)])
        start += chunk
    logger.warning("Sample bound unsatisfiable for s={}, P={}, mu={}, C_Q={}, delta_star={}, p_star={}, "
                   "prob_Q={} (searched up to N={})".format(s, P, mu, C_Q, delta_star, p_star, prob_Q, last))
    return None


def epsilon_q_estimate(basis, trunc, n=20000, seed=0, gradient=True):
    r""" Monte Carlo estimate of :math:`\epsilon_Q = \|E[X^T X \mid \xi \in Q] - I\|_2`.

        Uses :math:`E[X^T X 1_Q] = I - E[X^T X 1_{Q^c}]`, so only the rare points outside ``Q`` enter the
        estimate, and the exact :math:`P(Q)` from the chi-squared law. ``X`` is the weighted gradient block
        when `gradient`, the value row otherwise.

        Returns a dict with ``epsilon_q``, ``prob_q``, ``prob_q_estimate`` and ``n_outside``.
    """
    rng = np.random.default_rng(seed)
    points = rng.standard_normal((n, basis.dimension))
    outside = points[~trunc.contains(points)]
    tail = np.zeros((basis.cardinality, basis.cardinality))
    if outside.shape[0]:
        values = basis_matrix(basis, outside)
        tail += values.T.dot(values)
        if gradient:
            derivatives = basis_gradient_matrices(basis, outside)
            for k in range(basis.dimension):
                tail += derivatives[:, k, :].T.dot(derivatives[:, k, :])
            tail *= np.outer(basis.weights, basis.weights)
        tail /= n
    prob_q = trunc.probability(basis.dimension)
    conditional = (np.eye(basis.cardinality) - tail) / prob_q
    epsilon = float(np.linalg.norm(conditional - np.eye(basis.cardinality), 2))
    return {'epsilon_q': epsilon, 'prob_q': prob_q, 'prob_q_estimate': 1.0 - outside.shape[0] / n,
            'n_outside': int(outside.shape[0])}


class DiagnoseConfig(RunConfig):
    r"""
        :class:`~gradient_enhanced_pce.DiagnoseConfig` is the configuration of the ``diagnose`` subcommand.

        Arguments:
            dim: number of input variables ``d``.
            order: total order ``p`` of the basis.
            samples: number of samples ``N``.
            fraction: fraction of samples carrying derivative rows.
            kind: ``'gradient-enhanced'`` or ``'standard'``.
            sparsity: number of planted coefficients of the quantity of interest used as right-hand side.
            ric_sparsity: list of orders ``s`` of the restricted isometry constants to report.
            ric_trials: random subsets per order when enumeration is out of reach.
            budget: candidate points of the coherence search.
            epsilon: slack of the truncation set.
            epsilon_q_samples: Monte Carlo samples of the truncation bias estimate.
            save_system: also write the assembled system as ``system.csv``.
    """
    def __init__(self, **kwargs):
        self.dim = kwargs.pop('dim', 2)
        self.order = kwargs.pop('order', 3)
        self.samples = kwargs.pop('samples', 20)
        self.fraction = kwargs.pop('fraction', 1.0)
        self.kind = kwargs.pop('kind', GRADIENT_ENHANCED)
        self.sparsity = kwargs.pop('sparsity', 3)
        self.ric_sparsity = kwargs.pop('ric_sparsity', [1, 2, 3])
        self.ric_trials = kwargs.pop('ric_trials', 10000)
        self.budget = kwargs.pop('budget', 2000)
        self.epsilon = kwargs.pop('epsilon', DEFAULT_EPSILON)
        self.epsilon_q_samples = kwargs.pop('epsilon_q_samples', 20000)
        self.save_system = kwargs.pop('save_system', False)
        super(DiagnoseConfig, self).__init__(**kwargs)


def ric_estimate(system, s, trials, seed):
    """ Exhaustive restricted isometry constant when affordable, Monte Carlo lower bound otherwise. """
    try:
        return ric_exhaustive(system, s)
    except ValueError:
        logger.info("Falling back to {} random subsets for s={}".format(trials, s))
        return ric_monte_carlo(system, s, trials, seed)


def diagnose(config, evaluator=None):
    """ Builds the system described by `config` and returns ``(report, system)``.

        The report holds ``mu``, ``beta``, ``ric`` (one entry per order), ``nullspace_dim``,
        ``max_offdiag_inner_product``, ``epsilon_Q_estimate`` and ``prob_Q``.
    """
    basis = enumerate_basis(config.dim, config.order)
    trunc = TruncationSet(config.order, config.epsilon)
    samples = draw_samples(config.dim, config.samples, config.fraction, config.seed)
    if evaluator is None:
        evaluator = _zero_evaluator
    system = assemble(basis, samples, evaluator, kind=config.kind, apply_weights=config.kind == GRADIENT_ENHANCED)

    points = candidate_points(config.dim, trunc, config.budget, config.seed)
    mu = coherence_mu(basis, trunc, points=points)
    beta = coherence_beta(basis, trunc, points=points)
    logger.warning("Coherence values mu={:.6g} and beta={:.6g} are lower bounds from {} candidate points".format(
        mu, beta, points.shape[0]))

    ric = [ric_estimate(system, s, config.ric_trials, config.seed).to_dict()
           for s in config.ric_sparsity if s <= basis.cardinality]
    bias = epsilon_q_estimate(basis, trunc, config.epsilon_q_samples, config.seed,
                              gradient=config.kind == GRADIENT_ENHANCED)
    report = {
        'cardinality': basis.cardinality,
        'n_rows': system.n_rows,
        'mu': mu,
        'beta': beta,
        'coherence_candidates': int(points.shape[0]),
        'radius_sq': trunc.radius_sq,
        'ric': ric,
        'nullspace_dim': nullspace_dim(system),
        'max_offdiag_inner_product': float(np.max(column_inner_products(system))),
        'epsilon_Q_estimate': bias['epsilon_q'],
        'prob_Q': bias['prob_q'],
        'prob_Q_estimate': bias['prob_q_estimate'],
    }
    logger.info("Diagnosed {}".format(system))
    return report, system


def _zero_evaluator(point, need_gradient):
    return 0.0, (np.zeros(point.shape[0]) if need_gradient else None)
