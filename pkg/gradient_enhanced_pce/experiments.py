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
""" Recovery studies: planted sparse expansions, observation noise, equivalent sample sizes and RRMSE statistics. """

from __future__ import absolute_import, division, print_function

import logging
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .configuration_utils import RunConfig
from .file_utils import derive_seed, progress
from .hermite_basis import Basis, basis_gradient_matrices, basis_matrix, enumerate_basis
from .measurement import GRADIENT_ENHANCED, STANDARD, VALUE_ROLE, assemble, draw_samples, gradient_count
from .optimization import SolverOptions, cross_validate_delta, solve_bpdn, unweight

logger = logging.getLogger(__name__)

SUCCESS_RRMSE = 1e-4
NOISE_SUCCESS_FACTOR = 10.0
NOISE_TARGETS = ('none', 'values', 'derivatives', 'both')
CURVES_HEADER = ['curve', 'n_tilde', 'n_e', 'n_g', 'replications', 'success_probability', 'mean_rrmse', 'std_rrmse']


class ManufacturedProblem(object):
    r""" Expansion with planted coefficients ``c`` on ``basis``; ``sparsity`` of them are nonzero.

        Instances are evaluators: ``problem(point, need_gradient)`` returns the value and, when asked, the
        gradient of :math:`u = \sum_j c_j \psi_j`.
    """
    def __init__(self, basis, planted, sparsity, seed):
        planted = np.asarray(planted, dtype=np.float64)
        if planted.shape != (basis.cardinality,):
            raise ValueError("Expected {} planted coefficients, got shape {}".format(basis.cardinality, planted.shape))
        planted.setflags(write=False)
        self.basis = basis
        self.planted = planted
        self.sparsity = int(sparsity)
        self.seed = seed
        self.support = np.flatnonzero(planted)
        self._support_basis = None
        if self.support.size:
            self._support_basis = Basis(basis.dimension, basis.order, [basis.indices[j] for j in self.support])

    def __call__(self, point, need_gradient=True):
        value, gradient = evaluate_planted(self, point)
        return value, (gradient if need_gradient else None)

    def __repr__(self):
        return "ManufacturedProblem(basis={}, sparsity={}, seed={})".format(self.basis, self.sparsity, self.seed)


def manufacture(basis, sparsity, seed):
    """ Draws ``P`` standard Gaussian coefficients and keeps the `sparsity` largest in magnitude. """
    if not 0 <= sparsity <= basis.cardinality:
        raise ValueError("Invalid sparsity: {} - should be in [0, {}]".format(sparsity, basis.cardinality))
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal(basis.cardinality)
    keep = np.argsort(-np.abs(draws), kind='stable')[:sparsity]
    planted = np.zeros(basis.cardinality)
    planted[keep] = draws[keep]
    return ManufacturedProblem(basis, planted, sparsity, seed)


def evaluate_planted(problem, point):
    """ Value and gradient (``d`` partial derivatives) of the planted expansion at `point`. """
    point = np.asarray(point, dtype=np.float64).reshape(-1)
    d = problem.basis.dimension
    if point.shape[0] != d:
        raise ValueError("Point of dimension {} does not match problem dimension {}".format(point.shape[0], d))
    if problem._support_basis is None:
        return 0.0, np.zeros(d)
    coefficients = problem.planted[problem.support]
    value = float(basis_matrix(problem._support_basis, point).dot(coefficients)[0])
    gradient = basis_gradient_matrices(problem._support_basis, point)[0].dot(coefficients)
    return value, gradient


def apply_noise(value_or_derivative, variance, rng):
    r""" Multiplies by :math:`1 + \epsilon`, :math:`\epsilon \sim N(0, variance)`, independently per entry. """
    if variance < 0.0:
        raise ValueError("Invalid noise variance: {} - should be >= 0.0".format(variance))
    x = np.asarray(value_or_derivative, dtype=np.float64)
    if variance == 0.0:
        return float(x) if x.ndim == 0 else x.copy()
    noisy = x * (1.0 + math.sqrt(variance) * rng.standard_normal(x.shape))
    return float(noisy) if noisy.ndim == 0 else noisy


class NoiseConfig(object):
    """ Multiplicative observation noise of a given `variance` on the rows selected by `target`:
        ``'none'``, ``'values'``, ``'derivatives'`` or ``'both'``.
    """
    def __init__(self, variance=0.0, target='none'):
        if variance < 0.0:
            raise ValueError("Invalid noise variance: {} - should be >= 0.0".format(variance))
        if target not in NOISE_TARGETS:
            raise ValueError("Invalid noise target: {} - should be one of {}".format(target, ', '.join(NOISE_TARGETS)))
        self.variance = float(variance)
        self.target = target

    @property
    def active(self):
        return self.variance > 0.0 and self.target != 'none'

    def row_mask(self, row_map):
        roles = np.asarray(row_map)[:, 1]
        if self.target == 'values':
            return roles == VALUE_ROLE
        if self.target == 'derivatives':
            return roles != VALUE_ROLE
        if self.target == 'both':
            return np.ones(roles.shape[0], dtype=bool)
        return np.zeros(roles.shape[0], dtype=bool)

    def success_rrmse(self):
        """ RRMSE below which a recovery counts as a success: :data:`SUCCESS_RRMSE`, or ten noise standard
            deviations when that is larger.
        """
        if not self.active:
            return SUCCESS_RRMSE
        return max(SUCCESS_RRMSE, NOISE_SUCCESS_FACTOR * math.sqrt(self.variance))

    def to_dict(self):
        return {'variance': self.variance, 'target': self.target}

    def __repr__(self):
        return "NoiseConfig(variance={}, target={})".format(self.variance, self.target)


def perturb_system(system, noise, rng):
    """ Applies `noise` to the observations of `system`. One factor is drawn per row, in row order, and used
        only on the targeted rows, so the draws do not depend on the target.
    """
    if not noise.active:
        return system
    noisy = apply_noise(system.rhs, noise.variance, rng)
    rhs = np.where(noise.row_mask(system.row_map), noisy, system.rhs)
    return system.with_rhs(rhs)


class CostModel(object):
    r""" Cost of ``n_e`` value-only and ``n_g`` gradient-bearing samples when a gradient sample costs ``nu``
        value samples: equivalent size :math:`\tilde N = N_e + \nu N_g`.
    """
    def __init__(self, nu, n_e=0, n_g=0):
        if not nu > 0.0:
            raise ValueError("Invalid cost ratio nu: {} - should be > 0.0".format(nu))
        self.nu = float(nu)
        self.n_e = int(n_e)
        self.n_g = int(n_g)

    @property
    def n_samples(self):
        return self.n_e + self.n_g

    @property
    def equivalent_size(self):
        return self.n_e + self.nu * self.n_g

    def __repr__(self):
        return "CostModel(nu={}, n_e={}, n_g={})".format(self.nu, self.n_e, self.n_g)


def split_equivalent_size(n_tilde, gradient_fraction, nu):
    """ Largest ``N`` with ``N_g = round(fraction N)``, ``N_e = N - N_g`` and ``N_e + nu N_g <= n_tilde``. """
    if not 0.0 <= gradient_fraction <= 1.0:
        raise ValueError("Invalid gradient fraction: {} - should be in [0, 1]".format(gradient_fraction))
    cost = CostModel(nu)

    def _cost(n):
        n_g = gradient_count(n, gradient_fraction)
        return (n - n_g) + cost.nu * n_g

    # The cost grows by 1 or nu with each sample.
    n = int(math.floor(n_tilde / max(1.0, cost.nu)))
    while _cost(n + 1) <= n_tilde:
        n += 1
    while n > 0 and _cost(n) > n_tilde:
        n -= 1
    if n < 1:
        raise ValueError("Equivalent size {} buys no sample with fraction {} and nu {}".format(
            n_tilde, gradient_fraction, nu))
    n_g = gradient_count(n, gradient_fraction)
    return CostModel(nu, n - n_g, n_g)


def rrmse(estimate, reference):
    """ Relative root-mean-square error ``||estimate - reference|| / ||reference||`` (absolute for a zero reference). """
    error = float(np.linalg.norm(np.asarray(estimate) - np.asarray(reference)))
    scale = float(np.linalg.norm(reference))
    return error / scale if scale > 0.0 else error


class ExperimentReport(object):
    r""" One recovery curve: for each equivalent size of the grid, the outcomes of every replication and their
        statistics. ``success`` is convergence with an RRMSE below ``success_rrmse``, :data:`SUCCESS_RRMSE` unless the
        study sets a noise-level threshold.
    """
    def __init__(self, label, gradient_fraction, nu, noise, sparsity=None, config=None, success_rrmse=SUCCESS_RRMSE):
        self.label = label
        self.success_rrmse = float(success_rrmse)
        self.gradient_fraction = float(gradient_fraction)
        self.nu = float(nu)
        self.noise = noise
        self.sparsity = sparsity
        self.config = config
        self.points = []
        self.coefficients = None
        self.reference_validation_error = None

    def add_point(self, n_tilde, cost, outcomes):
        errors = np.array([outcome['rrmse'] for outcome in outcomes])
        successes = sum(1 for outcome in outcomes if outcome['success'])
        converged = sum(1 for outcome in outcomes if outcome['converged'])
        point = {
            'n_tilde': n_tilde,
            'n_e': cost.n_e,
            'n_g': cost.n_g,
            'replications': len(outcomes),
            'successes': successes,
            'converged': converged,
            'success_probability': successes / len(outcomes) if outcomes else 0.0,
            'mean_rrmse': float(np.mean(errors)) if outcomes else float('nan'),
            'std_rrmse': float(np.std(errors)) if outcomes else float('nan'),
            'rrmse': errors.tolist(),
            'delta': [outcome['delta'] for outcome in outcomes],
        }
        self.points.append(point)
        return point

    def success_probabilities(self):
        return [point['success_probability'] for point in self.points]

    def mean_rrmse(self):
        return [point['mean_rrmse'] for point in self.points]

    def to_dict(self):
        output = {'label': self.label, 'gradient_fraction': self.gradient_fraction, 'nu': self.nu,
                  'noise': self.noise.to_dict(), 'sparsity': self.sparsity, 'success_rrmse': self.success_rrmse,
                  'points': self.points}
        if self.config is not None:
            output['config'] = self.config
        if self.reference_validation_error is not None:
            output['reference_validation_error'] = self.reference_validation_error
        return output

    def csv_rows(self):
        return [[self.label, point['n_tilde'], point['n_e'], point['n_g'], point['replications'],
                 point['success_probability'], point['mean_rrmse'], point['std_rrmse']] for point in self.points]


def _recovery_job(job):
    (basis, evaluator, reference, counts, fraction, noise, seeds, folds, options, success_rrmse) = job
    n = counts.n_samples
    samples = draw_samples(basis.dimension, n, fraction, seeds['samples'])
    kind = GRADIENT_ENHANCED if samples.n_gradient > 0 else STANDARD
    system = assemble(basis, samples, evaluator, kind=kind, apply_weights=kind == GRADIENT_ENHANCED)
    system = perturb_system(system, noise, np.random.default_rng(seeds['noise']))
    n_folds = min(folds, system.n_samples)
    if n_folds >= 2:
        delta = cross_validate_delta(system, n_folds, None, seeds['cv'], options).chosen_delta
    else:
        delta = 0.0
    solution = solve_bpdn(system, delta, options)
    coefficients = unweight(solution, basis)
    error = rrmse(coefficients, reference)
    return {'rrmse': error, 'converged': solution.converged, 'delta': solution.delta_used,
            'success': solution.converged and error < success_rrmse, 'coefficients': coefficients}


def replication_seeds(seed, grid_index, replication):
    """ Seeds of one replication; they depend on the grid point and replication only, so every curve of a study
        sees the same sample points at a given equivalent size.
    """
    return dict((stream, derive_seed(seed, '{}:{}'.format(stream, grid_index), replication))
                for stream in ('samples', 'noise', 'cv'))


def _map(function, jobs, workers, desc):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(progress(executor.map(function, jobs), desc=desc, total=len(jobs)))
    return [function(job) for job in progress(jobs, desc=desc, total=len(jobs))]


def run_study(basis, evaluator, reference, cost, n_grid, gradient_fraction, noise_config, replications, seed,
              folds=4, options=None, workers=1, label=None, sparsity=None, keep_coefficients=None,
              success_rrmse=SUCCESS_RRMSE):
    """ Recovery curve of `evaluator` against the `reference` coefficients on `basis`.

        For each equivalent size in `n_grid` and each replication: fresh samples, assembly (weighted when some
        sample carries derivatives), noise, cross-validated tolerance, :func:`solve_bpdn`, and the RRMSE of the
        unweighted coefficients. Results are ordered by grid point and replication whatever `workers` is.

        `keep_coefficients`, an equivalent size of the grid, stores the recovered coefficients of its first
        replication in the report as ``coefficients``.
        `success_rrmse` is the RRMSE below which a converged replication counts as a success; noisy studies
        raise it to the scale of the noise.
    """
    nu = cost.nu if isinstance(cost, CostModel) else float(cost)
    if replications < 1:
        raise ValueError("Invalid number of replications: {} - should be >= 1".format(replications))
    if options is None:
        options = SolverOptions()
    if noise_config is None:
        noise_config = NoiseConfig()
    if label is None:
        label = 'standard' if gradient_fraction == 0.0 else 'gradient-{:g}'.format(100.0 * gradient_fraction)
    report = ExperimentReport(label, gradient_fraction, nu, noise_config, sparsity, success_rrmse=success_rrmse)

    jobs, splits = [], []
    for g, n_tilde in enumerate(n_grid):
        counts = split_equivalent_size(n_tilde, gradient_fraction, nu)
        splits.append(counts)
        for r in range(replications):
            jobs.append((basis, evaluator, reference, counts, gradient_fraction, noise_config,
                         replication_seeds(seed, g, r), folds, options, success_rrmse))
    outcomes = _map(_recovery_job, jobs, workers, label)

    for g, n_tilde in enumerate(n_grid):
        block = outcomes[g * replications:(g + 1) * replications]
        failed = sum(1 for outcome in block if not outcome['converged'])
        if failed:
            logger.warning("{}: {} of {} solves did not converge at N~={} and count as failures".format(
                label, failed, replications, n_tilde))
        if keep_coefficients is not None and n_tilde == keep_coefficients:
            report.coefficients = block[0]['coefficients']
        point = report.add_point(n_tilde, splits[g], block)
        logger.info("{}: N~={} (N_e={}, N_g={}) success={:.2f} mean RRMSE={:.3e}".format(
            label, n_tilde, point['n_e'], point['n_g'], point['success_probability'], point['mean_rrmse']))
    return report


def run_recovery_study(problem, cost, n_grid, gradient_fraction, noise_config, replications, seed, **kwargs):
    """ Recovery curve of a :class:`ManufacturedProblem`, with RRMSE measured against the planted coefficients.
        Keyword arguments are passed to :func:`run_study`.
    """
    kwargs.setdefault('sparsity', problem.sparsity)
    return run_study(problem.basis, problem, problem.planted, cost, n_grid, gradient_fraction, noise_config,
                     replications, seed, **kwargs)


def curve_noise(noise, gradient_fraction):
    """ Noise of one curve: the standard curve has no derivative rows, so any active noise lands on its values. """
    if gradient_fraction == 0.0 and noise.active:
        return NoiseConfig(noise.variance, 'values')
    return noise


def study_fractions(fractions):
    """ Sorted distinct gradient fractions, always including the standard curve (fraction 0). """
    return sorted(set([0.0] + [float(fraction) for fraction in fractions]))


class ManufacturedConfig(RunConfig):
    r"""
        :class:`~gradient_enhanced_pce.ManufacturedConfig` is the configuration of ``experiment manufactured``.

        Arguments:
            dim: number of input variables ``d``.
            order: total order ``p`` of the basis.
            sparsity: list of numbers of planted coefficients; one family of curves per entry.
            nu: cost of a gradient sample relative to a value sample.
            fraction: list of gradient fractions; the standard curve is always added.
            noise_variance: variance of the multiplicative noise.
            noise_target: ``'none'``, ``'values'``, ``'derivatives'`` or ``'both'``.
            n_grid: equivalent sample sizes.
            reps: replications per equivalent size.
            folds: cross-validation folds.
            solver: ``'spgl1'`` or ``'admm'``.
            full_scale: use the full-scale problem of :data:`FULL_SCALE_OVERRIDES`.
    """
    def __init__(self, **kwargs):
        self.dim = kwargs.pop('dim', 8)
        self.order = kwargs.pop('order', 3)
        self.sparsity = kwargs.pop('sparsity', [10])
        self.nu = kwargs.pop('nu', 2.0)
        self.fraction = kwargs.pop('fraction', [1.0])
        self.noise_variance = kwargs.pop('noise_variance', 0.0)
        self.noise_target = kwargs.pop('noise_target', 'both')
        self.n_grid = kwargs.pop('n_grid', [30, 50, 70, 90, 120, 165, 250])
        self.reps = kwargs.pop('reps', 100)
        self.folds = kwargs.pop('folds', 4)
        self.solver = kwargs.pop('solver', 'spgl1')
        self.full_scale = kwargs.pop('full_scale', False)
        super(ManufacturedConfig, self).__init__(**kwargs)


FULL_SCALE_OVERRIDES = {'dim': 25, 'order': 3, 'sparsity': [50, 150],
                        'n_grid': [250, 500, 750, 1000, 1250, 1500, 2000, 3000]}


def run_manufactured_study(config, workers=1):
    """ Every curve requested by a :class:`ManufacturedConfig`: for each sparsity level, one curve per gradient
        fraction (standard first). Returns the list of :class:`ExperimentReport`.
    """
    if config.full_scale:
        logger.warning("Full-scale configuration selected (d={}, p={}, sparsity {}); expect long run times".format(
            config.dim, config.order, config.sparsity))
    basis = enumerate_basis(config.dim, config.order)
    logger.info("Manufactured study on {}".format(basis))
    noise = NoiseConfig(config.noise_variance, config.noise_target if config.noise_variance > 0.0 else 'none')
    options = SolverOptions(method=config.solver)
    reports = []
    for sparsity in config.sparsity:
        problem = manufacture(basis, sparsity, derive_seed(config.seed, 'planted', sparsity))
        for fraction in study_fractions(config.fraction):
            label = 'standard' if fraction == 0.0 else 'gradient-{:g}'.format(100.0 * fraction)
            if len(config.sparsity) > 1:
                label = '{}-s{}'.format(label, sparsity)
            reports.append(run_recovery_study(problem, CostModel(config.nu), config.n_grid, fraction,
                                              curve_noise(noise, fraction), config.reps, config.seed,
                                              folds=config.folds, options=options, workers=workers, label=label,
                                              success_rrmse=noise.success_rrmse()))
    return reports
