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
"""l1-minimization (basis pursuit denoising) with a cross-validated tolerance, and least squares."""

import logging
import math
from collections import namedtuple

import numpy as np
import torch
from scipy import linalg, optimize
from spgl1 import spg_bpdn

from .configuration_utils import RunConfig

logger = logging.getLogger(__name__)

SOLVER_METHODS = ('spgl1', 'admm')
FEASIBILITY_SLACK = 1e-6
# spgl1 exit codes that certify a solution of the constrained problem.
SPGL1_CONVERGED = (1, 2, 3, 4)
SPGL1_STATUS = {1: 'root found', 2: 'basis pursuit solution', 3: 'least-squares solution', 4: 'optimal',
                5: 'too many iterations', 6: 'line search error', 7: 'suboptimal basis pursuit solution',
                8: 'matrix-vector product limit', 9: 'active set unchanged'}


class SolverOptions(object):
    """ Options of :func:`solve_bpdn`.

    Parameters:
        method (str): ``'spgl1'`` (Pareto-curve root finding) or ``'admm'`` (operator splitting on the
            constrained problem). Default ``'spgl1'``.
        tol (float): relative optimality and residual tolerance. Default: 1e-8
        max_iter (int): iteration cap. Default: 100000
        rho (float): initial ADMM penalty, adapted by residual balancing. Default: 1.0
    """
    def __init__(self, method='spgl1', tol=1e-8, max_iter=100000, rho=1.0):
        if method not in SOLVER_METHODS:
            raise ValueError("Invalid solver method: {} - should be one of {}".format(method, ', '.join(SOLVER_METHODS)))
        if not tol > 0.0:
            raise ValueError("Invalid tolerance: {} - should be > 0.0".format(tol))
        if int(max_iter) != max_iter or max_iter < 1:
            raise ValueError("Invalid iteration cap: {} - should be an integer >= 1".format(max_iter))
        if not rho > 0.0:
            raise ValueError("Invalid rho: {} - should be > 0.0".format(rho))
        self.method = method
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.rho = float(rho)

    def __repr__(self):
        return "SolverOptions(method={}, tol={}, max_iter={}, rho={})".format(
            self.method, self.tol, self.max_iter, self.rho)


class SparseSolution(object):
    r""" Coefficients returned by a solver, with telemetry.

        ``coefficients`` are in the variable of the system: when ``weights_applied`` they multiply the weighted
        columns, and :func:`unweight` maps them to expansion coefficients.
    """
    def __init__(self, coefficients, delta_used, residual_norm, iterations, converged, method,
                 weights_applied=False, duality_gap=None):
        coefficients = np.asarray(coefficients, dtype=np.float64)
        if not np.all(np.isfinite(coefficients)):
            raise FloatingPointError("Solver {} produced non-finite coefficients".format(method))
        self.coefficients = coefficients
        self.delta_used = float(delta_used)
        self.residual_norm = float(residual_norm)
        self.iterations = int(iterations)
        self.converged = bool(converged)
        self.method = method
        self.weights_applied = bool(weights_applied)
        self.duality_gap = None if duality_gap is None else float(duality_gap)

    def l1_norm(self):
        return float(np.sum(np.abs(self.coefficients)))

    def to_dict(self):
        """ Telemetry without the coefficient vector. """
        return {'delta_used': self.delta_used, 'residual_norm': self.residual_norm, 'iterations': self.iterations,
                'converged': self.converged, 'method': self.method, 'weights_applied': self.weights_applied,
                'duality_gap': self.duality_gap, 'l1_norm': self.l1_norm(),
                'nonzeros': int(np.count_nonzero(self.coefficients))}

    def __repr__(self):
        return "SparseSolution(method={}, delta_used={:.3e}, residual_norm={:.3e}, iterations={}, converged={})".format(
            self.method, self.delta_used, self.residual_norm, self.iterations, self.converged)


CvReport = namedtuple('CvReport', ['candidate_deltas', 'validation_errors', 'chosen_delta', 'folds'])


def feasibility_bound(delta, rhs_norm, tol):
    """ Largest residual accepted for tolerance `delta`: ``delta (1 + 1e-6) + tol ||rhs||``. """
    return delta * (1.0 + FEASIBILITY_SLACK) + tol * rhs_norm


def _residual_norm(matrix, rhs, coefficients):
    return float(np.linalg.norm(rhs - matrix.dot(coefficients)))


class ResidualBallProjector(object):
    r""" Euclidean projection onto :math:`\{c : \|A c - b\|_2 \le \delta\}`.

        With the thin SVD :math:`A = U S V^T` the projection of ``v`` is
        :math:`v - V \mu S e / (1 + \mu S^2)`, :math:`e = S V^T v - U^T b`, where :math:`\mu \ge 0` solves
        :math:`\sum_i e_i^2 / (1 + \mu s_i^2)^2 + \|b_\perp\|^2 = \delta^2`. When :math:`\delta` is below the
        least-squares residual the limit :math:`\mu = \infty` (projection onto the least-squares solutions) is used.
        Computations are carried in float64 torch tensors.
    """
    def __init__(self, matrix, rhs, delta, rank_tol=1e-12):
        self.matrix = torch.as_tensor(np.asarray(matrix), dtype=torch.float64)
        self.rhs = torch.as_tensor(np.asarray(rhs), dtype=torch.float64)
        self.delta = float(delta)
        u, s, vh = torch.linalg.svd(self.matrix, full_matrices=False)
        keep = s > rank_tol * s[0] if s.numel() else s > 0
        self.u, self.s, self.v = u[:, keep], s[keep], vh[keep].T
        self.beta = self.u.T.mv(self.rhs)
        self.orthogonal_sq = max(0.0, float(self.rhs.dot(self.rhs) - self.beta.dot(self.beta)))

    def residual_norm(self, c):
        return float(torch.linalg.norm(self.matrix.mv(c) - self.rhs))

    def _phi(self, e_sq, mu):
        return float(torch.sum(e_sq / (1.0 + mu * self.s ** 2) ** 2)) + self.orthogonal_sq

    def _solve_mu(self, e_sq):
        target = self.delta ** 2
        lo, hi = 0.0, 1.0
        while self._phi(e_sq, hi) > target:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                return hi
        mu = lo
        for _ in range(100):
            phi = self._phi(e_sq, mu)
            if abs(phi - target) <= 1e-14 * max(target, 1e-300):
                break
            if phi > target:
                lo = mu
            else:
                hi = mu
            # Newton step on 1/sqrt(phi) - 1/delta, safeguarded by bisection.
            dphi = float(torch.sum(-2.0 * e_sq * self.s ** 2 / (1.0 + mu * self.s ** 2) ** 3))
            step = mu
            if dphi < 0.0:
                step = mu + 2.0 * phi * (1.0 - math.sqrt(phi / target)) / dphi
            mu = step if lo < step < hi else 0.5 * (lo + hi)
            if hi - lo <= 1e-15 * hi:
                break
        return mu

    def project(self, v):
        """ Projection of the float64 tensor `v`. """
        if self.residual_norm(v) <= self.delta:
            return v.clone()
        e = self.s * self.v.T.mv(v) - self.beta
        if self.delta ** 2 <= self.orthogonal_sq:
            return v - self.v.mv(e / self.s)
        mu = self._solve_mu(e ** 2)
        return v - self.v.mv(mu * self.s * e / (1.0 + mu * self.s ** 2))

    def project_numpy(self, v):
        return self.project(torch.as_tensor(np.asarray(v, dtype=np.float64))).numpy()

    def dual_certificate(self, y):
        """ Multiplier ``lambda`` with ``A^T lambda`` closest to `y`, scaled so that ``||A^T lambda||_inf <= 1``. """
        lam = self.u.mv(self.v.T.mv(y) / self.s)
        scale = float(torch.max(torch.abs(self.matrix.T.mv(lam)))) if lam.numel() else 0.0
        return lam / max(1.0, scale)


def _soft_threshold(v, threshold):
    return torch.sign(v) * torch.clamp(torch.abs(v) - threshold, min=0.0)


def _dual_feasible(matrix, multiplier):
    """ `multiplier` scaled so that ``||A^T lambda||_inf = 1``, unchanged when ``A^T lambda`` vanishes. """
    multiplier = np.asarray(multiplier, dtype=np.float64)
    scale = float(np.max(np.abs(matrix.T.dot(multiplier)))) if multiplier.size else 0.0
    return multiplier / scale if scale > 0.0 else multiplier


def duality_gap(matrix, rhs, delta, coefficients, multiplier):
    r""" Relative duality gap of `coefficients` certified by `multiplier`.

        The multiplier is scaled into the dual feasible set :math:`\|A^T\lambda\|_\infty \le 1` and the gap is
        :math:`|\|c\|_1 - \max(0, b^T\lambda - \delta\|\lambda\|_2)| / \max(1, \|c\|_1)`.
    """
    multiplier = _dual_feasible(matrix, multiplier)
    value = float(rhs.dot(multiplier)) - delta * float(np.linalg.norm(multiplier))
    l1 = float(np.sum(np.abs(coefficients)))
    return abs(l1 - max(0.0, value)) / max(1.0, l1)


def _basis_pursuit_multiplier(matrix, rhs):
    """ Solution of the dual linear program ``max b^T lambda`` s.t. ``||A^T lambda||_inf <= 1``, or None. """
    n_rows, n_columns = matrix.shape
    result = optimize.linprog(-rhs, A_ub=np.vstack([matrix.T, -matrix.T]), b_ub=np.ones(2 * n_columns),
                              bounds=[(None, None)] * n_rows, method='highs')
    if result.status != 0:
        logger.debug("Basis pursuit dual not solved: {}".format(result.message))
        return None
    return result.x


def _certify(matrix, rhs, delta, coefficients, multiplier, tol):
    """ Duality gap of `coefficients` and the multiplier attaining it. Equality-constrained problems fall back
        on the dual linear program when `multiplier` does not certify `tol`.
    """
    gap = duality_gap(matrix, rhs, delta, coefficients, multiplier)
    if gap > tol and delta == 0.0:
        exact = _basis_pursuit_multiplier(matrix, rhs)
        if exact is not None:
            exact_gap = duality_gap(matrix, rhs, delta, coefficients, exact)
            if exact_gap < gap:
                gap, multiplier = exact_gap, exact
    return gap, _dual_feasible(matrix, multiplier)


def _solve_admm(matrix, rhs, delta, options, start=None, multiplier=None):
    """ Scaled ADMM for min ||x||_1 + I(z in ball), x = z, with residual balancing of the penalty.

        Stops once the primal and dual residuals are within tolerance and the multiplier recovered from the
        scaled dual variable certifies a duality gap of at most ``options.tol``. `start` and `multiplier` warm
        start the primal and dual iterates.
    """
    projector = ResidualBallProjector(matrix, rhs, delta)
    n = matrix.shape[1]
    rho = options.rho
    z = torch.zeros(n, dtype=torch.float64) if start is None else torch.as_tensor(np.asarray(start, dtype=np.float64))
    z = projector.project(z)
    if multiplier is None:
        u = torch.zeros(n, dtype=torch.float64)
    else:
        u = -torch.as_tensor(matrix.T.dot(_dual_feasible(matrix, multiplier))) / rho
    x = z.clone()
    converged = False
    gap = None
    iteration = 0
    for iteration in range(1, options.max_iter + 1):
        x = _soft_threshold(z - u, 1.0 / rho)
        z_old = z
        z = projector.project(x + u)
        u = u + x - z
        primal = float(torch.linalg.norm(x - z))
        dual = rho * float(torch.linalg.norm(z - z_old))
        eps_primal = options.tol * (math.sqrt(n) + max(float(torch.linalg.norm(x)), float(torch.linalg.norm(z))))
        eps_dual = options.tol * (math.sqrt(n) + rho * float(torch.linalg.norm(u)))
        if primal <= eps_primal and dual <= eps_dual:
            gap = duality_gap(matrix, rhs, delta, z.numpy(), projector.dual_certificate(-rho * u).numpy())
            if gap <= options.tol:
                converged = True
                break
        if primal > 10.0 * dual:
            rho *= 2.0
            u = u / 2.0
        elif dual > 10.0 * primal:
            rho /= 2.0
            u = u * 2.0

    lam = projector.dual_certificate(-rho * u).numpy()
    if gap is None or not converged:
        gap = duality_gap(matrix, rhs, delta, z.numpy(), lam)
    return z.numpy(), iteration, converged, gap, lam


def _polish_support(matrix, rhs, coefficients, support_tol=1e-6):
    """ Least squares on the support of `coefficients` for equality-constrained problems.

        Returns None when the support is empty, has more columns than rows or is rank deficient.
    """
    peak = np.max(np.abs(coefficients))
    if peak == 0.0:
        return None
    support = np.flatnonzero(np.abs(coefficients) > support_tol * peak)
    sub = matrix[:, support]
    if support.size > matrix.shape[0] or np.linalg.matrix_rank(sub) < support.size:
        return None
    polished = np.zeros_like(coefficients)
    polished[support] = np.linalg.lstsq(sub, rhs, rcond=None)[0]
    return polished


def solve_bpdn(system, delta, options=None):
    r""" Approximate minimizer of :math:`\|c\|_1` subject to :math:`\|rhs - A c\|_2 \le \delta`.

        The zero vector is returned when :math:`\delta \ge \|rhs\|_2`. A solution is ``converged`` only when the
        backend stopped on its own criterion, the residual is within :func:`feasibility_bound` and a dual
        multiplier certifies a relative duality gap of at most ``options.tol``. A backend solution that misses
        the gap is refined by warm-started ADMM. Non-convergence within ``options.max_iter`` gives
        ``converged=False`` with the best iterate; an infeasible `delta` shows as ``residual_norm > delta``.
    """
    if options is None:
        options = SolverOptions()
    if delta < 0.0:
        raise ValueError("Invalid delta: {} - should be >= 0.0".format(delta))
    matrix, rhs = system.matrix, system.rhs
    column_norms = np.linalg.norm(matrix, axis=0)
    if np.any(column_norms == 0.0):
        raise ValueError("Measurement matrix has {} zero columns".format(int(np.sum(column_norms == 0.0))))
    rhs_norm = float(np.linalg.norm(rhs))

    if delta >= rhs_norm:
        return SparseSolution(np.zeros(system.n_columns), delta, rhs_norm, 0, True, options.method,
                              system.weights_applied, 0.0)

    if options.method == 'spgl1':
        coefficients, multiplier, _, info = spg_bpdn(matrix, rhs, delta, iter_lim=options.max_iter,
                                                     opt_tol=options.tol, bp_tol=options.tol, ls_tol=options.tol,
                                                     verbosity=0)
        iterations, status = info['niters'], info['stat']
        converged = status in SPGL1_CONVERGED
        if not converged:
            logger.warning("spgl1 stopped with status {} ({})".format(status, SPGL1_STATUS.get(status, 'unknown')))
    else:
        coefficients, iterations, converged, _, multiplier = _solve_admm(matrix, rhs, delta, options)
        if not converged:
            logger.warning("ADMM reached the iteration cap of {}".format(options.max_iter))

    residual = _residual_norm(matrix, rhs, coefficients)
    if delta == 0.0:
        polished = _polish_support(matrix, rhs, coefficients)
        if polished is not None and _residual_norm(matrix, rhs, polished) < residual:
            coefficients, residual = polished, _residual_norm(matrix, rhs, polished)
    gap, multiplier = _certify(matrix, rhs, delta, coefficients, multiplier, options.tol)
    if converged and gap > options.tol:
        logger.info("Refining the {} solution by ADMM: duality gap {:.3e} above {:.1e}".format(
            options.method, gap, options.tol))
        coefficients, extra, converged, gap, _ = _solve_admm(matrix, rhs, delta, options, coefficients, multiplier)
        iterations += extra
        residual = _residual_norm(matrix, rhs, coefficients)
        if not converged:
            logger.warning("Duality gap {:.3e} still above {:.1e} after {} ADMM iterations".format(
                gap, options.tol, extra))
    if converged and residual > feasibility_bound(delta, rhs_norm, options.tol):
        logger.warning("Solver {} returned residual {:.3e} above delta {:.3e}".format(options.method, residual, delta))
        converged = False
    return SparseSolution(coefficients, delta, residual, iterations, converged, options.method,
                          system.weights_applied, gap)


def default_delta_grid(system, grid_size=12):
    """ `grid_size` logarithmically spaced tolerances spanning ``[1e-6, 1] * ||rhs||``. """
    return list(np.linalg.norm(system.rhs) * np.logspace(-6.0, 0.0, grid_size))


def cross_validate_delta(system, folds=4, grid=None, seed=0, options=None):
    """ Chooses the tolerance of :func:`solve_bpdn` by `folds`-fold cross-validation.

        Samples (with all their rows) are shuffled with `seed` and split into folds. For each candidate the
        problem is solved on the training rows with the tolerance scaled by ``sqrt(train rows / rows)`` and the
        validation error is the root-mean-square of the held-out residuals pooled over folds. Ties go to the
        smaller tolerance.
    """
    if folds < 2:
        raise ValueError("Invalid number of folds: {} - should be >= 2".format(folds))
    if grid is None:
        grid = default_delta_grid(system)
    grid = sorted(float(delta) for delta in grid)
    if not grid or grid[0] < 0.0:
        raise ValueError("Invalid tolerance grid: {} - should be non-empty and non-negative".format(grid))

    rng = np.random.default_rng(seed)
    splits = np.array_split(rng.permutation(system.sample_ids), folds)
    for f, held_ids in enumerate(splits):
        if held_ids.size == 0:
            raise ValueError("Fold {} of {} has no rows: only {} samples".format(f, folds, system.n_samples))

    squared = np.zeros(len(grid))
    for held_ids in splits:
        held = system.select_samples(held_ids)
        train = system.select_samples(np.setdiff1d(system.sample_ids, held_ids))
        scale = math.sqrt(train.n_rows / system.n_rows)
        for g, delta in enumerate(grid):
            solution = solve_bpdn(train, delta * scale, options)
            squared[g] += _residual_norm(held.matrix, held.rhs, solution.coefficients) ** 2
    errors = np.sqrt(squared / system.n_rows)

    best = 0
    for g in range(1, len(grid)):
        if errors[g] < errors[best]:
            best = g
    logger.debug("Cross-validation errors {} for tolerances {}".format(errors.tolist(), grid))
    return CvReport(grid, errors.tolist(), grid[best], folds)


def solve_least_squares(system, rank_tol=1e-10):
    """ Least-squares coefficients through a column-pivoted QR factorization.

        Raises ``ValueError`` when there are fewer rows than columns or the matrix is numerically rank deficient.
    """
    matrix, rhs = system.matrix, system.rhs
    n_rows, n_columns = matrix.shape
    if n_rows < n_columns:
        raise ValueError("Least squares needs at least as many rows as columns, got {} x {}".format(n_rows, n_columns))
    q, r, pivots = linalg.qr(matrix, mode='economic', pivoting=True)
    diagonal = np.abs(np.diag(r))
    rank = int(np.count_nonzero(diagonal > rank_tol * diagonal[0])) if diagonal[0] > 0.0 else 0
    if rank < n_columns:
        raise ValueError("Least squares system is rank deficient: rank {} for {} columns ({} deficient)".format(
            rank, n_columns, n_columns - rank))
    coefficients = np.empty(n_columns)
    coefficients[pivots] = linalg.solve_triangular(r, q.T.dot(rhs))
    residual = _residual_norm(matrix, rhs, coefficients)
    return SparseSolution(coefficients, residual, residual, 0, True, 'lstsq', system.weights_applied)


def unweight(solution, basis):
    """ Expansion coefficients of `solution`: entry ``j`` times the gradient weight of column ``j`` when the
        system was weighted, a copy otherwise.
    """
    coefficients = np.array(solution.coefficients, dtype=np.float64)
    if solution.weights_applied:
        coefficients *= basis.weights
    return coefficients


def weight(coefficients, basis):
    """ Inverse of :func:`unweight` for a weighted system. """
    return np.asarray(coefficients, dtype=np.float64) / basis.weights


def sobolev_loss(system, coefficients):
    r""" Discrete Sobolev-type loss of `coefficients` (in the system variable) on the samples of `system`:
        the mean over samples of the squared value error plus the squared errors of the observed derivatives.

        For a solution of the constrained problem, ``system.n_samples * loss <= delta ** 2``.
    """
    return _residual_norm(system.matrix, system.rhs, coefficients) ** 2 / system.n_samples


def recover(system, delta=None, cv=False, folds=4, grid_size=12, seed=0, options=None):
    """ Solves `system` with a given `delta`, or with the cross-validated one when `cv`.

        Returns ``(solution, cv_report)``; the report is ``None`` without cross-validation.
    """
    report = None
    if cv:
        report = cross_validate_delta(system, folds, default_delta_grid(system, grid_size), seed, options)
        delta = report.chosen_delta
    if delta is None:
        raise ValueError("Either a tolerance or cross-validation is required")
    solution = solve_bpdn(system, delta, options)
    logger.info("Recovered {}".format(solution))
    return solution, report


class RecoverConfig(RunConfig):
    r"""
        :class:`~gradient_enhanced_pce.RecoverConfig` is the configuration of the ``recover`` subcommand.

        Arguments:
            system: path of a measurement system CSV.
            delta: residual tolerance; ignored when ``cv``.
            cv: choose the tolerance by cross-validation.
            folds: number of cross-validation folds.
            grid_size: number of candidate tolerances.
            solver: ``'spgl1'`` or ``'admm'``.
            tol: solver tolerance.
            max_iter: solver iteration cap.
    """
    def __init__(self, **kwargs):
        self.system = kwargs.pop('system', None)
        self.delta = kwargs.pop('delta', None)
        self.cv = kwargs.pop('cv', False)
        self.folds = kwargs.pop('folds', 4)
        self.grid_size = kwargs.pop('grid_size', 12)
        self.solver = kwargs.pop('solver', 'spgl1')
        self.tol = kwargs.pop('tol', 1e-8)
        self.max_iter = kwargs.pop('max_iter', 100000)
        super(RecoverConfig, self).__init__(**kwargs)

    def solver_options(self):
        return SolverOptions(method=self.solver, tol=self.tol, max_iter=self.max_iter)
