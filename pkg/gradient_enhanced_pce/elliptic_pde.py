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
""" Stochastic diffusion problem -div(a grad u) = 1 on the unit square with a lognormal Karhunen-Loeve
    coefficient, its bilinear finite element solver and discrete adjoint sensitivities of the center value.
"""

from __future__ import absolute_import, division, print_function

import logging
from collections import namedtuple
from functools import lru_cache

import numpy as np
import torch
from scipy import linalg
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu
from scipy.spatial.distance import cdist

from .configuration_utils import RunConfig
from .experiments import CostModel, NoiseConfig, run_study, study_fractions
from .file_utils import derive_seed, progress
from .hermite_basis import basis_matrix, enumerate_basis
from .measurement import STANDARD, assemble, draw_samples
from .optimization import SolverOptions, solve_least_squares

logger = logging.getLogger(__name__)

MIN_MESH = 8
SOLVE_TOLERANCE = 1e-10
EIGENVALUE_RATIO_FLOOR = 1e-12
ADJOINT_ASSEMBLIES = ('elementwise', 'matrix', 'autograd')

# Bilinear stiffness of a square element for a unit coefficient, local nodes (0,0), (1,0), (1,1), (0,1).
REFERENCE_STIFFNESS = np.array([[4.0, -1.0, -2.0, -1.0],
                                [-1.0, 4.0, -1.0, -2.0],
                                [-2.0, -1.0, 4.0, -1.0],
                                [-1.0, -2.0, -1.0, 4.0]]) / 6.0


def _trapezoid_weights(resolution):
    weights = np.full(resolution + 1, 1.0 / resolution)
    weights[[0, -1]] *= 0.5
    return weights


class KlField(object):
    r""" Truncated Karhunen-Loeve expansion of the lognormal diffusion coefficient
        :math:`a(x, \xi) = \exp[\bar a + \sigma_a \sum_k \sqrt{\lambda_k} \phi_k(x) \xi_k]`.

        ``eigenvalues`` are sorted descending; ``eigenfunctions`` (``(G+1)^2 x d``, node ``iy * (G+1) + ix``)
        are orthonormal for the trapezoidal quadrature ``quadrature_weights`` of the ``(G+1) x (G+1)`` grid.
    """
    def __init__(self, dimension, mean_log, sigma, correlation_length, eigenvalues, eigenfunctions, grid_resolution):
        self.dimension = int(dimension)
        self.mean_log = float(mean_log)
        self.sigma = float(sigma)
        self.correlation_length = float(correlation_length)
        self.eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
        self.eigenfunctions = np.asarray(eigenfunctions, dtype=np.float64)
        self.grid_resolution = int(grid_resolution)
        self._modes = {}

    @property
    def grid(self):
        return np.linspace(0.0, 1.0, self.grid_resolution + 1)

    @property
    def quadrature_weights(self):
        weights = _trapezoid_weights(self.grid_resolution)
        return np.outer(weights, weights).reshape(-1)

    def modes_at(self, mesh_n):
        r""" ``(E, d)`` matrix of :math:`\sigma_a \sqrt{\lambda_k} \phi_k` at the element centroids of an
            ``mesh_n x mesh_n`` mesh, bilinearly interpolated from the eigenfunction grid.
        """
        if mesh_n not in self._modes:
            mesh = get_mesh(mesh_n)
            size = self.grid_resolution + 1
            modes = np.empty((mesh.n_elements, self.dimension))
            for k in range(self.dimension):
                values = self.eigenfunctions[:, k].reshape(size, size)
                interpolator = RegularGridInterpolator((self.grid, self.grid), values, method='linear')
                modes[:, k] = interpolator(mesh.centroids[:, ::-1])
            modes *= self.sigma * np.sqrt(self.eigenvalues)[None, :]
            self._modes[mesh_n] = modes
        return self._modes[mesh_n]

    def element_coefficients(self, xi, mesh_n):
        """ Coefficient ``a`` at the element centroids for the realization `xi`. """
        xi = np.asarray(xi, dtype=np.float64).reshape(-1)
        if xi.shape[0] != self.dimension:
            raise ValueError("Realization of dimension {} does not match field dimension {}".format(
                xi.shape[0], self.dimension))
        return np.exp(self.mean_log + self.modes_at(mesh_n).dot(xi))

    def __getstate__(self):
        state = self.__dict__.copy()
        state['_modes'] = {}
        return state

    def __repr__(self):
        return "KlField(dimension={}, mean_log={}, sigma={}, correlation_length={}, grid_resolution={})".format(
            self.dimension, self.mean_log, self.sigma, self.correlation_length, self.grid_resolution)


def build_kl(d, grid_resolution, sigma, mean_log, l_c):
    r""" Leading `d` eigenpairs of the Gaussian covariance :math:`\exp(-\|x - y\|^2 / l_c^2)` on a
        ``(G+1) x (G+1)`` grid of the unit square with trapezoidal quadrature (Nystrom method).

        Raises ``ValueError`` when :math:`\lambda_d \le 0` or :math:`\lambda_d / \lambda_1 \le 10^{-12}`; refine
        the grid or lower `d`.
    """
    if grid_resolution < 2:
        raise ValueError("Invalid KL grid resolution: {} - should be >= 2".format(grid_resolution))
    if not l_c > 0.0:
        raise ValueError("Invalid correlation length: {} - should be > 0".format(l_c))
    if sigma < 0.0:
        raise ValueError("Invalid sigma: {} - should be >= 0".format(sigma))
    grid = np.linspace(0.0, 1.0, grid_resolution + 1)
    y, x = np.meshgrid(grid, grid, indexing='ij')
    nodes = np.stack([x.reshape(-1), y.reshape(-1)], axis=1)
    n_nodes = nodes.shape[0]
    if not 1 <= d <= n_nodes:
        raise ValueError("Invalid KL dimension: {} - should be in [1, {}]".format(d, n_nodes))

    weights = _trapezoid_weights(grid_resolution)
    root = np.sqrt(np.outer(weights, weights).reshape(-1))
    covariance = np.exp(-cdist(nodes, nodes, 'sqeuclidean') / l_c ** 2)
    eigenvalues, vectors = linalg.eigh(root[:, None] * covariance * root[None, :],
                                       subset_by_index=[n_nodes - d, n_nodes - 1])
    eigenvalues, vectors = eigenvalues[::-1], vectors[:, ::-1]
    if eigenvalues[-1] <= 0.0 or eigenvalues[-1] / eigenvalues[0] <= EIGENVALUE_RATIO_FLOOR:
        raise ValueError("KL eigenvalue {} of {} is not resolved (lambda_d={:.3e}, lambda_1={:.3e}); refine the "
                         "grid or lower d".format(d, n_nodes, eigenvalues[-1], eigenvalues[0]))
    eigenfunctions = vectors / root[:, None]
    # Deterministic sign: nonnegative quadrature mean, else a positive largest entry.
    for k in range(d):
        mean = np.dot(root ** 2, eigenfunctions[:, k])
        pivot = eigenfunctions[np.argmax(np.abs(eigenfunctions[:, k])), k]
        if mean < -1e-12 or (abs(mean) <= 1e-12 and pivot < 0.0):
            eigenfunctions[:, k] *= -1.0
    field = KlField(d, mean_log, sigma, l_c, eigenvalues, eigenfunctions, grid_resolution)
    logger.info("Built {} with eigenvalues {:.3e} .. {:.3e}".format(field, eigenvalues[0], eigenvalues[-1]))
    return field


class Mesh(object):
    """ Uniform ``n x n`` mesh of square bilinear elements on the unit square.

        Node ``iy * (n+1) + ix`` sits at ``(ix / n, iy / n)``; boundary nodes carry no degree of freedom
        (``dof_map`` is -1 there). The quantity of interest is the value at node ``(n/2, n/2)`` (rounded).
    """
    def __init__(self, n):
        self.n = int(n)
        self.h = 1.0 / self.n
        stride = self.n + 1
        ex, ey = np.meshgrid(np.arange(self.n), np.arange(self.n), indexing='xy')
        first = (ey * stride + ex).reshape(-1)
        self.connectivity = np.stack([first, first + 1, first + stride + 1, first + stride], axis=1)
        self.centroids = np.stack([(ex.reshape(-1) + 0.5) * self.h, (ey.reshape(-1) + 0.5) * self.h], axis=1)

        iy, ix = np.divmod(np.arange(stride ** 2), stride)
        interior = (ix > 0) & (ix < self.n) & (iy > 0) & (iy < self.n)
        self.dof_map = -np.ones(stride ** 2, dtype=np.int64)
        self.dof_map[interior] = np.arange(np.count_nonzero(interior))
        self.n_dofs = int(np.count_nonzero(interior))

        center = int(round(self.n / 2.0))
        self.qoi_node = center * stride + center
        self.qoi_dof = int(self.dof_map[self.qoi_node])

        local_dofs = self.dof_map[self.connectivity]
        rows = np.broadcast_to(local_dofs[:, :, None], (self.n_elements, 4, 4))
        cols = np.broadcast_to(local_dofs[:, None, :], (self.n_elements, 4, 4))
        self._active = (rows >= 0) & (cols >= 0)
        self._rows = rows[self._active]
        self._cols = cols[self._active]

        load = np.zeros(stride ** 2)
        np.add.at(load, self.connectivity.reshape(-1), self.h ** 2 / 4.0)
        self.load = load[interior]

    @property
    def n_elements(self):
        return self.n * self.n

    def stiffness(self, element_coefficients):
        """ Sparse stiffness matrix on the interior degrees of freedom for piecewise-constant coefficients. """
        data = np.asarray(element_coefficients)[:, None, None] * REFERENCE_STIFFNESS[None, :, :]
        data = np.broadcast_to(data, (self.n_elements, 4, 4))[self._active]
        return coo_matrix((data, (self._rows, self._cols)), shape=(self.n_dofs, self.n_dofs)).tocsc()

    def to_nodes(self, dof_values):
        """ Node values with zeros on the boundary. """
        values = np.zeros((self.n + 1) ** 2)
        values[self.dof_map >= 0] = dof_values
        return values


@lru_cache(maxsize=None)
def get_mesh(n):
    if int(n) != n or n < MIN_MESH:
        raise ValueError("Invalid mesh size: {} - should be an integer >= {}".format(n, MIN_MESH))
    return Mesh(int(n))


class DiscreteOperator(namedtuple('DiscreteOperator', ['matrix', 'load', 'dof_map', 'qoi_vector',
                                                       'element_coefficients', 'mesh'])):
    r""" Discretized residual :math:`R(w, \xi) = K(\xi) w - f` at one realization: symmetric positive definite
        ``matrix`` ``K``, ``load`` ``f``, node-to-dof ``dof_map`` and ``qoi_vector`` ``e`` with ``u = e^T w``.
    """

    def residual(self, state):
        return self.matrix.dot(state) - self.load

    def qoi(self, state):
        return float(self.qoi_vector.dot(state))


def assemble_operator(mesh, element_coefficients):
    """ Operator of the mesh for the given element coefficients, which must be positive and finite. """
    element_coefficients = np.asarray(element_coefficients, dtype=np.float64)
    if element_coefficients.shape != (mesh.n_elements,):
        raise ValueError("Expected {} element coefficients, got shape {}".format(mesh.n_elements,
                                                                                 element_coefficients.shape))
    if not (np.all(np.isfinite(element_coefficients)) and np.all(element_coefficients > 0.0)):
        raise FloatingPointError("Diffusion coefficient should be positive and finite on every element")
    qoi_vector = np.zeros(mesh.n_dofs)
    qoi_vector[mesh.qoi_dof] = 1.0
    return DiscreteOperator(mesh.stiffness(element_coefficients), mesh.load, mesh.dof_map, qoi_vector,
                            element_coefficients, mesh)


def _factorize(matrix):
    try:
        return splu(matrix)
    except RuntimeError as exc:
        logger.error("Sparse factorization failed: {}".format(exc))
        raise RuntimeError("Singular diffusion operator: {}".format(exc)) from exc


def _solve(matrix, rhs):
    solution = _factorize(matrix).solve(rhs)
    residual = np.linalg.norm(matrix.dot(solution) - rhs)
    if not residual <= SOLVE_TOLERANCE * max(np.linalg.norm(rhs), 1e-300):
        raise RuntimeError("Linear solve residual {:.3e} exceeds {:.0e} relative".format(
            residual / np.linalg.norm(rhs), SOLVE_TOLERANCE))
    return solution


def solve_operator(operator):
    """ State ``w`` with ``R(w) = 0`` and the quantity of interest ``e^T w``. """
    state = _solve(operator.matrix, operator.load)
    return operator.qoi(state), state


def solve_forward(field, xi, mesh_n):
    """ Solves the diffusion problem at realization `xi` on an ``mesh_n x mesh_n`` mesh.

        Returns ``(u_qoi, state, operator)``: the value at the center node, the interior nodal values and the
        :class:`DiscreteOperator`.
    """
    mesh = get_mesh(mesh_n)
    operator = assemble_operator(mesh, field.element_coefficients(xi, mesh_n))
    u_qoi, state = solve_operator(operator)
    return u_qoi, state, operator


def _element_sensitivities(operator, state, adjoint):
    """ ``lambda_e^T K_ref w_e`` per element, i.e. the derivative of ``lambda^T R`` with respect to ``a_e``. """
    mesh = operator.mesh
    adjoint_local = mesh.to_nodes(adjoint)[mesh.connectivity]
    state_local = mesh.to_nodes(state)[mesh.connectivity]
    return np.einsum('ei,ij,ej->e', adjoint_local, REFERENCE_STIFFNESS, state_local)


def solve_adjoint_gradient(operator, state, field, xi, assembly='elementwise'):
    r""" Derivatives :math:`du/d\xi_k` of the center value by one adjoint solve.

        The adjoint :math:`\lambda` solves :math:`K^T \lambda = -e` with a fresh factorization; then
        :math:`du/d\xi_k = \lambda^T \partial R / \partial \xi_k` with
        :math:`\partial a_e / \partial \xi_k = a_e \sigma_a \sqrt{\lambda_k} \phi_k(x_e)`.

        `assembly` selects how :math:`\lambda^T \partial R / \partial \xi_k` is formed: ``'elementwise'`` (chain
        rule through the element sensitivities), ``'matrix'`` (sparse :math:`\partial K / \partial \xi_k` per
        variable) or ``'autograd'`` (torch differentiation of :math:`\lambda^T R(w, \xi)`).
    """
    if assembly not in ADJOINT_ASSEMBLIES:
        raise ValueError("Invalid assembly: {} - should be one of {}".format(assembly, ', '.join(ADJOINT_ASSEMBLIES)))
    mesh = operator.mesh
    adjoint = _solve(operator.matrix.T.tocsc(), -operator.qoi_vector)
    modes = field.modes_at(mesh.n)
    coefficients = operator.element_coefficients

    if assembly == 'elementwise':
        return modes.T.dot(coefficients * _element_sensitivities(operator, state, adjoint))
    if assembly == 'matrix':
        gradient = np.empty(field.dimension)
        for k in range(field.dimension):
            derivative = mesh.stiffness(coefficients * modes[:, k])
            gradient[k] = adjoint.dot(derivative.dot(state))
        return gradient

    sensitivities = torch.as_tensor(_element_sensitivities(operator, state, adjoint), dtype=torch.float64)
    xi_t = torch.as_tensor(np.asarray(xi, dtype=np.float64).reshape(-1)).clone().requires_grad_(True)
    log_a = field.mean_log + torch.as_tensor(modes, dtype=torch.float64).mv(xi_t)
    torch.sum(torch.exp(log_a) * sensitivities).backward()
    return xi_t.grad.numpy().copy()


class EllipticQoI(object):
    """ Evaluator of the center value and its adjoint gradient, for :func:`~gradient_enhanced_pce.measurement.assemble`. """
    def __init__(self, field, mesh_n):
        self.field = field
        self.mesh_n = int(mesh_n)

    def __call__(self, point, need_gradient=True):
        u_qoi, state, operator = solve_forward(self.field, point, self.mesh_n)
        gradient = solve_adjoint_gradient(operator, state, self.field, point) if need_gradient else None
        return u_qoi, gradient

    def __repr__(self):
        return "EllipticQoI(field={}, mesh_n={})".format(self.field, self.mesh_n)


ReferenceExpansion = namedtuple('ReferenceExpansion', ['coefficients', 'validation_error', 'n_samples',
                                                       'n_validation', 'mesh_n'])


def compute_reference(field, mesh_n, basis, n_samples, n_validation, seed, workers=1):
    """ Least-squares expansion of the center value from `n_samples` random solves, with its relative error on
        `n_validation` independent samples.
    """
    evaluator = EllipticQoI(field, mesh_n)
    samples = draw_samples(basis.dimension, n_samples, 0.0, derive_seed(seed, 'reference'))
    system = assemble(basis, samples, evaluator, kind=STANDARD, apply_weights=False, workers=workers)
    coefficients = solve_least_squares(system).coefficients

    validation = draw_samples(basis.dimension, n_validation, 0.0, derive_seed(seed, 'validation'))
    values = np.array([evaluator(point, False)[0]
                       for point in progress(validation.points, desc='validation', total=n_validation)])
    predicted = basis_matrix(basis, validation.points).dot(coefficients)
    error = float(np.linalg.norm(predicted - values) / np.linalg.norm(values))
    logger.info("Reference expansion from {} samples on a {}x{} mesh: validation error {:.3e}".format(
        n_samples, mesh_n, mesh_n, error))
    return ReferenceExpansion(coefficients, error, n_samples, n_validation, mesh_n)


class ReferenceConfig(object):
    """ How the reference expansion of a study is computed: `n_samples` least-squares samples (default 20 per
        column), `n_validation` validation samples, on the `mesh_n` mesh (default the study mesh).
    """
    def __init__(self, n_samples=None, n_validation=200, mesh_n=None):
        self.n_samples = n_samples
        self.n_validation = n_validation
        self.mesh_n = mesh_n


def run_pde_study(field, mesh_n, basis, n_grid, gradient_fraction, replications, reference_config, seed,
                  nu=2.0, reference=None, **kwargs):
    """ Recovery curve of the center value on an ``mesh_n x mesh_n`` mesh, with RRMSE measured against a
        least-squares reference expansion (computed from `reference_config` unless `reference` is given).
        Keyword arguments are passed to :func:`~gradient_enhanced_pce.experiments.run_study`.
    """
    if reference is None:
        if reference_config is None:
            reference_config = ReferenceConfig()
        n_samples = reference_config.n_samples or 20 * basis.cardinality
        reference = compute_reference(field, reference_config.mesh_n or mesh_n, basis, n_samples,
                                      reference_config.n_validation, seed, kwargs.get('workers', 1))
    report = run_study(basis, EllipticQoI(field, mesh_n), reference.coefficients, CostModel(nu), n_grid,
                       gradient_fraction, kwargs.pop('noise_config', None), replications, seed, **kwargs)
    report.reference_validation_error = reference.validation_error
    return report


class PdeConfig(RunConfig):
    r"""
        :class:`~gradient_enhanced_pce.PdeConfig` is the configuration of ``experiment pde``.

        Arguments:
            preset: name of the preset the configuration started from.
            dim: number of KL variables ``d``.
            mesh: elements per side of the mesh of the recovery runs and of the reference.
            coarse_mesh: elements per side of a coarser mesh whose (less accurate) solves and derivatives are
                compared to the fine ones, or ``None``.
            order: total order ``p`` of the basis.
            columns: number of leading basis columns kept.
            kl_grid: resolution of the KL eigenvalue grid.
            correlation_length, sigma, mean_log: parameters of the lognormal coefficient.
            nu: cost of a gradient sample relative to a value sample.
            fraction: list of gradient fractions; the standard curve is always added.
            n_grid: equivalent sample sizes.
            reps: replications per equivalent size.
            reference_samples: least-squares samples of the reference (``None``: 20 per column).
            n_validation: validation samples of the reference.
            coefficient_n: equivalent size whose first replication's coefficients are exported
                (``None``: middle of the grid).
            folds: cross-validation folds.
            solver: ``'spgl1'`` or ``'admm'``.
    """
    def __init__(self, **kwargs):
        self.preset = kwargs.pop('preset', 'desk')
        self.dim = kwargs.pop('dim', 4)
        self.mesh = kwargs.pop('mesh', 32)
        self.coarse_mesh = kwargs.pop('coarse_mesh', 16)
        self.order = kwargs.pop('order', 3)
        self.columns = kwargs.pop('columns', 300)
        self.kl_grid = kwargs.pop('kl_grid', 64)
        self.correlation_length = kwargs.pop('correlation_length', 1.0 / 16.0)
        self.sigma = kwargs.pop('sigma', 0.5)
        self.mean_log = kwargs.pop('mean_log', 0.1)
        self.nu = kwargs.pop('nu', 2.0)
        self.fraction = kwargs.pop('fraction', [1.0])
        self.n_grid = kwargs.pop('n_grid', [8, 12, 16, 24, 32, 48, 64])
        self.reps = kwargs.pop('reps', 20)
        self.reference_samples = kwargs.pop('reference_samples', None)
        self.n_validation = kwargs.pop('n_validation', 200)
        self.coefficient_n = kwargs.pop('coefficient_n', None)
        self.folds = kwargs.pop('folds', 4)
        self.solver = kwargs.pop('solver', 'spgl1')
        super(PdeConfig, self).__init__(**kwargs)

    @classmethod
    def from_preset(cls, preset, **kwargs):
        """ Configuration of the preset `preset`, updated with `kwargs`. """
        if preset not in PDE_PRESET_CONFIG_MAP:
            raise ValueError("Unknown preset '{}' - should be one of {}".format(
                preset, ', '.join(sorted(PDE_PRESET_CONFIG_MAP))))
        config = cls(preset=preset, **PDE_PRESET_CONFIG_MAP[preset])
        config.update(**kwargs)
        return config


PDE_PRESET_CONFIG_MAP = {
    'desk': {},
    'paper-pde': {'dim': 30, 'mesh': 256, 'coarse_mesh': 16, 'order': 3, 'columns': 2500, 'kl_grid': 64,
                  'correlation_length': 1.0 / 16.0, 'sigma': 0.5, 'mean_log': 0.1, 'nu': 2.0,
                  'n_grid': [200, 400, 600, 800, 1000, 1500, 2000], 'reps': 100, 'reference_samples': 10000,
                  'n_validation': 1000},
}


PdeResult = namedtuple('PdeResult', ['basis', 'reference', 'reports', 'coefficient_n', 'coefficients'])


def improvement_ratio(standard, gradient):
    """ Mean over the grid of the ratio of the standard to the gradient-enhanced mean RRMSE. """
    ratios = np.array(standard.mean_rrmse()) / np.maximum(np.array(gradient.mean_rrmse()), 1e-300)
    return float(np.mean(ratios))


def run_pde_experiment(config, workers=1):
    """ Reference expansion on the fine mesh, then one curve per gradient fraction on the fine mesh and, when
        ``config.coarse_mesh`` is set, on the coarse mesh, all scored against the fine-mesh reference.
    """
    if config.preset == 'paper-pde':
        logger.warning("Full-scale PDE configuration selected (d={}, mesh {}); expect long run times".format(
            config.dim, config.mesh))
    field = build_kl(config.dim, config.kl_grid, config.sigma, config.mean_log, config.correlation_length)
    basis = enumerate_basis(config.dim, config.order)
    basis = basis.truncated(min(basis.cardinality, config.columns))
    n_reference = config.reference_samples or 20 * basis.cardinality
    reference = compute_reference(field, config.mesh, basis, n_reference, config.n_validation, config.seed, workers)

    coefficient_n = config.coefficient_n
    if coefficient_n is None:
        coefficient_n = config.n_grid[len(config.n_grid) // 2]
    meshes = [config.mesh] + ([config.coarse_mesh] if config.coarse_mesh else [])
    options = SolverOptions(method=config.solver)
    reports, coefficients = [], {}
    for mesh_n in meshes:
        for fraction in study_fractions(config.fraction):
            label = 'standard' if fraction == 0.0 else 'gradient-{:g}'.format(100.0 * fraction)
            label = '{}-mesh{}'.format(label, mesh_n)
            report = run_pde_study(field, mesh_n, basis, config.n_grid, fraction, config.reps, None, config.seed,
                                   nu=config.nu, reference=reference, noise_config=NoiseConfig(),
                                   folds=config.folds, options=options, workers=workers, label=label,
                                   keep_coefficients=coefficient_n)
            reports.append(report)
            if report.coefficients is not None:
                coefficients[label] = report.coefficients
    return PdeResult(basis, reference, reports, coefficient_n, coefficients)
