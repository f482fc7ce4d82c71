__version__ = "1.1.0"
from .hermite_basis import (MultiIndex, Basis, basis_cardinality, enumerate_basis, hermite_eval,
                            hermite_derivative, eval_multivariate, eval_multivariate_partial, gradient_weight,
                            basis_matrix, basis_gradient_matrices, gauss_hermite_rule)
from .measurement import (STANDARD, GRADIENT_ENHANCED, SampleSet, MeasurementSystem, draw_samples, assemble,
                          gramian, save_system, load_system, save_samples, load_samples)
from .diagnostics import (TruncationSet, RicEstimate, DiagnoseConfig, candidate_points, coherence_mu,
                          coherence_beta, ric_exhaustive, ric_monte_carlo, nullspace_dim, column_inner_products,
                          decomposed_inner_products, inner_product_bound_chain, sample_bound,
                          epsilon_q_estimate, diagnose)
from .optimization import (SolverOptions, SparseSolution, CvReport, RecoverConfig, solve_bpdn,
                           cross_validate_delta, duality_gap, solve_least_squares, unweight, weight, sobolev_loss,
                           recover)
from .experiments import (ManufacturedProblem, NoiseConfig, CostModel, ExperimentReport, ManufacturedConfig,
                          manufacture, evaluate_planted, split_equivalent_size, rrmse, run_recovery_study,
                          run_manufactured_study)
from .elliptic_pde import (KlField, Mesh, EllipticQoI, PdeConfig, PDE_PRESET_CONFIG_MAP, build_kl,
                           solve_forward, solve_adjoint_gradient, compute_reference, run_pde_study,
                           run_pde_experiment)

from .configuration_utils import RunConfig
from .file_utils import derive_seed, build_identifier, worker_count, WORKERS_ENV, BUILD_ENV
