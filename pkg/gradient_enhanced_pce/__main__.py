# coding: utf8
""" Command line: ``gradient_enhanced_pce [--verbosity V] [--config FILE] <subcommand> ...`` """
from __future__ import absolute_import, division, print_function

import argparse
import json
import logging
import sys

from . import file_utils
from .configuration_utils import RunConfig
from .diagnostics import DiagnoseConfig, diagnose
from .elliptic_pde import PDE_PRESET_CONFIG_MAP, PdeConfig, improvement_ratio, run_pde_experiment
from .experiments import (CURVES_HEADER, FULL_SCALE_OVERRIDES, NOISE_TARGETS, ManufacturedConfig, manufacture,
                          run_manufactured_study)
from .file_utils import build_identifier, output_path, worker_count, write_csv, write_json
from .hermite_basis import enumerate_basis
from .measurement import SYSTEM_KINDS, load_system, save_system
from .optimization import SOLVER_METHODS, RecoverConfig, recover, unweight
from .selftest import run_selftest

logger = logging.getLogger(__name__)

VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}


def int_list(text):
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma separated list of integers, got '{}'".format(text))


def float_list(text):
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma separated list of numbers, got '{}'".format(text))


def build_parser():
    parser = argparse.ArgumentParser(prog='gradient_enhanced_pce',
                                     description="Sparse Hermite chaos expansions by gradient-enhanced l1-minimization.")
    parser.add_argument("--verbosity", type=int, default=None, choices=sorted(VERBOSITY_LEVELS),
                        help="0: warnings only, 1: milestones (default), 2: debug output. Overrides --config.")
    parser.add_argument("--config", default=None, type=str,
                        help="Flat 'key = value' file; explicit flags override its values.")
    subparsers = parser.add_subparsers(dest='command')

    ## basis
    basis_parser = subparsers.add_parser('basis', help="Print the cardinality and the ordered multi-indices.")
    basis_parser.add_argument("--dim", type=int, required=True, help="Number of input variables.")
    basis_parser.add_argument("--order", type=int, required=True, help="Total order of the basis.")

    ## diagnose
    diagnose_parser = subparsers.add_parser('diagnose', help="Coherence, RIC and null-space diagnostics.")
    diagnose_parser.add_argument("--dim", type=int, default=None)
    diagnose_parser.add_argument("--order", type=int, default=None)
    diagnose_parser.add_argument("--samples", type=int, default=None, help="Number of samples N.")
    diagnose_parser.add_argument("--fraction", type=float, default=None, help="Gradient fraction in [0, 1].")
    diagnose_parser.add_argument("--kind", default=None, choices=SYSTEM_KINDS)
    diagnose_parser.add_argument("--sparsity", type=int, default=None,
                                 help="Planted coefficients of the evaluator filling the right-hand side.")
    diagnose_parser.add_argument("--ric-sparsity", dest='ric_sparsity', type=int_list, default=None,
                                 help="Comma separated orders s of the restricted isometry constants.")
    diagnose_parser.add_argument("--ric-trials", dest='ric_trials', type=int, default=None)
    diagnose_parser.add_argument("--budget", type=int, default=None, help="Coherence search budget.")
    diagnose_parser.add_argument("--epsilon", type=float, default=None, help="Truncation radius parameter.")
    diagnose_parser.add_argument("--save-system", dest='save_system', action='store_true', default=None,
                                 help="Also write the measurement system as system.csv.")

    ## recover
    recover_parser = subparsers.add_parser('recover', help="Solve a saved measurement system.")
    recover_parser.add_argument("--system", type=str, default=None, help="Measurement system CSV.")
    tolerance = recover_parser.add_mutually_exclusive_group()
    tolerance.add_argument("--delta", type=float, default=None, help="Residual tolerance.")
    tolerance.add_argument("--cv", action='store_true', default=None, help="Choose the tolerance by cross-validation.")
    recover_parser.add_argument("--folds", type=int, default=None)
    recover_parser.add_argument("--grid-size", dest='grid_size', type=int, default=None)
    recover_parser.add_argument("--solver", default=None, choices=SOLVER_METHODS)

    ## experiment
    experiment_parser = subparsers.add_parser('experiment', help="Recovery studies.")
    studies = experiment_parser.add_subparsers(dest='study')

    manufactured_parser = studies.add_parser('manufactured', help="Recovery of planted sparse expansions.")
    manufactured_parser.add_argument("--dim", type=int, default=None)
    manufactured_parser.add_argument("--order", type=int, default=None)
    manufactured_parser.add_argument("--sparsity", type=int_list, default=None,
                                     help="Comma separated numbers of planted coefficients.")
    manufactured_parser.add_argument("--nu", type=float, default=None, help="Relative cost of a gradient sample.")
    manufactured_parser.add_argument("--fraction", type=float_list, default=None,
                                     help="Comma separated gradient fractions.")
    manufactured_parser.add_argument("--noise-variance", dest='noise_variance', type=float, default=None)
    manufactured_parser.add_argument("--noise-target", dest='noise_target', default=None, choices=NOISE_TARGETS)
    manufactured_parser.add_argument("--n-grid", dest='n_grid', type=int_list, default=None,
                                     help="Comma separated equivalent sample sizes.")
    manufactured_parser.add_argument("--reps", type=int, default=None)
    manufactured_parser.add_argument("--folds", type=int, default=None)
    manufactured_parser.add_argument("--solver", default=None, choices=SOLVER_METHODS)
    manufactured_parser.add_argument("--full-scale", dest='full_scale', action='store_true', default=None)

    pde_parser = studies.add_parser('pde', help="Recovery of the elliptic PDE quantity of interest.")
    pde_parser.add_argument("--preset", default=None, choices=sorted(PDE_PRESET_CONFIG_MAP))
    pde_parser.add_argument("--dim", type=int, default=None)
    pde_parser.add_argument("--mesh", type=int, default=None, help="Cells per side of the fine mesh.")
    pde_parser.add_argument("--coarse-mesh", dest='coarse_mesh', type=int, default=None,
                            help="Cells per side of the coarse mesh; 0 disables the coarse curves.")
    pde_parser.add_argument("--order", type=int, default=None)
    pde_parser.add_argument("--nu", type=float, default=None)
    pde_parser.add_argument("--fraction", type=float_list, default=None)
    pde_parser.add_argument("--n-grid", dest='n_grid', type=int_list, default=None)
    pde_parser.add_argument("--reps", type=int, default=None)
    pde_parser.add_argument("--coefficient-n", dest='coefficient_n', type=int, default=None,
                            help="Equivalent size whose recovered coefficients are exported.")
    pde_parser.add_argument("--solver", default=None, choices=SOLVER_METHODS)

    for sub in (diagnose_parser, recover_parser, manufactured_parser, pde_parser):
        sub.add_argument("--seed", type=int, default=None, help="Global seed.")
        sub.add_argument("--out", type=str, default=None, help="Output directory.")

    ## selftest
    selftest_parser = subparsers.add_parser('selftest', help="Quadrature, finite-difference and oracle checks.")
    selftest_parser.add_argument("--quick", action='store_true', help="Smaller quadrature range.")
    return parser


def load_config(config_class, args, file_values, exclude=()):
    """ Class defaults, then the flat file, then explicit flags. """
    config = config_class()
    unused = config.update(**file_values)
    if unused:
        logger.warning("Ignoring unknown configuration keys: {}".format(', '.join(sorted(unused))))
    flags = dict((key, value) for key, value in vars(args).items()
                 if key not in ('command', 'study', 'config') + tuple(exclude))
    config.update(**flags)
    return config


def configure_logging(verbosity):
    """ Root logging and progress bars at `verbosity`, 1 when unset. """
    if verbosity is None:
        verbosity = 1
    if verbosity not in VERBOSITY_LEVELS:
        raise ValueError("Invalid verbosity: {} - should be one of {}".format(
            verbosity, ', '.join(str(level) for level in sorted(VERBOSITY_LEVELS))))
    logging.basicConfig(format='%(asctime)s - %(levelname)s - %(name)s -   %(message)s',
                        datefmt='%m/%d/%Y %H:%M:%S',
                        level=VERBOSITY_LEVELS[verbosity])
    file_utils.PROGRESS_VERBOSITY = verbosity


def report_header(config):
    return {'config': config.to_dict(), 'build': build_identifier(), 'seed': config.seed}


def run_basis(args):
    basis = enumerate_basis(args.dim, args.order)
    header, rows = basis.to_csv_rows()
    print("P={}".format(basis.cardinality))
    print(','.join(header))
    for row in rows:
        print(','.join(str(value) for value in row))
    return 0


def run_diagnose(config):
    basis = enumerate_basis(config.dim, config.order)
    problem = manufacture(basis, min(config.sparsity, basis.cardinality), file_utils.derive_seed(config.seed, 'planted'))
    report, system = diagnose(config, problem)
    report.update(report_header(config))
    write_json(config.out, 'diagnostics.json', report)
    if config.save_system:
        save_system(system, output_path(config.out, 'system.csv'))
    return 0


def run_recover(config):
    if config.system is None:
        raise ValueError("recover needs a measurement system file (--system)")
    if config.delta is None and not config.cv:
        raise ValueError("recover needs either --delta or --cv")
    system = load_system(config.system)
    solution, cv_report = recover(system, config.delta, config.cv, config.folds, config.grid_size, config.seed,
                                  config.solver_options())
    coefficients = unweight(solution, system.basis)
    header, rows = system.basis.to_csv_rows()
    write_csv(config.out, 'solution.csv', header + ['coefficient', 'system_coefficient'],
              [row + [float(c), float(z)] for row, c, z in zip(rows, coefficients, solution.coefficients)])
    telemetry = solution.to_dict()
    telemetry['cv'] = cv_report._asdict() if cv_report is not None else None
    telemetry['system'] = {'n_rows': system.n_rows, 'n_columns': system.n_columns, 'kind': system.kind,
                           'n_samples': system.n_samples}
    telemetry.update(report_header(config))
    write_json(config.out, 'telemetry.json', telemetry)
    return 0


def write_curves(out, reports):
    rows = []
    for report in reports:
        rows.extend(report.csv_rows())
    write_csv(out, 'curves.csv', CURVES_HEADER, rows)


def run_manufactured(config, workers):
    if config.full_scale:
        config.update(**FULL_SCALE_OVERRIDES)
    reports = run_manufactured_study(config, workers)
    output = report_header(config)
    output['curves'] = [report.to_dict() for report in reports]
    write_json(config.out, 'report.json', output)
    write_curves(config.out, reports)
    return 0


def run_pde(config, workers):
    result = run_pde_experiment(config, workers)
    output = report_header(config)
    output['cardinality'] = result.basis.cardinality
    output['reference_validation_error'] = result.reference.validation_error
    output['reference_samples'] = result.reference.n_samples
    output['coefficient_n'] = result.coefficient_n
    output['curves'] = [report.to_dict() for report in result.reports]
    by_label = dict((report.label, report) for report in result.reports)
    ratios = {}
    for label, report in by_label.items():
        if label.startswith('gradient'):
            standard = by_label.get('standard-' + label.rsplit('-', 1)[1])
            if standard is not None:
                ratios[label] = improvement_ratio(standard, report)
    output['improvement_ratio'] = ratios
    write_json(config.out, 'report.json', output)
    write_curves(config.out, result.reports)

    header, rows = result.basis.to_csv_rows()
    write_csv(config.out, 'reference_coefficients.csv', header + ['coefficient'],
              [row + [float(c)] for row, c in zip(rows, result.reference.coefficients)])
    labels = sorted(result.coefficients)
    columns = [result.reference.coefficients] + [result.coefficients[label] for label in labels]
    write_csv(config.out, 'coefficients.csv', ['column', 'reference'] + labels,
              [[j] + [float(column[j]) for column in columns] for j in range(result.basis.cardinality)])
    return 0


def run_selftest_command(args):
    results = run_selftest(quick=args.quick)
    for result in results:
        print("{:<40} {} {:.3e}".format(result.name, 'ok' if result.passed else 'FAILED', result.detail))
    failures = [result.name for result in results if not result.passed]
    if failures:
        print(json.dumps({'error': 'SelftestFailure', 'message': ', '.join(failures)}), file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None or (args.command == 'experiment' and args.study is None):
        parser.print_usage(sys.stderr)
        return 2

    try:
        if args.command in ('basis', 'selftest'):
            configure_logging(args.verbosity)
            return run_basis(args) if args.command == 'basis' else run_selftest_command(args)

        file_values = RunConfig.read_flat_file(args.config) if args.config else {}
        if args.command == 'diagnose':
            config = load_config(DiagnoseConfig, args, file_values)
        elif args.command == 'recover':
            config = load_config(RecoverConfig, args, file_values)
        elif args.study == 'manufactured':
            config = load_config(ManufacturedConfig, args, file_values)
        else:
            preset = args.preset or file_values.get('preset', 'desk')
            config = PdeConfig.from_preset(preset)
            unused = config.update(**dict((k, v) for k, v in file_values.items() if k != 'preset'))
            if unused:
                logger.warning("Ignoring unknown configuration keys: {}".format(', '.join(sorted(unused))))
            config.update(**dict((key, value) for key, value in vars(args).items()
                                 if key not in ('command', 'study', 'config', 'preset')))
        configure_logging(config.verbosity)
        if config.out is None:
            parser.error("--out is required for {}".format(args.command))

        workers = worker_count()
        if args.command == 'diagnose':
            return run_diagnose(config)
        if args.command == 'recover':
            return run_recover(config)
        if args.study == 'manufactured':
            return run_manufactured(config, workers)
        return run_pde(config, workers)
    except Exception as exc:  # pylint: disable=broad-except
        logger.error("{} failed: {}".format(args.command, exc))
        print(json.dumps({'error': exc.__class__.__name__, 'message': str(exc)}), file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
