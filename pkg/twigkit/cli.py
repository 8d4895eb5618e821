"""Command-line interface for twigkit"""

import argparse
import dataclasses
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np
from rich import box
from rich.console import Console
from rich.table import Table
from rich.text import Text

from .classify import TwigReport, classify
from .config import Config, RunConfig
from .exceptions import ConfigurationError, TwigError
from .executor import SweepExecutor
from .integrate import SampleGrid, finite_difference_jacobian, integrate_with_sensitivities
from .modellist import list_models
from .models import ModelSystem, build_model, resolve_model
from .oracles import oracle_binding
from .output import TRAJECTORY_FILE, write_report_json, write_sweep_outputs, write_trajectories_csv
from .utils import format_number, parse_param_override, relative_discrepancy

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 2
EXIT_TOLERANCE = 3

VALIDATE_SAMPLES = 20
VALIDATE_TOLERANCE = 1e-4
VALIDATE_RTOL = 1e-10
VALIDATE_ATOL = 1e-12
VALIDATE_COLUMN_FLOOR = 1e-3


def setup_logging(verbose: bool = False) -> None:
    """Setup logging configuration"""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s' if verbose else '%(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )


def create_parser() -> argparse.ArgumentParser:
    """Create command-line argument parser"""
    parser = argparse.ArgumentParser(
        prog='twig',
        description='Time-widening Fisher information analysis of bifurcations in ODE models',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  twig analyze --config pitchfork.json
  twig analyze --config selkov.yaml --set b=0.5 --dump-trajectories
  twig validate --model saddle_node --tmax 5
  twig validate --model pitchfork_super --tmax 10 --order 2
  twig list-models
        """
    )

    parser.add_argument(
        '--verbose',
        action='store_true',
        help='Verbose output'
    )

    parser.add_argument(
        '--version',
        action='version',
        version=f'%(prog)s {__import__("twigkit").__version__}'
    )

    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')

    analyze = subparsers.add_parser('analyze', help='Run a TWIG sweep from a config file')
    analyze.add_argument(
        '--config',
        required=True,
        help='Run configuration (JSON or YAML)'
    )
    analyze.add_argument(
        '--set',
        action='append',
        dest='overrides',
        metavar='NAME=VALUE',
        help='Override a parameter value. Can be used multiple times.'
    )
    analyze.add_argument(
        '-o', '--outputs',
        help='Output directory (overrides the config)'
    )
    analyze.add_argument(
        '--dump-trajectories',
        action='store_true',
        help='Also write the final-horizon trajectory to trajectories.csv'
    )

    validate = subparsers.add_parser('validate', help='Cross-check sensitivities against oracles and finite differences')
    validate.add_argument(
        '--model',
        required=True,
        help='Registry model name'
    )
    validate.add_argument(
        '--tmax',
        type=float,
        required=True,
        help='Horizon to validate over'
    )
    validate.add_argument(
        '--order',
        type=int,
        default=0,
        help='Number of higher-order terms (default: 0)'
    )

    subparsers.add_parser('list-models', help='List the model registry')

    return parser


def _prepare_model(config: RunConfig) -> ModelSystem:
    model = resolve_model(config.model, config.order)
    if config.params:
        model = model.with_values(config.params)
    if config.fixed:
        model = model.with_fixed(config.fixed)
    return model


def _error_payload(errors: List[str], model: Any = None) -> Dict[str, Any]:
    return {'model': model if isinstance(model, str) else None, 'errors': errors}


def _write_error_report(outputs: str, errors: List[str], model: Any = None) -> None:
    os.makedirs(outputs, exist_ok=True)
    write_report_json(os.path.join(outputs, 'report.json'), _error_payload(errors, model))


def cmd_analyze(config: RunConfig, dump_trajectories: bool = False) -> int:
    """Sweep, classify and write eigenvalues.csv, participation.csv, report.json and rainbow.svg"""
    errors: List[str] = []
    try:
        model = _prepare_model(config)
        executor = SweepExecutor(config.sweep_config())
    except TwigError as e:
        logger.error(f"Configuration error: {e}")
        _write_error_report(config.outputs, [str(e)], config.model)
        return EXIT_ERROR

    params = model.default_params()
    try:
        sweep = executor.run(model, params)
    except TwigError as e:
        logger.error(f"Sweep failed: {e}")
        _write_error_report(config.outputs, [f"sweep: {e}"], model.name)
        return EXIT_ERROR
    if sweep.failure is not None:
        errors.append(f"horizon t_max={format_number(sweep.failure.t_max)}: {sweep.failure.message}")

    report: Optional[TwigReport] = None
    try:
        report = classify(sweep, config.tail_fraction, config.slope_tol,
                          config.frequency_share, config.dilation_alignment)
    except TwigError as e:
        errors.append(f"classification: {e}")
        logger.error(f"Classification failed: {e}")

    payload: Dict[str, Any]
    if report is not None:
        payload = dataclasses.replace(report, errors=tuple(errors)).to_dict()
    else:
        payload = _error_payload(list(errors), model.name)
    payload['seed'] = config.seed
    payload['fixed_point'] = sweep.fixed_point
    payload['section'] = sweep.section

    param, offsets = config.profile_offsets
    if offsets:
        entries = executor.profile(model, params, offsets, param=param, tail_fraction=config.tail_fraction,
                                   slope_tol=config.slope_tol, frequency_share=config.frequency_share,
                                   dilation_alignment=config.dilation_alignment)
        payload['near_bifurcation'] = [e.to_dict() for e in entries]
        for entry in entries:
            if entry.error:
                payload['errors'].append(f"near_bifurcation offset {format_number(entry.offset)}: {entry.error}")

    write_sweep_outputs(config.outputs, sweep, payload)

    if (dump_trajectories or config.dump_trajectories) and sweep.final_trajectory is not None:
        tj = sweep.final_trajectory
        path = os.path.join(config.outputs, TRAJECTORY_FILE)
        write_trajectories_csv(path, tj.grid.times, tj.raw_states, model.state_names)
        logger.info(f"Wrote {path}")

    if report is not None:
        logger.info(f"Codimension {report.codimension}; leading direction dominated by "
                    f"{report.directions[0].dominant_param}")
    if sweep.failure is not None:
        return EXIT_PARTIAL
    return EXIT_OK if report is not None else EXIT_ERROR


def _validation_rows(model: ModelSystem, t_max: float) -> List[Dict[str, Any]]:
    params = model.default_params()
    grid = SampleGrid(0.0, t_max, VALIDATE_SAMPLES)
    times = grid.times
    tj = integrate_with_sensitivities(model, params, grid, rtol=VALIDATE_RTOL, atol=VALIDATE_ATOL)
    rows = []

    binding = oracle_binding(model, params)
    if binding is not None and binding.singular_time is not None and t_max >= binding.singular_time:
        logger.warning(f"{model.name}: horizon reaches the closed-form singularity; oracle check skipped")
        binding = None
    if binding is not None:
        for name, column in binding.columns.items():
            expected = np.asarray(column(times), dtype=float)
            actual = tj.sensitivity(name, binding.component)
            error, (row, _) = relative_discrepancy(actual[:, None], expected[:, None],
                                                   column_floor=VALIDATE_COLUMN_FLOOR)
            rows.append({'check': 'oracle', 'param': name, 'error': error, 'time': float(times[row])})

    fd = finite_difference_jacobian(model, params, grid)
    n_obs = tj.n_observed
    for col, name in enumerate(tj.param_names):
        error, (row, _) = relative_discrepancy(tj.jacobian[:, col:col + 1], fd.jacobian[:, col:col + 1],
                                               column_floor=VALIDATE_COLUMN_FLOOR)
        rows.append({'check': 'finite-difference', 'param': name, 'error': error,
                     'time': float(times[row // n_obs])})
    return rows


def cmd_validate(model_name: str, t_max: float, order: int = 0, out: Optional[Console] = None,
                 tolerance: float = VALIDATE_TOLERANCE) -> int:
    """Compare integrated sensitivities with closed forms and finite differences"""
    out = out or Console()
    model = build_model(model_name, order)
    if not t_max > 0:
        raise ConfigurationError(f"--tmax must be positive, got {t_max}")
    rows = _validation_rows(model, t_max)

    table = Table(title=f"Sensitivity validation: [bold cyan]{model.name}[/bold cyan] to t={t_max:g}",
                  box=box.ROUNDED)
    table.add_column("CHECK", style="bold", no_wrap=True)
    table.add_column("PARAMETER", no_wrap=True)
    table.add_column("MAX REL ERROR", justify="right")
    table.add_column("AT t", justify="right")
    table.add_column("STATUS", justify="center")
    for row in rows:
        ok = row['error'] <= tolerance
        table.add_row(row['check'], row['param'], f"{row['error']:.3e}", f"{row['time']:.6g}",
                      Text("ok" if ok else "FAIL", style="green" if ok else "red"))
    out.print(table)
    if not model.has_ode:
        out.print("[dim]closed-form model: sensitivities come from the closed form directly[/dim]")

    worst = max(rows, key=lambda r: r['error'])
    if worst['error'] > tolerance:
        out.print(f"[red]Tolerance breach: {worst['check']} check on {worst['param']} at "
                  f"t={worst['time']:.6g} (relative error {worst['error']:.3e})[/red]")
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_list_models(out: Optional[Console] = None) -> int:
    """Print registry names, parameters, defaults and origins"""
    list_models(out or Console())
    return EXIT_OK


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    config = Config(args.config)
    if args.outputs:
        config.update({'outputs': args.outputs})
    if args.overrides:
        params = dict(config.get('params') or {})
        try:
            params.update(parse_param_override(spec) for spec in args.overrides)
        except ValueError as e:
            raise ConfigurationError(str(e))
        config.update({'params': params})
    return config.to_run_config()


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point"""
    parser = create_parser()
    args = parser.parse_args(argv)

    setup_logging(args.verbose or os.getenv('TWIG_VERBOSE', '').lower() in ('true', '1', 'yes', 'on'))

    if not args.command:
        parser.print_help()
        return EXIT_ERROR

    try:
        if args.command == 'analyze':
            return cmd_analyze(_load_run_config(args), dump_trajectories=args.dump_trajectories)
        if args.command == 'validate':
            return cmd_validate(args.model, args.tmax, args.order)
        return cmd_list_models()

    except TwigError as e:
        logger.error(f"twig error: {e}")
        return EXIT_ERROR
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
