"""Command-line entry point for the blinding attack analysis."""
import io
import sys
import time
import argparse
import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from blinding_qkd.analysis.scan import crossover_table, find_crossovers, length_grid, qber_curves, sweep
from blinding_qkd.config import apply_overrides, load_config, parse_overrides
from blinding_qkd.detector.calibration import (
    SimulatedDetector,
    calibrate_blinded_period,
    calibrate_window,
    sample_blinded_gates,
)
from blinding_qkd.detector.timeline import build_timeline
from blinding_qkd.errors import BlindingQKDError, ConfigError, ProfileError
from blinding_qkd.models import AnalysisConfig, AttackWindowProfile
from blinding_qkd.monitor.blinding import constant_blinding_curve, fit_charge_per_pulse, monitor_suite
from blinding_qkd.monitor.photocurrent import MonitorParams
from blinding_qkd.observability.logging import RunContextFilter, setup_logging
from blinding_qkd.observability.metrics import get_metrics_text, record_cli_run
from blinding_qkd.output import writers
from blinding_qkd.params import CALIBRATION_ROWS, calibration_row, profile_from_config
from blinding_qkd.simulation.montecarlo import agreement_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE = 3
EXIT_IO = 4

SUBCOMMANDS = ('sweep', 'crossover', 'montecarlo', 'monitor', 'calibrate', 'qber')

CALIBRATION_GRID = np.arange(1, 161) * 0.05e-12
CONSTANT_BLINDING_INTERVALS = tuple(k * 2e-6 for k in range(1, 11))
CONSTANT_BLINDING_CYCLES = (1, 2, 3)


class CommandSpec(BaseModel):
    """One parsed CLI invocation."""
    model_config = ConfigDict(frozen=True)

    subcommand: str
    config_path: Optional[str] = None
    output_path: Optional[str] = None
    overrides: Dict[str, object] = Field(default_factory=dict)
    seed: int = 0


class CommandResult(BaseModel):
    exit_code: int = EXIT_OK
    text: str = ''
    # Additional files keyed by path
    side_outputs: Dict[str, str] = Field(default_factory=dict)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', metavar='PATH', help='YAML or JSON configuration file')
    common.add_argument('--out', metavar='PATH', help='output file (default: stdout)')
    common.add_argument('--cycles', type=int, choices=[r.cycle_count for r in CALIBRATION_ROWS],
                        help='use the built-in calibration row for this cycle count')
    common.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                        help='override a configuration key (repeatable)')
    common.add_argument('--seed', type=int, default=0, help='RNG seed')
    common.add_argument('--l-start', type=float, default=0.0, help='first channel length (km)')
    common.add_argument('--l-end', type=float, default=170.0, help='last channel length (km)')
    common.add_argument('--l-step', type=float, default=0.25, help='channel length step (km)')
    common.add_argument('--intervals', type=int, default=100_000, help='Monte Carlo blinding intervals')
    common.add_argument('--no-attack', action='store_true', help='analyse the link without Eve')
    common.add_argument('--all-profiles', action='store_true', help='crossovers for every calibration row')
    common.add_argument('--lengths', default='30,50,100', help='Monte Carlo channel lengths (km)')
    common.add_argument('--constant-blinding-out', metavar='PATH', help='constant-blinding energy CSV')
    common.add_argument('--trials', type=int, default=1000, help='calibration trials per energy')
    common.add_argument('--metrics-out', metavar='PATH', help='write Prometheus metrics after the run')
    common.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])

    parser = argparse.ArgumentParser(
        prog='blinding-qkd',
        description='Pulse-illumination blinding attack analysis for decoy-state BB84',
    )
    subparsers = parser.add_subparsers(dest='subcommand', required=True, metavar='SUBCOMMAND')
    helps = {
        'sweep': 'key rates over channel length (CSV)',
        'crossover': 'overestimation and insecurity crossover distances (YAML)',
        'montecarlo': 'Monte Carlo agreement with the closed forms (YAML)',
        'monitor': 'photocurrent monitor readings and alarms (CSV)',
        'calibrate': 'simulated detector calibration (CSV)',
        'qber': 'signal QBER with and without the attack (CSV)',
    }
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_config(spec: CommandSpec, cycles: Optional[int] = None) -> AnalysisConfig:
    """Defaults, then the config file, then the calibration row, then --set overrides."""
    config = load_config(spec.config_path, use_env=False)
    if cycles is not None:
        row = calibration_row(cycles)
        config = apply_overrides(config, {
            'cycle_count': row.cycle_count,
            'blinded_period_s': row.blinded_period,
            'controllable_gates': row.controllable_gates or 0,
        })
    return apply_overrides(config, spec.overrides)


def _profile(args: argparse.Namespace, config: AnalysisConfig) -> AttackWindowProfile:
    if args.no_attack:
        return AttackWindowProfile.no_attack(round(config.interval_s * config.gate_frequency_hz))
    try:
        return profile_from_config(config)
    except ProfileError as e:
        raise ConfigError(f"Invalid blinding window: {e}") from e


def _header(args: argparse.Namespace, config: AnalysisConfig, **extra) -> List[str]:
    return writers.config_header(
        config, subcommand=args.subcommand, mode='no-attack' if args.no_attack else 'attack', **extra,
    )


def _run_sweep(args, config: AnalysisConfig) -> CommandResult:
    rows = sweep(_profile(args, config), config.protocol(), args.l_start, args.l_end, args.l_step)
    out = io.StringIO()
    writers.write_sweep_csv(out, rows, _header(args, config, l_start=args.l_start, l_end=args.l_end, l_step=args.l_step))
    return CommandResult(text=out.getvalue())


def _run_crossover(args, config: AnalysisConfig) -> CommandResult:
    params = config.protocol()
    if args.all_profiles:
        table = crossover_table(params, timing=config.timing(), l_min=args.l_start, l_max=args.l_end)
        document = {'profiles': [writers.crossover_document(e.report, e.cycle_count) for e in table]}
    else:
        report = find_crossovers(_profile(args, config), params, args.l_start, args.l_end)
        document = writers.crossover_document(report, None if args.no_attack else config.cycle_count)
    out = io.StringIO()
    writers.write_yaml(out, document, _header(args, config))
    return CommandResult(text=out.getvalue())


def _run_montecarlo(args, config: AnalysisConfig) -> CommandResult:
    try:
        lengths = [float(x) for x in args.lengths.split(',') if x.strip()]
    except ValueError as e:
        raise ConfigError(f"--lengths must be comma-separated numbers: {args.lengths}") from e
    if args.intervals < 1:
        raise ConfigError("--intervals must be >= 1")

    points = agreement_suite(_profile(args, config), config.protocol(), lengths, args.intervals, args.seed)
    document = writers.agreement_document(points)
    out = io.StringIO()
    writers.write_yaml(out, document, _header(args, config, seed=args.seed, intervals=args.intervals))
    if not document['passed']:
        logger.error("Monte Carlo disagrees with the closed forms beyond 4 sigma")
        return CommandResult(exit_code=EXIT_FAILURE, text=out.getvalue())
    return CommandResult(text=out.getvalue())


def _run_monitor(args, config: AnalysisConfig) -> CommandResult:
    m = MonitorParams(charge_per_pulse=fit_charge_per_pulse(CALIBRATION_ROWS))
    rows = monitor_suite(m, interval=config.interval_s)
    header = _header(args, config, charge_per_pulse_c=f"{m.charge_per_pulse:.8e}")

    out = io.StringIO()
    writers.write_monitor_csv(out, rows, header)
    result = CommandResult(text=out.getvalue())

    if args.constant_blinding_out:
        points = constant_blinding_curve(CONSTANT_BLINDING_INTERVALS, CONSTANT_BLINDING_CYCLES, m)
        side = io.StringIO()
        writers.write_constant_blinding_csv(side, points, header)
        result.side_outputs[args.constant_blinding_out] = side.getvalue()

    if any(r.unexpected for r in rows):
        result.exit_code = EXIT_FAILURE
    return result


def _run_calibrate(args, config: AnalysisConfig) -> CommandResult:
    if args.trials < 1000:
        raise ConfigError("--trials must be >= 1000")
    profile = _profile(args, config)
    timeline = build_timeline(profile, config.blinding())
    detector = SimulatedDetector(timeline, dark_count_per_gate=config.timing().dark_count_per_gate, seed=args.seed)

    measured = calibrate_blinded_period(detector)
    results = calibrate_window(detector, CALIBRATION_GRID, sample_blinded_gates(timeline), args.trials)
    round_trip = measured == profile.n_blind

    header = _header(
        args, config, seed=args.seed, trials=args.trials,
        blinded_period_gates=measured, configured_n_blind=profile.n_blind,
        round_trip='pass' if round_trip else 'fail',
    )
    out = io.StringIO()
    writers.write_calibration_csv(out, results, header)
    if not round_trip:
        logger.error(f"Calibrated blinded period {measured} gates differs from configured {profile.n_blind}")
        return CommandResult(exit_code=EXIT_FAILURE, text=out.getvalue())
    return CommandResult(text=out.getvalue())


def _run_qber(args, config: AnalysisConfig) -> CommandResult:
    lengths = length_grid(args.l_start, args.l_end, args.l_step)
    rows = qber_curves(_profile(args, config), config.protocol(), lengths)
    out = io.StringIO()
    writers.write_qber_csv(out, rows, _header(args, config))
    return CommandResult(text=out.getvalue())


HANDLERS: Dict[str, Callable[[argparse.Namespace, AnalysisConfig], CommandResult]] = {
    'sweep': _run_sweep,
    'crossover': _run_crossover,
    'montecarlo': _run_montecarlo,
    'monitor': _run_monitor,
    'calibrate': _run_calibrate,
    'qber': _run_qber,
}


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, 'w', newline='') as f:
        f.write(text)


def _check_arguments(args: argparse.Namespace) -> None:
    if args.l_step <= 0:
        raise ConfigError(f"--l-step must be positive, got {args.l_step}")
    if args.l_start < 0:
        raise ConfigError(f"--l-start must be >= 0, got {args.l_start}")


def run(spec: CommandSpec, args: argparse.Namespace) -> int:
    """
    Execute one parsed command and write its outputs; returns the exit status.

    Only configuration and argument errors map to exit 2. Any other
    ValueError, including a result model rejecting its own fields, is a
    failed check.
    """
    started = time.perf_counter()
    try:
        _check_arguments(args)
        config = resolve_config(spec, args.cycles)
        result = HANDLERS[spec.subcommand](args, config)
        _write(spec.output_path, result.text)
        for path, text in result.side_outputs.items():
            _write(path, text)
        exit_code = result.exit_code
    except ConfigError as e:
        logger.error(f"Configuration error: {e}", exc_info=True)
        exit_code = EXIT_CONFIG
    except OSError as e:
        logger.error(f"I/O error: {e}", exc_info=True)
        exit_code = EXIT_IO
    except BlindingQKDError as e:
        logger.error(f"{e.code}: {e}", exc_info=True)
        exit_code = EXIT_FAILURE
    except ValueError as e:
        logger.error(f"Check failed: {e}", exc_info=True)
        exit_code = EXIT_FAILURE

    record_cli_run(spec.subcommand, exit_code)
    logger.info(
        f"{spec.subcommand} finished with exit code {exit_code}",
        extra={'duration_ms': round((time.perf_counter() - started) * 1000, 1)},
    )
    return exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(getattr(logging, args.log_level))
    context = RunContextFilter(subcommand=args.subcommand, cycle_count=args.cycles, seed=args.seed)
    for handler in logging.getLogger().handlers:
        handler.addFilter(context)

    try:
        overrides = parse_overrides(args.overrides)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        record_cli_run(args.subcommand, EXIT_CONFIG)
        return EXIT_CONFIG

    spec = CommandSpec(
        subcommand=args.subcommand,
        config_path=args.config,
        output_path=args.out,
        overrides=overrides,
        seed=args.seed,
    )
    exit_code = run(spec, args)

    if args.metrics_out:
        try:
            _write(args.metrics_out, get_metrics_text())
        except OSError as e:
            logger.error(f"Cannot write metrics: {e}")
            return EXIT_IO
    return exit_code
