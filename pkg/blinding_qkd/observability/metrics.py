"""Prometheus metrics for analysis and simulation runs."""
from prometheus_client import Counter, Histogram, generate_latest, REGISTRY

# Distance sweeps
sweep_points_total = Counter(
    'sweep_points_total',
    'Total number of distance points evaluated',
    ['case']
)

# Crossover root finding
crossover_searches_total = Counter(
    'crossover_searches_total',
    'Total number of crossover searches',
    ['kind', 'found']
)

# Monte Carlo
montecarlo_intervals_total = Counter(
    'montecarlo_intervals_total',
    'Total number of blinding intervals simulated'
)

montecarlo_abs_z_score = Histogram(
    'montecarlo_abs_z_score',
    'Absolute z-score of simulated vs analytic statistics',
    buckets=(0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0)
)

# Photocurrent monitor
monitor_evaluations_total = Counter(
    'monitor_evaluations_total',
    'Total number of monitor alarm decisions',
    ['alarm']
)

# Detector calibration
calibration_runs_total = Counter(
    'calibration_runs_total',
    'Total number of simulated calibration runs',
    ['kind', 'outcome']
)

# CLI
cli_runs_total = Counter(
    'cli_runs_total',
    'Total number of CLI invocations',
    ['subcommand', 'exit_code']
)


def record_sweep_point(case: str) -> None:
    sweep_points_total.labels(case=case).inc()


def record_crossover(kind: str, found: bool) -> None:
    crossover_searches_total.labels(kind=kind, found=str(found).lower()).inc()


def record_montecarlo(intervals: int) -> None:
    montecarlo_intervals_total.inc(intervals)


def record_z_score(z: float) -> None:
    montecarlo_abs_z_score.observe(abs(z))


def record_alarm(alarm: bool) -> None:
    monitor_evaluations_total.labels(alarm=str(alarm).lower()).inc()


def record_calibration(kind: str, outcome: str) -> None:
    calibration_runs_total.labels(kind=kind, outcome=outcome).inc()


def record_cli_run(subcommand: str, exit_code: int) -> None:
    cli_runs_total.labels(subcommand=subcommand, exit_code=str(exit_code)).inc()


def get_metrics_text() -> str:
    """
    Get Prometheus metrics in text format.

    Returns:
        Prometheus plaintext format string
    """
    return generate_latest(REGISTRY).decode('utf-8')
