"""CSV and YAML writers with provenance header comments."""
import csv
from enum import Enum
from typing import Any, Iterable, List, Mapping, Optional, Sequence, TextIO

import yaml

from blinding_qkd.analysis.scan import SWEEP_COLUMNS, CrossoverReport, QberRow, SweepRow
from blinding_qkd.config import CONFIG_KEYS
from blinding_qkd.detector.calibration import GateCalibration
from blinding_qkd.models import AnalysisConfig
from blinding_qkd.monitor.blinding import ConstantBlindingPoint, MonitorRow
from blinding_qkd.simulation.montecarlo import AgreementPoint


def format_number(value: Any) -> str:
    """Nine significant digits in scientific notation; empty for missing values."""
    if value is None:
        return ''
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return f"{value:.8e}"


def config_header(config: AnalysisConfig, **extra: Any) -> List[str]:
    """`key=value` lines of the effective configuration, extra run fields first."""
    lines = [f"{key}={value}" for key, value in extra.items() if value is not None]
    lines.extend(f"{key}={getattr(config, key)}" for key in CONFIG_KEYS)
    return lines


def _write_header(stream: TextIO, header_lines: Iterable[str]) -> None:
    for line in header_lines:
        stream.write(f"# {line}\n")


def write_csv(
    stream: TextIO,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    header_lines: Iterable[str] = (),
) -> None:
    _write_header(stream, header_lines)
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_number(v) for v in row])


def write_sweep_csv(stream: TextIO, rows: Sequence[SweepRow], header_lines: Iterable[str] = ()) -> None:
    write_csv(stream, SWEEP_COLUMNS, (row.values() for row in rows), header_lines)


def write_qber_csv(stream: TextIO, rows: Sequence[QberRow], header_lines: Iterable[str] = ()) -> None:
    write_csv(
        stream,
        ('length_km', 'e_mu_normal', 'e_mu_attack'),
        ((r.length_km, r.e_mu_normal, r.e_mu_attack) for r in rows),
        header_lines,
    )


def write_monitor_csv(stream: TextIO, rows: Sequence[MonitorRow], header_lines: Iterable[str] = ()) -> None:
    write_csv(
        stream,
        ('cycle_count', 'interval_s', 'reported_uA', 'alarm', 'expected_alarm'),
        ((r.cycle_count, r.interval_s, r.reported_current * 1e6, r.alarm, r.expected_alarm) for r in rows),
        header_lines,
    )


def write_constant_blinding_csv(
    stream: TextIO, points: Sequence[ConstantBlindingPoint], header_lines: Iterable[str] = (),
) -> None:
    write_csv(
        stream,
        ('interval_s', 'cycles', 'energy_j'),
        ((p.interval_s, p.cycles, p.energy_j) for p in points),
        header_lines,
    )


def _rounded(value: Optional[float]) -> Optional[float]:
    return None if value is None else float(f"{value:.8e}")


def crossover_document(report: CrossoverReport, cycle_count: Optional[int] = None) -> Mapping[str, Any]:
    doc = {} if cycle_count is None else {'cycle_count': cycle_count}
    for key, value in report.model_dump().items():
        doc[key] = _rounded(value)
    return doc


def agreement_document(points: Sequence[AgreementPoint]) -> Mapping[str, Any]:
    entries = []
    for point in points:
        entry = {
            'length_km': _rounded(point.length_km),
            'case': point.solution.case_tag.value,
            'p': _rounded(point.solution.p),
            'gamma': _rounded(point.solution.gamma),
            'intervals': point.intervals,
        }
        for check in point.checks:
            prefix = f"{'q' if check.quantity == 'gain' else 'eq'}_{check.state}"
            entry[f"{prefix}_emp"] = _rounded(check.empirical)
            entry[f"{prefix}_analytic"] = _rounded(check.analytic)
            entry[f"{prefix}_z_score"] = _rounded(check.z_score)
        entry['max_abs_z'] = _rounded(point.max_abs_z)
        entry['passed'] = point.passed
        entries.append(entry)
    return {'passed': all(p.passed for p in points), 'points': entries}


def write_yaml(stream: TextIO, document: Any, header_lines: Iterable[str] = ()) -> None:
    _write_header(stream, header_lines)
    yaml.safe_dump(document, stream, sort_keys=False, default_flow_style=False)


def write_calibration_csv(stream: TextIO, results: Sequence[GateCalibration], header_lines: Iterable[str] = ()) -> None:
    write_csv(
        stream,
        ('gate_index', 'e_never_j', 'e_half_j', 'e_always_j', 'fully_controllable'),
        (
            (r.gate_index, r.energies.e_never, r.energies.e_half, r.energies.e_always, r.fully_controllable)
            for r in results
        ),
        header_lines,
    )
