"""Charge fit against measured monitor readings, constant-blinding search and the alarm suite."""
import logging
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.optimize import brentq

from blinding_qkd.errors import NotBlindableError, SingularFitError
from blinding_qkd.models import BlindingConfig
from blinding_qkd.monitor.photocurrent import (
    MonitorParams,
    alarm,
    default_sample_period,
    group_pulse_times,
    groups_for_steady_state,
    reported_current,
    schedule_current,
    synthesize_pulses,
)
from blinding_qkd.params import CALIBRATION_INTERVAL, CALIBRATION_ROWS, CalibrationRow

logger = logging.getLogger(__name__)

REFERENCE_PULSE_ENERGY = 13.32e-12

# Near-c.w. illumination: pulses back to back for almost the whole interval
CW_REFERENCE_CYCLES = 399
CW_REFERENCE_INTERVAL = 10e-6


def fit_charge_per_pulse(
    rows: Sequence[CalibrationRow],
    baseline: float = 1.4e-6,
    interval: float = CALIBRATION_INTERVAL,
) -> float:
    """
    Least-squares charge per pulse for reported = baseline + n_cycles * q / interval.

    Raises:
        SingularFitError: With fewer than two distinct cycle counts.
    """
    if len({r.cycle_count for r in rows}) < 2:
        raise SingularFitError("Need at least two rows with distinct cycle counts")

    rate = np.array([r.cycle_count / interval for r in rows], dtype=float)
    excess = np.array([r.reported_current - baseline for r in rows], dtype=float)
    solution, *_ = np.linalg.lstsq(rate[:, None], excess, rcond=None)
    charge = float(solution[0])
    residual = np.abs(rate * charge - excess)
    logger.info(f"Fitted charge per pulse {charge * 1e12:.4f} pC, max residual {residual.max() * 1e6:.4f} uA")
    return charge


def _group_current(
    interval: float,
    cycles: int,
    group_energy: float,
    m: MonitorParams,
    pulse_rate: float,
    sample_period: float,
) -> float:
    n_groups = groups_for_steady_state(interval, m)
    times = group_pulse_times(n_groups, cycles, interval, pulse_rate)
    charge = m.charge_for(group_energy / cycles)
    trace = synthesize_pulses(
        times, np.full(times.shape, charge), n_groups * interval, sample_period, m, group_interval=interval,
    )
    return reported_current(trace, m)


def constant_blinding_energy(
    interval: float,
    cycles_per_group: int,
    m: MonitorParams,
    pulse_rate: float = 40e6,
    sample_period: Optional[float] = None,
) -> float:
    """
    Smallest total group energy whose schedule reports at least the
    constant-blinding threshold.

    Raises:
        ValueError: If interval <= 0, cycles < 1 or the group does not fit the interval.
        NotBlindableError: If the threshold is not reached at m.max_group_energy.
    """
    if interval <= 0:
        raise ValueError(f"interval must be positive, got {interval}")
    if cycles_per_group < 1:
        raise ValueError(f"cycles_per_group must be >= 1, got {cycles_per_group}")
    if not interval > cycles_per_group / pulse_rate:
        raise ValueError(f"{cycles_per_group} pulses at {pulse_rate} Hz do not fit in {interval} s")

    sample_period = sample_period or default_sample_period(pulse_rate)

    def gap(energy: float) -> float:
        return _group_current(interval, cycles_per_group, energy, m, pulse_rate, sample_period) \
            - m.constant_blind_threshold

    if gap(m.max_group_energy) < 0:
        raise NotBlindableError(
            f"{cycles_per_group}-cycle groups every {interval:.3e} s stay below "
            f"{m.constant_blind_threshold * 1e6:.1f} uA up to {m.max_group_energy:.3e} J"
        )

    energy = brentq(gap, 0.0, m.max_group_energy, xtol=1e-30, rtol=1e-6)
    logger.debug(f"Constant blinding at {interval:.3e} s, {cycles_per_group} cycles: {energy:.4e} J")
    return float(energy)


class ConstantBlindingPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    interval_s: float
    cycles: int
    energy_j: float


def constant_blinding_curve(
    intervals: Sequence[float],
    cycles: Sequence[int],
    m: MonitorParams,
    pulse_rate: float = 40e6,
) -> List[ConstantBlindingPoint]:
    """Constant-blinding group energy over an interval grid for each cycle split."""
    points = []
    for n in cycles:
        for interval in intervals:
            energy = constant_blinding_energy(interval, n, m, pulse_rate)
            points.append(ConstantBlindingPoint(interval_s=interval, cycles=n, energy_j=energy))
    return points


class MonitorRow(BaseModel):
    """One schedule of the monitor suite."""
    model_config = ConfigDict(frozen=True)

    cycle_count: int
    interval_s: float
    reported_current: float
    alarm: bool
    expected_alarm: bool

    @property
    def unexpected(self) -> bool:
        return self.alarm != self.expected_alarm


def monitor_suite(
    m: MonitorParams,
    rows: Sequence[CalibrationRow] = CALIBRATION_ROWS,
    interval: float = CALIBRATION_INTERVAL,
    pulse_energy: float = REFERENCE_PULSE_ENERGY,
    pulse_rate: float = 40e6,
) -> List[MonitorRow]:
    """
    Reported current and alarm flag for every calibration schedule (expected
    silent) plus the near-c.w. reference schedule (expected to alarm).
    """
    schedules = [(row.cycle_count, interval, False) for row in rows]
    schedules.append((CW_REFERENCE_CYCLES, CW_REFERENCE_INTERVAL, True))

    results = []
    for cycles, period, expected in schedules:
        blinding = BlindingConfig(
            cycle_count=cycles, pulse_energy=pulse_energy, interval=period, pulse_rate=pulse_rate,
        )
        reported = schedule_current(blinding, m)
        result = MonitorRow(
            cycle_count=cycles,
            interval_s=period,
            reported_current=reported,
            alarm=alarm(reported, m),
            expected_alarm=expected,
        )
        if result.unexpected:
            logger.warning(
                f"Unexpected monitor verdict for {cycles} cycles every {period:.3e} s: "
                f"{reported * 1e6:.3f} uA, alarm={result.alarm}"
            )
        results.append(result)
    return results
