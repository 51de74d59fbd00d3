"""Phenomenological photocurrent of a pulse-blinded detector and the monitor filter."""
import math
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.signal import lfilter, lfilter_zi

from blinding_qkd.errors import InsufficientSpanError, TraceTooLargeError
from blinding_qkd.models import BlindingConfig
from blinding_qkd.observability.metrics import record_alarm

logger = logging.getLogger(__name__)

MAX_TRACE_SAMPLES = 20_000_000
MIN_AVERAGING_PERIODS = 4


class MonitorParams(BaseModel):
    """Photocurrent monitor and charge-injection constants."""
    model_config = ConfigDict(frozen=True)

    baseline_current: float = 1.4e-6
    alarm_threshold: float = 10e-6
    constant_blind_threshold: float = 31e-6
    charge_per_pulse: float = 2.8e-12
    reference_pulse_energy: float = 13.32e-12
    decay_tau: float = 1e-6
    cutoff_freq: float = 1e4
    # Upper bound for the constant-blinding energy search (J per group)
    max_group_energy: float = 1e-6

    @model_validator(mode='after')
    def thresholds_ordered(self):
        if not 0 <= self.baseline_current < self.alarm_threshold < self.constant_blind_threshold:
            raise ValueError(
                'need 0 <= baseline_current < alarm_threshold < constant_blind_threshold'
            )
        for name in ('charge_per_pulse', 'reference_pulse_energy', 'decay_tau', 'cutoff_freq', 'max_group_energy'):
            if getattr(self, name) <= 0:
                raise ValueError(f'{name} must be positive')
        return self

    @property
    def filter_time_constant(self) -> float:
        return 1.0 / (2.0 * math.pi * self.cutoff_freq)

    def charge_for(self, pulse_energy: float) -> float:
        """Charge injected by one pulse; linear in energy."""
        return self.charge_per_pulse * pulse_energy / self.reference_pulse_energy


@dataclass(frozen=True)
class PhotocurrentTrace:
    """Uniformly sampled detector photocurrent (A), first sample at t=0."""
    sample_period: float
    samples: np.ndarray
    group_interval: Optional[float] = None

    def __post_init__(self):
        if self.sample_period <= 0:
            raise ValueError('sample_period must be positive')
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ValueError('trace needs at least one sample')
        if np.any(self.samples < 0):
            raise ValueError('photocurrent samples must be non-negative')

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.samples.size * self.sample_period


def default_sample_period(pulse_rate: float) -> float:
    """Four samples per pulse spacing."""
    return 1.0 / (4.0 * pulse_rate)


def group_pulse_times(n_groups: int, cycles: int, interval: float, pulse_rate: float) -> np.ndarray:
    """Start times of every pulse in `n_groups` consecutive groups."""
    offsets = np.arange(cycles) / pulse_rate
    starts = np.arange(n_groups) * interval
    return (starts[:, None] + offsets[None, :]).ravel()


def synthesize_pulses(
    pulse_times: np.ndarray,
    charges: np.ndarray,
    duration: float,
    sample_period: float,
    m: MonitorParams,
    group_interval: Optional[float] = None,
) -> PhotocurrentTrace:
    """
    Sample i(t) = baseline + sum_k (q_k/tau) exp(-(t - t_k)/tau) for t_k <= t.

    Each pulse is deposited on the first sample at or after t_k with its exact
    exponential weight; the shared decay is then applied recursively.

    Raises:
        TraceTooLargeError: If the trace would exceed MAX_TRACE_SAMPLES.
    """
    n_samples = int(round(duration / sample_period))
    if n_samples > MAX_TRACE_SAMPLES:
        raise TraceTooLargeError(
            f"{n_samples} samples requested, limit is {MAX_TRACE_SAMPLES}"
        )
    n_samples = max(n_samples, 1)

    pulse_times = np.asarray(pulse_times, dtype=float)
    charges = np.broadcast_to(np.asarray(charges, dtype=float), pulse_times.shape)

    index = np.ceil(pulse_times / sample_period - 1e-9).astype(np.int64)
    index = np.maximum(index, 0)
    inside = index < n_samples
    lag = index[inside] * sample_period - pulse_times[inside]
    weights = charges[inside] / m.decay_tau * np.exp(-np.maximum(lag, 0.0) / m.decay_tau)

    impulses = np.bincount(index[inside], weights=weights, minlength=n_samples)
    decay = math.exp(-sample_period / m.decay_tau)
    excess = lfilter([1.0], [1.0, -decay], impulses)

    return PhotocurrentTrace(
        sample_period=sample_period,
        samples=m.baseline_current + excess,
        group_interval=group_interval,
    )


def synthesize_photocurrent(
    blinding: BlindingConfig,
    m: MonitorParams,
    n_groups: int,
    sample_period: Optional[float] = None,
) -> PhotocurrentTrace:
    """
    Photocurrent of `n_groups` blinding groups repeated every `blinding.interval`.

    Raises:
        ValueError: If n_groups < 0 or the sampling is coarser than a quarter pulse spacing.
        TraceTooLargeError: For overflow-scale configurations.
    """
    if n_groups < 0:
        raise ValueError(f"n_groups must be >= 0, got {n_groups}")
    limit = default_sample_period(blinding.pulse_rate)
    if sample_period is None:
        sample_period = limit
    if sample_period > limit * (1 + 1e-9):
        raise ValueError(f"sample_period {sample_period} s exceeds {limit} s")

    times = group_pulse_times(n_groups, blinding.cycle_count, blinding.interval, blinding.pulse_rate)
    charge = m.charge_for(blinding.pulse_energy)
    return synthesize_pulses(
        times, np.full(times.shape, charge), max(n_groups, 1) * blinding.interval,
        sample_period, m, group_interval=blinding.interval,
    )


def low_pass(trace: PhotocurrentTrace, m: MonitorParams) -> np.ndarray:
    """Single-pole low-pass at `cutoff_freq`, started in steady state on the first sample."""
    k = 1.0 - math.exp(-2.0 * math.pi * m.cutoff_freq * trace.sample_period)
    b, a = [k], [1.0, k - 1.0]
    zi = lfilter_zi(b, a) * trace.samples[0]
    filtered, _ = lfilter(b, a, trace.samples, zi=zi)
    return filtered


def steady_state_samples(trace: PhotocurrentTrace, m: MonitorParams) -> int:
    period = trace.group_interval or 5.0 * m.filter_time_constant
    settle = max(period, 5.0 * m.filter_time_constant)
    return int(math.ceil(settle / trace.sample_period - 1e-9))


def reported_current(trace: PhotocurrentTrace, m: MonitorParams) -> float:
    """
    Low-pass the trace and average it over whole group intervals once the
    filter has settled.

    Raises:
        InsufficientSpanError: If fewer than MIN_AVERAGING_PERIODS periods remain after settling.
    """
    period = trace.group_interval or 5.0 * m.filter_time_constant
    period_samples = max(int(round(period / trace.sample_period)), 1)
    settle = steady_state_samples(trace, m)
    periods = (len(trace) - settle) // period_samples
    if periods < MIN_AVERAGING_PERIODS:
        raise InsufficientSpanError(
            f"Trace of {trace.duration:.3e} s leaves {max(periods, 0)} averaging periods after "
            f"{settle * trace.sample_period:.3e} s settling, need {MIN_AVERAGING_PERIODS}"
        )

    filtered = low_pass(trace, m)
    window = filtered[settle:settle + periods * period_samples]
    return float(np.mean(window))


def groups_for_steady_state(interval: float, m: MonitorParams) -> int:
    """Number of groups whose trace `reported_current` can average."""
    settle = max(interval, 5.0 * m.filter_time_constant)
    return int(math.ceil(settle / interval)) + MIN_AVERAGING_PERIODS + 1


def schedule_current(blinding: BlindingConfig, m: MonitorParams, sample_period: Optional[float] = None) -> float:
    """Reported current of a periodic blinding schedule."""
    n_groups = groups_for_steady_state(blinding.interval, m)
    trace = synthesize_photocurrent(blinding, m, n_groups, sample_period)
    reported = reported_current(trace, m)
    logger.debug(
        f"{blinding.cycle_count} cycles of {blinding.pulse_energy:.3e} J every "
        f"{blinding.interval:.3e} s -> {reported * 1e6:.4f} uA"
    )
    return reported


def alarm(reported: float, m: MonitorParams) -> bool:
    """True iff the reported current reaches the alarm threshold."""
    if reported < 0:
        raise ValueError(f"reported current must be >= 0, got {reported}")
    raised = reported >= m.alarm_threshold
    record_alarm(raised)
    return raised


def reported_current_curve(
    interval: float,
    energies: Sequence[float],
    m: MonitorParams,
    cycles: int = 1,
    pulse_rate: float = 40e6,
) -> List[float]:
    """Reported current versus single-pulse energy at a fixed schedule."""
    return [
        schedule_current(
            BlindingConfig(cycle_count=cycles, pulse_energy=e, interval=interval, pulse_rate=pulse_rate), m,
        )
        for e in energies
    ]
