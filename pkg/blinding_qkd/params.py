"""Protocol constants, calibration dataset and gate-count window profiles."""
import math
import logging
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict

from blinding_qkd.errors import ProfileError
from blinding_qkd.models import AnalysisConfig, AttackWindowProfile, BlindingConfig, DetectorTiming

logger = logging.getLogger(__name__)

PLANCK = 6.62607015e-34
LIGHT_SPEED = 299792458.0
WAVELENGTH = 1550e-9
PHOTON_ENERGY = PLANCK * LIGHT_SPEED / WAVELENGTH


class CalibrationRow(BaseModel):
    """Measured blinded window and monitor reading for one cycle count (2 ms interval)."""
    model_config = ConfigDict(frozen=True)

    cycle_count: int
    blinded_period: float
    controllable_gates: Optional[int]
    reported_current: float


# 250 and 300 cycles have no measured controllable range.
CALIBRATION_ROWS: Tuple[CalibrationRow, ...] = (
    CalibrationRow(cycle_count=250, blinded_period=2.025e-6, controllable_gates=None, reported_current=1.8e-6),
    CalibrationRow(cycle_count=300, blinded_period=20.025e-6, controllable_gates=None, reported_current=1.8e-6),
    CalibrationRow(cycle_count=350, blinded_period=45.025e-6, controllable_gates=72, reported_current=1.9e-6),
    CalibrationRow(cycle_count=400, blinded_period=100.05e-6, controllable_gates=150, reported_current=1.9e-6),
    CalibrationRow(cycle_count=450, blinded_period=135.05e-6, controllable_gates=330, reported_current=2.0e-6),
    CalibrationRow(cycle_count=500, blinded_period=195.05e-6, controllable_gates=690, reported_current=2.1e-6),
)
CALIBRATION_INTERVAL = 2e-3


def calibration_row(cycle_count: int) -> CalibrationRow:
    for row in CALIBRATION_ROWS:
        if row.cycle_count == cycle_count:
            return row
    known = ', '.join(str(r.cycle_count) for r in CALIBRATION_ROWS)
    raise ValueError(f"No calibration data for {cycle_count} cycles (known: {known})")


def _gate_count(duration: float, gate_frequency: float) -> int:
    # Round half up
    return int(math.floor(duration * gate_frequency + 0.5))


def derive_window_profile(
    timing: DetectorTiming,
    blinding: BlindingConfig,
    blinded_period: float,
    controllable_gates: int,
) -> AttackWindowProfile:
    """
    Convert timing quantities into the gate counts of one blinding interval.

    Args:
        timing: Detector gating parameters
        blinding: Blinding-group schedule (its interval sets N_interval)
        blinded_period: Blinded time after the dead time (seconds)
        controllable_gates: Number of fully controllable gates

    Returns:
        AttackWindowProfile with alpha and beta

    Raises:
        ValueError: For negative durations or counts
        ProfileError: If the counts do not fit inside the interval
    """
    if blinded_period < 0:
        raise ValueError(f"blinded_period must be >= 0, got {blinded_period}")
    if controllable_gates < 0:
        raise ValueError(f"controllable_gates must be >= 0, got {controllable_gates}")

    n_interval = _gate_count(blinding.interval, timing.gate_frequency)
    n_dead = _gate_count(timing.dead_time, timing.gate_frequency)
    n_blind = _gate_count(blinded_period, timing.gate_frequency)
    n_control = int(controllable_gates)

    if n_blind + n_dead > n_interval:
        raise ProfileError(f"n_blind + n_dead = {n_blind + n_dead} exceeds n_interval = {n_interval}")
    if n_control > n_blind:
        raise ProfileError(f"n_control = {n_control} exceeds n_blind = {n_blind}")

    profile = AttackWindowProfile(n_interval=n_interval, n_blind=n_blind, n_dead=n_dead, n_control=n_control)
    logger.debug(
        f"Window profile: N_interval={n_interval} N_dead={n_dead} N_blind={n_blind} "
        f"N_control={n_control} alpha={profile.alpha:.6g} beta={profile.beta:.6g}"
    )
    return profile


def profile_from_config(config: AnalysisConfig) -> AttackWindowProfile:
    return derive_window_profile(
        config.timing(), config.blinding(), config.blinded_period_s, config.controllable_gates,
    )


def profile_for_row(row: CalibrationRow, timing: Optional[DetectorTiming] = None) -> AttackWindowProfile:
    """Window profile of a built-in calibration row at the 2 ms interval."""
    timing = timing or DetectorTiming()
    blinding = BlindingConfig(
        cycle_count=row.cycle_count, interval=CALIBRATION_INTERVAL, pulse_rate=timing.gate_frequency,
    )
    return derive_window_profile(timing, blinding, row.blinded_period, row.controllable_gates or 0)


def channel_transmittance(length_km: float, loss_coeff: float) -> float:
    """Fiber transmittance 10^(-loss_coeff * L / 10)."""
    if length_km < 0:
        raise ValueError(f"Channel length must be >= 0, got {length_km}")
    return 10.0 ** (-loss_coeff * length_km / 10.0)


def photons_to_joules(photons: float) -> float:
    return photons * PHOTON_ENERGY


def joules_to_photons(energy: float) -> float:
    return energy / PHOTON_ENERGY
