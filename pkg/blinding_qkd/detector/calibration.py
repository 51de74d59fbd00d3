"""Simulated blinded detector and re-runs of the gate-by-gate calibration."""
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from blinding_qkd.detector.response import (
    ControlEnergies,
    LinearModeResponse,
    click_probability_linear,
    full_control_condition,
)
from blinding_qkd.detector.timeline import GateTag, GateTimeline
from blinding_qkd.errors import CalibrationAmbiguousError, GridTooNarrowError
from blinding_qkd.observability.metrics import record_calibration
from blinding_qkd.params import photons_to_joules

logger = logging.getLogger(__name__)

PROBE_PHOTONS = 67
DEFAULT_PROBE_ENERGY = photons_to_joules(PROBE_PHOTONS)

# E_always >= 2 E_never: blinded but only partly controllable
PARTIAL_CONTROL_RESPONSE = LinearModeResponse(gain_slope=1e12, noise_halfwidth=2.0, comparator_threshold=3.5)


@dataclass
class SimulatedDetector:
    """
    Gate-indexed detector: Geiger mode on NORMAL gates, linear mode on blinded
    gates, silent during dead time, forced click on the group-initial gate.
    """
    timeline: GateTimeline
    controllable_response: LinearModeResponse = field(default_factory=LinearModeResponse)
    uncontrollable_response: LinearModeResponse = field(default_factory=lambda: PARTIAL_CONTROL_RESPONSE)
    geiger_efficiency: float = 0.1
    dark_count_per_gate: float = 5e-6
    seed: Optional[int] = None

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)

    def response_at(self, gate_index: int) -> Optional[LinearModeResponse]:
        tag = self.timeline.tags[gate_index]
        if tag == GateTag.BLINDED_CONTROLLABLE:
            return self.controllable_response
        if tag == GateTag.BLINDED_UNCONTROLLABLE:
            return self.uncontrollable_response
        return None

    def fire(self, gate_index: int, energy: float, trials: int = 1) -> int:
        """Send `trials` trigger pulses of `energy` joules at one gate; return the click count."""
        tag = self.timeline.tags[gate_index]
        if tag == GateTag.BLIND_PULSE:
            return trials
        if tag == GateTag.DEAD:
            return 0

        resp = self.response_at(gate_index)
        if resp is not None:
            noise = self.rng.uniform(-resp.noise_halfwidth, resp.noise_halfwidth, size=trials)
            amplitude = resp.gain_slope * energy + noise
            return int(np.count_nonzero(amplitude > resp.comparator_threshold))

        photons = energy / photons_to_joules(1.0)
        p_click = 1.0 - (1.0 - self.dark_count_per_gate) * np.exp(-self.geiger_efficiency * photons)
        return int(self.rng.binomial(trials, p_click))


def calibrate_blinded_period(
    detector: SimulatedDetector,
    probe_energy: float = DEFAULT_PROBE_ENERGY,
    repeats: int = 20,
) -> int:
    """
    Walk a weak probe pulse gate by gate from the end of the dead time and
    count the gates where it never clicks.

    Raises:
        CalibrationAmbiguousError: If the probe could click in linear mode,
            or never clicks even after the blinded window.
    """
    for resp in (detector.controllable_response, detector.uncontrollable_response):
        if click_probability_linear(probe_energy, resp) > 0:
            record_calibration('blinded_period', 'ambiguous')
            raise CalibrationAmbiguousError(
                f"Probe energy {probe_energy:.3e} J can click a blinded gate"
            )

    start = detector.timeline.blinded_start
    for gate in range(start, len(detector.timeline)):
        if detector.fire(gate, probe_energy, repeats) > 0:
            blinded = gate - start
            logger.info(f"Blinded period calibrated: {blinded} gates after gate {start}")
            record_calibration('blinded_period', 'ok')
            return blinded

    record_calibration('blinded_period', 'ambiguous')
    raise CalibrationAmbiguousError("Probe never clicked; it is too weak to find the blinded boundary")


def calibrate_control_energies(
    detector: SimulatedDetector,
    gate_index: int,
    energy_grid: Sequence[float],
    trials: int = 1000,
) -> ControlEnergies:
    """
    Estimate E_never / E_half / E_always at one gate from click frequencies
    on an increasing energy grid.

    Raises:
        GridTooNarrowError: If no grid energy gives 0% or none gives 100%.
    """
    grid = np.asarray(energy_grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("energy_grid must be strictly increasing with at least two points")
    if trials < 1000:
        raise ValueError("at least 1000 trials per energy are required")

    prob = np.array([detector.fire(gate_index, e, trials) / trials for e in grid])
    never = np.flatnonzero(prob == 0.0)
    always = np.flatnonzero(prob == 1.0)
    if never.size == 0 or always.size == 0:
        record_calibration('control_energies', 'grid_too_narrow')
        raise GridTooNarrowError(
            f"Grid [{grid[0]:.3e}, {grid[-1]:.3e}] J does not bracket the click transition at gate {gate_index}"
        )

    e_never = grid[never[-1]]
    e_always = grid[always[0]]
    e_half = grid[int(np.argmin(np.abs(prob - 0.5)))]
    e_half = min(max(e_half, e_never), e_always)
    record_calibration('control_energies', 'ok')
    return ControlEnergies(e_always=e_always, e_half=e_half, e_never=e_never)


@dataclass(frozen=True)
class GateCalibration:
    gate_index: int
    energies: ControlEnergies

    @property
    def fully_controllable(self) -> bool:
        return full_control_condition(self.energies)


def calibrate_window(
    detector: SimulatedDetector,
    energy_grid: Sequence[float],
    gates: Iterable[int],
    trials: int = 1000,
) -> List[GateCalibration]:
    """Run the energy calibration over several gates of the blinded window."""
    results = []
    for gate in gates:
        energies = calibrate_control_energies(detector, gate, energy_grid, trials)
        results.append(GateCalibration(gate_index=int(gate), energies=energies))
    controllable = sum(r.fully_controllable for r in results)
    logger.info(f"Calibrated {len(results)} gates, {controllable} fully controllable")
    return results


def sample_blinded_gates(timeline: GateTimeline, count: int = 16) -> List[int]:
    """Evenly spaced gate indices across the blinded window."""
    blinded = np.flatnonzero(
        (timeline.tags == GateTag.BLINDED_CONTROLLABLE) | (timeline.tags == GateTag.BLINDED_UNCONTROLLABLE)
    )
    if blinded.size == 0:
        return []
    picks = np.unique(np.linspace(0, blinded.size - 1, num=min(count, blinded.size)).round().astype(int))
    return [int(blinded[i]) for i in picks]
