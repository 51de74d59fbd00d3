"""Pytest configuration and shared fixtures for the blinding analysis tests."""
import pytest

from blinding_qkd.detector.timeline import build_timeline
from blinding_qkd.models import BlindingConfig, DetectorTiming, ProtocolParams
from blinding_qkd.monitor.blinding import fit_charge_per_pulse
from blinding_qkd.monitor.photocurrent import MonitorParams
from blinding_qkd.params import CALIBRATION_ROWS, calibration_row, profile_for_row


@pytest.fixture
def params():
    """Default decoy-state link parameters."""
    return ProtocolParams()


@pytest.fixture
def timing():
    return DetectorTiming()


@pytest.fixture
def profile_500():
    """Window profile of the 500-cycle calibration row."""
    return profile_for_row(calibration_row(500))


@pytest.fixture
def table_profiles():
    """Window profiles of every calibration row, keyed by cycle count."""
    return {row.cycle_count: profile_for_row(row) for row in CALIBRATION_ROWS}


@pytest.fixture
def blinding_500():
    return BlindingConfig(cycle_count=500)


@pytest.fixture
def timeline_500(profile_500, blinding_500):
    return build_timeline(profile_500, blinding_500)


@pytest.fixture
def monitor_params():
    """Monitor constants with the charge fitted to the calibration readings."""
    return MonitorParams(charge_per_pulse=fit_charge_per_pulse(CALIBRATION_ROWS))
