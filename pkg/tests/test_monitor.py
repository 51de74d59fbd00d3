"""Tests for the photocurrent model, monitor filter and constant-blinding search."""
import numpy as np
import pytest
from pydantic import ValidationError

from blinding_qkd.errors import InsufficientSpanError, NotBlindableError, SingularFitError, TraceTooLargeError
from blinding_qkd.models import BlindingConfig
from blinding_qkd.monitor.blinding import (
    constant_blinding_curve,
    constant_blinding_energy,
    fit_charge_per_pulse,
    monitor_suite,
)
from blinding_qkd.monitor.photocurrent import (
    MonitorParams,
    PhotocurrentTrace,
    alarm,
    reported_current,
    reported_current_curve,
    schedule_current,
    synthesize_photocurrent,
    synthesize_pulses,
)
from blinding_qkd.params import CALIBRATION_ROWS, CalibrationRow


class TestMonitorParams:
    """Test monitor constant invariants."""

    def test_defaults(self):
        m = MonitorParams()
        assert (m.baseline_current, m.alarm_threshold, m.constant_blind_threshold) == (1.4e-6, 10e-6, 31e-6)

    def test_threshold_order(self):
        with pytest.raises(ValidationError):
            MonitorParams(alarm_threshold=40e-6)

    def test_positive_time_constants(self):
        with pytest.raises(ValidationError):
            MonitorParams(decay_tau=0.0)


class TestSynthesis:
    """Test photocurrent synthesis."""

    def test_no_pulses_is_baseline(self):
        m = MonitorParams()
        trace = synthesize_photocurrent(BlindingConfig(cycle_count=1, interval=1e-5), m, n_groups=0)
        assert np.all(trace.samples == m.baseline_current)

    def test_single_pulse_charge_conservation(self):
        """Test that the excess current integrates to the injected charge."""
        m = MonitorParams()
        dt = 1e-9
        trace = synthesize_pulses(np.array([0.0]), np.array([2.8e-12]), 30e-6, dt, m)
        charge = np.sum(trace.samples - m.baseline_current) * dt
        assert charge == pytest.approx(2.8e-12, rel=1e-3)

    def test_periodic_mean(self):
        """Test the long-run mean excess of a 500-cycle schedule."""
        m = MonitorParams()
        trace = synthesize_photocurrent(BlindingConfig(cycle_count=500), m, n_groups=3)
        excess = np.mean(trace.samples) - m.baseline_current
        assert excess == pytest.approx(500 * 2.8e-12 / 2e-3, rel=0.01)

    def test_superposition(self):
        """Test that traces of disjoint pulse sets add sample-wise."""
        m = MonitorParams()
        dt = 2e-9
        a_times, a_charges = np.array([0.0, 1.3e-6, 4e-6]), np.array([1e-12, 2e-12, 3e-12])
        b_times, b_charges = np.array([0.7e-6, 5.1e-6]), np.array([4e-12, 0.5e-12])
        a = synthesize_pulses(a_times, a_charges, 20e-6, dt, m)
        b = synthesize_pulses(b_times, b_charges, 20e-6, dt, m)
        both = synthesize_pulses(
            np.concatenate([a_times, b_times]), np.concatenate([a_charges, b_charges]), 20e-6, dt, m,
        )
        np.testing.assert_allclose(both.samples, a.samples + b.samples - m.baseline_current, rtol=1e-12)

    def test_coarse_sampling_rejected(self):
        with pytest.raises(ValueError):
            synthesize_photocurrent(BlindingConfig(cycle_count=10), MonitorParams(), 1, sample_period=1e-8)

    def test_overflow_scale_rejected(self):
        with pytest.raises(TraceTooLargeError):
            synthesize_photocurrent(BlindingConfig(cycle_count=10, interval=1.0), MonitorParams(), 1)

    def test_negative_samples_rejected(self):
        with pytest.raises(ValueError):
            PhotocurrentTrace(sample_period=1e-9, samples=np.array([1e-6, -1e-6]))


class TestReportedCurrent:
    """Test the low-pass extraction."""

    def test_constant_trace(self):
        """Test that the filter passes DC unchanged."""
        trace = PhotocurrentTrace(sample_period=1e-7, samples=np.full(20000, 3.3e-6), group_interval=1e-4)
        assert reported_current(trace, MonitorParams()) == pytest.approx(3.3e-6, rel=1e-9)

    def test_constant_trace_without_interval(self):
        trace = PhotocurrentTrace(sample_period=1e-7, samples=np.full(10000, 2e-6))
        assert reported_current(trace, MonitorParams()) == pytest.approx(2e-6, rel=1e-9)

    def test_short_trace(self):
        """Test that a trace without room to settle is rejected."""
        m = MonitorParams()
        trace = synthesize_photocurrent(BlindingConfig(cycle_count=500), m, n_groups=2)
        with pytest.raises(InsufficientSpanError):
            reported_current(trace, m)

    @pytest.mark.parametrize('row', CALIBRATION_ROWS, ids=lambda r: f'{r.cycle_count}-cycle')
    def test_reproduces_calibration_readings(self, row, monitor_params):
        """Test each measured reading within 0.1 uA, none alarming."""
        reported = schedule_current(BlindingConfig(cycle_count=row.cycle_count), monitor_params)
        assert reported == pytest.approx(row.reported_current, abs=0.1e-6)
        assert not alarm(reported, monitor_params)

    def test_250_cycle_with_nominal_charge(self):
        """Test the linear charge model at the nominal 2.8 pC."""
        reported = schedule_current(BlindingConfig(cycle_count=250), MonitorParams())
        assert reported == pytest.approx(1.75e-6, abs=0.02e-6)

    def test_insensitive_to_filter_constants(self):
        """Test that the steady-state reading does not depend on tau or cutoff."""
        blinding = BlindingConfig(cycle_count=500)
        a = schedule_current(blinding, MonitorParams(decay_tau=1e-6, cutoff_freq=1e4))
        b = schedule_current(blinding, MonitorParams(decay_tau=3e-6, cutoff_freq=3e3))
        assert a == pytest.approx(b, rel=0.01)

    def test_non_increasing_in_interval(self):
        """Test that longer intervals at fixed group energy report less current."""
        m = MonitorParams()
        values = [schedule_current(BlindingConfig(cycle_count=1, interval=t), m) for t in (2e-6, 4e-6, 8e-6, 16e-6)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_non_decreasing_in_energy(self):
        m = MonitorParams()
        values = reported_current_curve(4e-6, [1e-12, 5e-12, 10e-12, 50e-12], m)
        assert all(a <= b for a, b in zip(values, values[1:]))


class TestAlarm:
    """Test the alarm comparison."""

    def test_threshold(self):
        m = MonitorParams()
        assert not alarm(2.1e-6, m)
        assert alarm(31e-6, m)
        assert alarm(10e-6, m)

    def test_negative_reading(self):
        with pytest.raises(ValueError):
            alarm(-1e-6, MonitorParams())


class TestChargeFit:
    """Test the least-squares charge fit."""

    def test_calibration_rows(self):
        """Test the fitted charge and residuals against the measured readings."""
        charge = fit_charge_per_pulse(CALIBRATION_ROWS)
        assert charge == pytest.approx(2.8e-12, rel=0.05)
        for row in CALIBRATION_ROWS:
            model = 1.4e-6 + row.cycle_count * charge / 2e-3
            assert abs(model - row.reported_current) <= 0.1e-6

    def test_exact_rows(self):
        rows = [
            CalibrationRow(cycle_count=n, blinded_period=0.0, controllable_gates=None,
                           reported_current=1.4e-6 + n * 1e-12 / 2e-3)
            for n in (100, 300)
        ]
        assert fit_charge_per_pulse(rows) == pytest.approx(1e-12, rel=1e-9)

    def test_single_row(self):
        with pytest.raises(SingularFitError):
            fit_charge_per_pulse(CALIBRATION_ROWS[:1])


class TestConstantBlinding:
    """Test the constant-blinding energy search."""

    def test_reaches_threshold(self):
        m = MonitorParams()
        energy = constant_blinding_energy(10e-6, 1, m)
        reached = schedule_current(BlindingConfig(cycle_count=1, pulse_energy=energy, interval=10e-6), m)
        assert reached == pytest.approx(m.constant_blind_threshold, rel=1e-4)

    def test_linear_in_interval(self):
        """Test that doubling the interval doubles the energy."""
        m = MonitorParams()
        assert constant_blinding_energy(10e-6, 1, m) == pytest.approx(2 * constant_blinding_energy(5e-6, 1, m), rel=0.05)

    def test_cycle_split_equivalence(self):
        """Test that one pulse and three smaller pulses need the same total energy."""
        m = MonitorParams()
        for interval in (6e-6, 12e-6, 20e-6):
            assert constant_blinding_energy(interval, 1, m) == pytest.approx(
                constant_blinding_energy(interval, 3, m), rel=0.05
            )

    def test_shrinks_with_interval(self):
        m = MonitorParams()
        energies = [constant_blinding_energy(t, 1, m) for t in (8e-6, 4e-6, 2e-6, 1e-6)]
        assert all(a > b > 0 for a, b in zip(energies, energies[1:]))

    def test_not_blindable(self):
        with pytest.raises(NotBlindableError):
            constant_blinding_energy(10e-6, 1, MonitorParams(max_group_energy=1e-12))

    def test_invalid_schedule(self):
        with pytest.raises(ValueError):
            constant_blinding_energy(0.0, 1, MonitorParams())
        with pytest.raises(ValueError):
            constant_blinding_energy(10e-6, 0, MonitorParams())

    def test_curve_layout(self):
        points = constant_blinding_curve([2e-6, 4e-6], [1, 2], MonitorParams())
        assert [(p.cycles, p.interval_s) for p in points] == [(1, 2e-6), (1, 4e-6), (2, 2e-6), (2, 4e-6)]


class TestMonitorSuite:
    """Test the calibration schedules plus the near-c.w. reference."""

    def test_only_cw_reference_alarms(self, monitor_params):
        rows = monitor_suite(monitor_params)
        assert len(rows) == len(CALIBRATION_ROWS) + 1
        assert not any(r.unexpected for r in rows)
        cw = rows[-1]
        assert cw.expected_alarm and cw.alarm
        assert cw.reported_current >= 31e-6
