"""Tests for parameter models and window profiles."""
import pytest
from pydantic import ValidationError

from blinding_qkd.errors import ProfileError
from blinding_qkd.models import AttackWindowProfile, BlindingConfig, DetectorTiming, ProtocolParams
from blinding_qkd.params import (
    CALIBRATION_ROWS,
    PHOTON_ENERGY,
    calibration_row,
    channel_transmittance,
    derive_window_profile,
    joules_to_photons,
    photons_to_joules,
    profile_for_row,
)


class TestProtocolParams:
    """Test protocol parameter invariants."""

    def test_defaults(self):
        """Test the default link constants."""
        p = ProtocolParams()
        assert (p.mu, p.nu, p.q_sift, p.f_ec) == (0.6, 0.2, 0.5, 1.2)
        assert (p.e0, p.e_det, p.y0, p.eta_bob, p.loss_coeff) == (0.5, 0.033, 1.7e-6, 0.045, 0.21)

    def test_decoy_must_be_below_signal(self):
        """Test that nu >= mu is rejected."""
        with pytest.raises(ValidationError):
            ProtocolParams(mu=0.2, nu=0.2)

    @pytest.mark.parametrize('field,value', [
        ('e0', 1.5), ('e_det', -0.1), ('y0', 2.0), ('eta_bob', 0.0), ('f_ec', 0.9), ('loss_coeff', 0.0),
    ])
    def test_out_of_range_rejected(self, field, value):
        """Test that each field invariant is enforced."""
        with pytest.raises(ValidationError):
            ProtocolParams(**{field: value})

    def test_frozen(self):
        """Test that parameter objects are immutable."""
        p = ProtocolParams()
        with pytest.raises(ValidationError):
            p.mu = 0.5


class TestBlindingConfig:
    """Test blinding schedule invariants."""

    def test_group_must_fit_interval(self):
        """Test that the group must be shorter than the interval."""
        with pytest.raises(ValidationError):
            BlindingConfig(cycle_count=500, interval=10e-6)

    def test_group_energy(self):
        """Test total group energy."""
        assert BlindingConfig(cycle_count=500).group_energy == pytest.approx(500 * 13.32e-12)

    def test_zero_cycles_rejected(self):
        with pytest.raises(ValidationError):
            BlindingConfig(cycle_count=0)


class TestDeriveWindowProfile:
    """Test gate-count decomposition."""

    def test_500_cycle_row(self):
        """Test the 500-cycle row counts and fractions."""
        profile = derive_window_profile(DetectorTiming(), BlindingConfig(cycle_count=500), 195.05e-6, 690)
        assert profile.n_interval == 80000
        assert profile.n_dead == 200
        assert profile.n_blind == 7802
        assert profile.n_control == 690
        assert profile.alpha == pytest.approx(8.625e-3, rel=1e-12)
        assert profile.beta == pytest.approx(0.100025, rel=1e-12)

    def test_no_blinded_window(self):
        """Test that a zero blinded period leaves only the dead time."""
        profile = derive_window_profile(DetectorTiming(), BlindingConfig(cycle_count=500), 0.0, 0)
        assert profile.alpha == 0.0
        assert profile.beta == pytest.approx(2.5e-3)

    def test_350_cycle_row(self):
        """Test the 350-cycle row counts."""
        profile = derive_window_profile(DetectorTiming(), BlindingConfig(cycle_count=350), 45.025e-6, 72)
        assert profile.n_blind == 1801
        assert profile.n_control == 72
        assert profile.alpha == pytest.approx(9.0e-4)

    def test_half_gate_rounds_up(self):
        """Test that a half-gate remainder rounds up."""
        timing = DetectorTiming(gate_frequency=1.0, dead_time=2.0)
        blinding = BlindingConfig(cycle_count=1, interval=100.0, pulse_rate=1.0)
        profile = derive_window_profile(timing, blinding, 2.5, 0)
        assert profile.n_blind == 3
        assert profile.n_interval == 100

    @pytest.mark.parametrize('row', CALIBRATION_ROWS, ids=lambda r: f'{r.cycle_count}-cycle')
    def test_counts_recover_durations(self, row):
        """Test that counts times the gate period recover the blinded period within half a gate."""
        timing = DetectorTiming()
        profile = profile_for_row(row, timing)
        assert abs(profile.n_blind * timing.gate_period - row.blinded_period) <= 0.5 * timing.gate_period
        assert profile.alpha == profile.n_control / profile.n_interval
        assert profile.beta == (profile.n_blind + profile.n_dead) / profile.n_interval

    def test_too_many_controllable_gates(self):
        """Test that n_control > n_blind is rejected."""
        with pytest.raises(ProfileError):
            derive_window_profile(DetectorTiming(), BlindingConfig(cycle_count=500), 1e-6, 100)

    def test_blinded_window_longer_than_interval(self):
        """Test that n_blind + n_dead > n_interval is rejected."""
        with pytest.raises(ProfileError):
            derive_window_profile(DetectorTiming(), BlindingConfig(cycle_count=500), 1.999e-3, 0)

    def test_negative_inputs(self):
        with pytest.raises(ValueError):
            derive_window_profile(DetectorTiming(), BlindingConfig(), -1e-6, 0)
        with pytest.raises(ValueError):
            derive_window_profile(DetectorTiming(), BlindingConfig(), 1e-6, -1)

    def test_identity_profile(self):
        """Test the no-attack profile."""
        profile = AttackWindowProfile.no_attack()
        assert profile.is_identity
        assert profile.alpha == 0.0 and profile.beta == 0.0


class TestCalibrationRows:
    """Test the built-in calibration dataset."""

    def test_rows_without_controllable_range(self):
        assert calibration_row(250).controllable_gates is None
        assert calibration_row(300).controllable_gates is None

    def test_unknown_cycle_count(self):
        with pytest.raises(ValueError):
            calibration_row(275)

    def test_controllable_gates_grow_with_cycles(self):
        counts = [r.controllable_gates for r in CALIBRATION_ROWS if r.controllable_gates]
        assert counts == sorted(counts)


class TestChannelTransmittance:
    """Test fiber transmittance."""

    def test_values(self):
        assert channel_transmittance(0, 0.21) == 1.0
        assert channel_transmittance(50, 0.21) == pytest.approx(0.0891251, rel=1e-6)
        assert channel_transmittance(100, 0.21) == pytest.approx(7.9433e-3, rel=1e-4)

    def test_multiplicative(self):
        """Test that transmittances of concatenated spans multiply."""
        for l1, l2 in [(10, 20), (33.3, 66.7), (0.5, 120)]:
            assert channel_transmittance(l1 + l2, 0.21) == pytest.approx(
                channel_transmittance(l1, 0.21) * channel_transmittance(l2, 0.21), rel=1e-12
            )

    def test_strictly_decreasing(self):
        values = [channel_transmittance(l, 0.21) for l in range(0, 200, 5)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_negative_length(self):
        with pytest.raises(ValueError):
            channel_transmittance(-1, 0.21)


class TestPhotonConversion:
    """Test photon number and energy conversion at 1550 nm."""

    def test_single_photon_energy(self):
        assert PHOTON_ENERGY == pytest.approx(1.282e-19, rel=1e-3)

    def test_probe_pulse(self):
        assert joules_to_photons(photons_to_joules(67)) == pytest.approx(67)
