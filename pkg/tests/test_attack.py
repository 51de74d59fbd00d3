"""Tests for attack gains, QBER and Eve's strategy solver."""
import numpy as np
import pytest
from pydantic import ValidationError

from blinding_qkd.analysis.attack import (
    AttackSolution,
    CaseTag,
    attack_stats,
    case_boundary_km,
    decoy_gain_mismatch,
    gain_eve,
    gain_pass,
    normal_gain,
    normal_qber,
    raw_strategy,
    solve_strategy,
    total_gain,
    total_qber,
)
from blinding_qkd.errors import UndefinedQBERError
from blinding_qkd.models import AttackWindowProfile, ProtocolParams


class TestElementaryGains:
    """Test single-branch gains."""

    def test_gain_eve(self):
        assert gain_eve(0.0) == 0.0
        assert gain_eve(0.6) == pytest.approx(0.2255942, rel=1e-6)
        assert gain_eve(0.2) == pytest.approx(0.0906346, rel=1e-6)

    def test_gain_pass(self, params):
        assert gain_pass(0.0, params) == pytest.approx(1.7e-6)
        assert gain_pass(0.6, params) == pytest.approx(2.6640e-2, rel=1e-4)
        assert gain_pass(0.2, params) == pytest.approx(8.9613e-3, rel=1e-4)

    def test_normal_gain(self, params):
        assert normal_gain(0.0, 80, params) == pytest.approx(1.7e-6)
        assert normal_gain(0.6, 50, params) == pytest.approx(2.4052e-3, rel=1e-3)
        assert normal_gain(0.6, 100, params) == pytest.approx(2.1615e-4, rel=1e-3)

    def test_normal_qber(self, params):
        assert normal_qber(0.6, 0, params) == pytest.approx(0.03303, abs=1e-4)
        assert normal_qber(0.6, 50, params) == pytest.approx(0.03333, abs=1e-4)
        assert normal_qber(0.6, 2000, params) == pytest.approx(0.5, abs=1e-6)

    def test_zero_gain_qber(self):
        params = ProtocolParams(y0=0.0)
        with pytest.raises(UndefinedQBERError):
            normal_qber(0.0, 10, params)

    def test_negative_omega(self, params):
        with pytest.raises(ValueError):
            gain_eve(-0.1)
        with pytest.raises(ValueError):
            gain_pass(-0.1, params)


class TestTotalGainAndQber:
    """Test the attack gain and QBER closed forms."""

    def test_no_action(self, params, profile_500):
        sol = AttackSolution(case_tag=CaseTag.CASE_I, p=0.0, gamma=0.0)
        assert total_gain(0.6, sol, profile_500, params) == pytest.approx(1.4030e-5, rel=1e-4)
        assert total_qber(0.6, sol, profile_500, params) == pytest.approx(0.5, abs=3e-4)

    def test_full_fake_state(self, params, profile_500):
        sol = AttackSolution(case_tag=CaseTag.CASE_I, p=1.0, gamma=0.0)
        assert total_gain(0.6, sol, profile_500, params) == pytest.approx(1.9598e-3, rel=1e-4)

    def test_affine_in_p_and_gamma(self, params, profile_500):
        """Test that the gain is affine and non-decreasing in p and gamma."""
        gains_p = [total_gain(0.6, AttackSolution(case_tag=CaseTag.CASE_I, p=p), profile_500, params)
                   for p in (0.0, 0.5, 1.0)]
        assert gains_p[1] - gains_p[0] == pytest.approx(gains_p[2] - gains_p[1], rel=1e-9)
        assert gains_p[0] < gains_p[1] < gains_p[2]

        gains_g = [total_gain(0.6, AttackSolution(case_tag=CaseTag.CASE_II, p=1.0, gamma=g), profile_500, params)
                   for g in (0.0, 0.5, 1.0)]
        assert gains_g[1] - gains_g[0] == pytest.approx(gains_g[2] - gains_g[1], rel=1e-9)
        assert gains_g[0] < gains_g[1] < gains_g[2]

    def test_vacuum_independent_of_p(self, params, profile_500):
        a = total_gain(0.0, AttackSolution(case_tag=CaseTag.CASE_I, p=0.2), profile_500, params)
        b = total_gain(0.0, AttackSolution(case_tag=CaseTag.CASE_I, p=0.9), profile_500, params)
        assert a == b

    def test_solution_invariants(self):
        with pytest.raises(ValidationError):
            AttackSolution(case_tag=CaseTag.CASE_I, p=0.5, gamma=0.1)
        with pytest.raises(ValidationError):
            AttackSolution(case_tag=CaseTag.CASE_II, p=0.9, gamma=0.1)
        with pytest.raises(ValidationError):
            AttackSolution(case_tag=CaseTag.CASE_I, p=1.5)


class TestSolveStrategy:
    """Test Eve's gain-matching strategy."""

    def test_case_i_at_100km(self, params, profile_500):
        sol = solve_strategy(100, profile_500, params)
        assert sol.case_tag == CaseTag.CASE_I
        assert sol.p == pytest.approx(0.1039, abs=5e-4)
        assert sol.gamma == 0.0
        assert total_qber(0.6, sol, profile_500, params) == pytest.approx(0.0633, abs=5e-4)

    def test_case_ii_at_50km(self, params, profile_500):
        sol = solve_strategy(50, profile_500, params)
        assert sol.case_tag == CaseTag.CASE_II
        assert sol.p == 1.0
        assert sol.gamma == pytest.approx(0.01852, abs=1e-4)
        assert total_qber(0.6, sol, profile_500, params) == pytest.approx(0.03573, abs=3e-4)
        assert total_gain(0.6, sol, profile_500, params) == pytest.approx(2.4052e-3, rel=1e-3)

    def test_infeasible_at_zero(self, params, profile_500):
        """Test that even passing every signal undershoots at zero length."""
        assert solve_strategy(0, profile_500, params).case_tag == CaseTag.INFEASIBLE
        case, _, gamma = raw_strategy(0, profile_500, params)
        assert case == CaseTag.CASE_II
        assert gamma > 1.0

    def test_infeasible_at_long_distance(self, params, profile_500):
        assert solve_strategy(165, profile_500, params).case_tag == CaseTag.INFEASIBLE

    def test_no_attack_profile(self, params):
        assert solve_strategy(50, AttackWindowProfile.no_attack(), params).case_tag == CaseTag.NO_ATTACK

    def test_negative_length(self, params, profile_500):
        with pytest.raises(ValueError):
            solve_strategy(-1, profile_500, params)

    def test_gain_match_over_all_profiles(self, params, table_profiles):
        """Test that every feasible solution matches the normal signal gain."""
        worst = 0.0
        for profile in table_profiles.values():
            for length in np.arange(0, 170.25, 0.25):
                sol = solve_strategy(float(length), profile, params)
                if not sol.feasible:
                    continue
                target = normal_gain(0.6, float(length), params)
                worst = max(worst, abs(total_gain(0.6, sol, profile, params) - target) / target)
        assert worst <= 1e-12

    def test_monotone_strategy(self, params, profile_500):
        """Test gamma falling to zero, then p falling, as the length grows."""
        solutions = [solve_strategy(float(l), profile_500, params) for l in np.arange(1, 155, 1.0)]
        assert all(s.feasible for s in solutions)
        keys = [(s.gamma, s.p) for s in solutions]
        assert all(a >= b for a, b in zip(keys, keys[1:]))
        cases = [s.case_tag for s in solutions]
        switch = cases.index(CaseTag.CASE_I)
        assert all(c == CaseTag.CASE_II for c in cases[:switch])
        assert all(c == CaseTag.CASE_I for c in cases[switch:])

    def test_case_boundary(self, params, profile_500):
        """Test that p=1, gamma=0 matches exactly at the case boundary."""
        boundary = case_boundary_km(profile_500, params)
        assert boundary == pytest.approx(54.25, abs=0.05)
        sol = AttackSolution(case_tag=CaseTag.CASE_I, p=1.0, gamma=0.0)
        assert total_gain(0.6, sol, profile_500, params) == pytest.approx(normal_gain(0.6, boundary, params), rel=1e-9)
        assert solve_strategy(boundary - 0.5, profile_500, params).case_tag == CaseTag.CASE_II
        assert solve_strategy(boundary + 0.5, profile_500, params).case_tag == CaseTag.CASE_I

    def test_qber_bounded(self, params, table_profiles):
        for profile in table_profiles.values():
            for length in range(0, 171, 5):
                sol = solve_strategy(float(length), profile, params)
                if sol.feasible:
                    stats = attack_stats(sol, profile, params)
                    assert 0.0 <= stats.e_mu <= 0.5
                    assert 0.0 <= stats.e_nu <= 0.5


class TestDecoyMismatch:
    """Test decoy-state gain telemetry."""

    def test_mismatch_at_50km(self, params, profile_500):
        attack, normal = decoy_gain_mismatch(50, profile_500, params)
        assert attack == pytest.approx(9.4556e-4, rel=1e-3)
        assert normal == pytest.approx(8.035e-4, rel=1e-3)

    def test_infeasible_has_no_mismatch(self, params, profile_500):
        assert decoy_gain_mismatch(0, profile_500, params) is None
