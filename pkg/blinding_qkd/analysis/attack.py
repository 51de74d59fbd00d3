"""Gains and QBER under the pulse-illumination attack and Eve's gain-matching strategy."""
import math
import logging
from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from blinding_qkd.errors import UndefinedQBERError
from blinding_qkd.models import AttackWindowProfile, ProtocolParams
from blinding_qkd.params import channel_transmittance

logger = logging.getLogger(__name__)


class CaseTag(str, Enum):
    CASE_I = 'CASE_I'
    CASE_II = 'CASE_II'
    INFEASIBLE = 'INFEASIBLE'
    NO_ATTACK = 'NO_ATTACK'


class AttackSolution(BaseModel):
    """
    Eve's strategy at one channel length.

    CASE_I lowers the fake-state fraction p with no passed signals (gamma=0);
    CASE_II keeps p=1 and passes a fraction gamma of Alice's signals.
    """
    model_config = ConfigDict(frozen=True)

    case_tag: CaseTag
    p: float = 0.0
    gamma: float = 0.0

    @model_validator(mode='after')
    def case_consistent(self):
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.gamma <= 1.0):
            raise ValueError(f'p and gamma must lie in [0, 1], got p={self.p}, gamma={self.gamma}')
        if self.case_tag == CaseTag.CASE_I and self.gamma != 0.0:
            raise ValueError('CASE_I requires gamma = 0')
        if self.case_tag == CaseTag.CASE_II and self.p != 1.0:
            raise ValueError('CASE_II requires p = 1')
        return self

    @property
    def feasible(self) -> bool:
        return self.case_tag in (CaseTag.CASE_I, CaseTag.CASE_II)


class GainStats(BaseModel):
    """Per-gate gains and QBERs of the signal, decoy and vacuum states."""
    model_config = ConfigDict(frozen=True)

    q_mu: float
    q_nu: float
    q_vac: float
    e_mu: float
    e_nu: float


def gain_eve(omega: float) -> float:
    """Eve's intercept gain with an ideal detector, halved by Bob's basis choice."""
    if omega < 0:
        raise ValueError(f"omega must be >= 0, got {omega}")
    return 0.5 * (1.0 - math.exp(-omega))


def gain_pass(omega: float, params: ProtocolParams) -> float:
    """Gain of a signal passed over Eve's lossless channel."""
    if omega < 0:
        raise ValueError(f"omega must be >= 0, got {omega}")
    return params.y0 + 1.0 - math.exp(-params.eta_bob * omega)


def error_gain_pass(omega: float, params: ProtocolParams) -> float:
    """E_pass * Q_pass."""
    return params.e0 * params.y0 + params.e_det * (1.0 - math.exp(-params.eta_bob * omega))


def group_click_rate(profile: AttackWindowProfile) -> float:
    """Per-gate rate of the forced click opening each blinding group."""
    return 0.0 if profile.is_identity else 1.0 / profile.n_interval


def total_gain(omega: float, sol: AttackSolution, profile: AttackWindowProfile, params: ProtocolParams) -> float:
    return (
        group_click_rate(profile)
        + sol.p * gain_eve(omega) * profile.alpha
        + (1.0 - profile.beta) * (sol.gamma * gain_pass(omega, params) + (1.0 - sol.gamma) * params.y0)
    )


def total_error_gain(omega: float, sol: AttackSolution, profile: AttackWindowProfile, params: ProtocolParams) -> float:
    """Numerator of the attack QBER: expected erroneous clicks per gate."""
    return (
        params.e0 * group_click_rate(profile)
        + sol.p * gain_eve(omega) * profile.alpha * params.e_det
        + (1.0 - profile.beta) * (
            sol.gamma * error_gain_pass(omega, params) + (1.0 - sol.gamma) * params.y0 * params.e0
        )
    )


def total_qber(omega: float, sol: AttackSolution, profile: AttackWindowProfile, params: ProtocolParams) -> float:
    """
    Raises:
        UndefinedQBERError: If the total gain is zero.
    """
    gain = total_gain(omega, sol, profile, params)
    if gain <= 0:
        raise UndefinedQBERError(f"Total gain is zero at omega={omega}")
    return total_error_gain(omega, sol, profile, params) / gain


def normal_gain(omega: float, length_km: float, params: ProtocolParams) -> float:
    eta = params.eta_bob * channel_transmittance(length_km, params.loss_coeff)
    return params.y0 + 1.0 - math.exp(-eta * omega)


def normal_qber(omega: float, length_km: float, params: ProtocolParams) -> float:
    """
    Raises:
        UndefinedQBERError: If the normal gain is zero.
    """
    gain = normal_gain(omega, length_km, params)
    if gain <= 0:
        raise UndefinedQBERError(f"Normal gain is zero at omega={omega}, L={length_km}")
    eta = params.eta_bob * channel_transmittance(length_km, params.loss_coeff)
    return (params.e0 * params.y0 + params.e_det * (1.0 - math.exp(-eta * omega))) / gain


def normal_stats(length_km: float, params: ProtocolParams) -> GainStats:
    return GainStats(
        q_mu=normal_gain(params.mu, length_km, params),
        q_nu=normal_gain(params.nu, length_km, params),
        q_vac=normal_gain(0.0, length_km, params),
        e_mu=normal_qber(params.mu, length_km, params),
        e_nu=normal_qber(params.nu, length_km, params),
    )


def attack_stats(sol: AttackSolution, profile: AttackWindowProfile, params: ProtocolParams) -> GainStats:
    return GainStats(
        q_mu=total_gain(params.mu, sol, profile, params),
        q_nu=total_gain(params.nu, sol, profile, params),
        q_vac=total_gain(0.0, sol, profile, params),
        e_mu=total_qber(params.mu, sol, profile, params),
        e_nu=total_qber(params.nu, sol, profile, params),
    )


def _max_blinding_gain(profile: AttackWindowProfile, params: ProtocolParams) -> float:
    """Signal gain at p=1, gamma=0."""
    return group_click_rate(profile) + gain_eve(params.mu) * profile.alpha + (1.0 - profile.beta) * params.y0


def raw_strategy(
    length_km: float, profile: AttackWindowProfile, params: ProtocolParams,
) -> Tuple[CaseTag, Optional[float], Optional[float]]:
    """
    Unclamped gain-matching solve.

    Returns (case, p, gamma) where the free parameter may lie outside [0, 1].
    The case is INFEASIBLE with p = gamma = None only when the free parameter
    has no solution at all (no controllable gates, or every gate blinded).
    """
    target = normal_gain(params.mu, length_km, params)
    q_eve = gain_eve(params.mu)
    fixed = group_click_rate(profile) + (1.0 - profile.beta) * params.y0

    if _max_blinding_gain(profile, params) > target:
        if profile.alpha == 0:
            return CaseTag.INFEASIBLE, None, None
        return CaseTag.CASE_I, (target - fixed) / (q_eve * profile.alpha), 0.0

    passed_span = (1.0 - profile.beta) * (gain_pass(params.mu, params) - params.y0)
    if passed_span <= 0:
        return CaseTag.INFEASIBLE, None, None
    return CaseTag.CASE_II, 1.0, (target - fixed - q_eve * profile.alpha) / passed_span


def infeasibility_margin(length_km: float, profile: AttackWindowProfile, params: ProtocolParams) -> float:
    """
    Positive where Eve cannot match the gain, <= 0 where she can.

    gamma - 1 in CASE_II and -p in CASE_I; both equal -1 at the case boundary.
    """
    case, p, gamma = raw_strategy(length_km, profile, params)
    if case == CaseTag.CASE_II:
        return gamma - 1.0
    if case == CaseTag.CASE_I:
        return -p
    return 1.0


def solve_strategy(length_km: float, profile: AttackWindowProfile, params: ProtocolParams) -> AttackSolution:
    """
    Match the signal-state gain to the normal gain at `length_km`.

    Out-of-range p or gamma yields an INFEASIBLE solution, never a clamped one.
    The identity profile yields NO_ATTACK.
    """
    if length_km < 0:
        raise ValueError(f"Channel length must be >= 0, got {length_km}")
    if profile.is_identity:
        return AttackSolution(case_tag=CaseTag.NO_ATTACK)

    case, p, gamma = raw_strategy(length_km, profile, params)
    if case == CaseTag.CASE_I and p >= 0.0:
        solution = AttackSolution(case_tag=case, p=min(p, 1.0), gamma=0.0)
    elif case == CaseTag.CASE_II and gamma <= 1.0:
        solution = AttackSolution(case_tag=case, p=1.0, gamma=max(gamma, 0.0))
    else:
        logger.debug(f"Infeasible at L={length_km} km: case={case.value} p={p} gamma={gamma}")
        return AttackSolution(case_tag=CaseTag.INFEASIBLE)

    logger.debug(
        f"Strategy at L={length_km} km: {solution.case_tag.value} p={solution.p:.6g} gamma={solution.gamma:.6g}",
        extra={'length_km': length_km, 'case': solution.case_tag.value},
    )
    return solution


def case_boundary_km(profile: AttackWindowProfile, params: ProtocolParams) -> Optional[float]:
    """
    Channel length where p=1, gamma=0 matches the normal gain exactly.

    Returns None when that length would be negative or does not exist.
    """
    if profile.is_identity:
        return None
    detected = _max_blinding_gain(profile, params) - params.y0
    if not 0.0 < detected < 1.0:
        return None
    transmittance = -math.log1p(-detected) / (params.eta_bob * params.mu)
    if transmittance > 1.0:
        return None
    return -10.0 * math.log10(transmittance) / params.loss_coeff


def decoy_gain_mismatch(
    length_km: float, profile: AttackWindowProfile, params: ProtocolParams,
) -> Optional[Tuple[float, float]]:
    """(attack, normal) decoy gains under the signal-matched strategy, None if infeasible."""
    sol = solve_strategy(length_km, profile, params)
    if not sol.feasible:
        return None
    return total_gain(params.nu, sol, profile, params), normal_gain(params.nu, length_km, params)
