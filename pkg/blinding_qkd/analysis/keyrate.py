"""Decoy-state bounds, the GLLP estimated key rate and the real key-rate bounds under attack."""
import math
import logging
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from blinding_qkd.analysis.attack import AttackSolution, error_gain_pass, gain_pass
from blinding_qkd.errors import InfeasibleStrategyError
from blinding_qkd.models import AttackWindowProfile, ProtocolParams

logger = logging.getLogger(__name__)


def binary_entropy(x: float) -> float:
    """Shannon entropy H2(x) in bits, H2(0) = H2(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


class DecoyEstimates(BaseModel):
    """
    Single-photon yield lower bound and error upper bound.

    `degenerate` marks a non-positive yield bound; e1_upper is then undefined
    and the estimated key rate is zero.
    """
    model_config = ConfigDict(frozen=True)

    y1_lower: float
    e1_upper: Optional[float] = None
    degenerate: bool = False

    @model_validator(mode='after')
    def bounds_in_range(self):
        if not 0.0 <= self.y1_lower <= 1.0:
            raise ValueError(f'y1_lower must lie in [0, 1], got {self.y1_lower}')
        if self.degenerate:
            if self.e1_upper is not None:
                raise ValueError('degenerate estimates carry no e1_upper')
        elif self.e1_upper is None or self.e1_upper < 0:
            raise ValueError('e1_upper must be >= 0')
        return self


class KeyRateTriple(BaseModel):
    """Estimated and real key rates per gate at one channel length."""
    model_config = ConfigDict(frozen=True)

    r_est_lower: float
    r_real_lower: float
    r_real_upper: float
    floored: bool = False

    @model_validator(mode='after')
    def ordered(self):
        if min(self.r_est_lower, self.r_real_lower, self.r_real_upper) < 0:
            raise ValueError('key rates are floored at zero')
        if self.r_real_lower > self.r_real_upper:
            raise ValueError(f'r_real_lower {self.r_real_lower} exceeds r_real_upper {self.r_real_upper}')
        return self


def decoy_bounds(q_mu: float, q_nu: float, e_nu: float, params: ProtocolParams) -> DecoyEstimates:
    mu, nu, y0 = params.mu, params.nu, params.y0
    y1 = (mu / (mu * nu - nu ** 2)) * (
        q_nu * math.exp(nu) - q_mu * math.exp(mu) * nu ** 2 / mu ** 2 - (mu ** 2 - nu ** 2) / mu ** 2 * y0
    )
    if y1 <= 0:
        logger.warning(f"Decoy estimate degenerate: Y1_L = {y1:.4e} <= 0")
        return DecoyEstimates(y1_lower=0.0, degenerate=True)

    y1 = min(y1, 1.0)
    e1 = (e_nu * q_nu * math.exp(nu) - params.e0 * y0) / (y1 * nu)
    return DecoyEstimates(y1_lower=y1, e1_upper=max(e1, 0.0))


def _gllp(q_mu: float, e_mu: float, est: DecoyEstimates, params: ProtocolParams) -> float:
    if est.degenerate:
        return 0.0
    e1 = min(est.e1_upper, 0.5)
    return params.q_sift * (
        -q_mu * params.f_ec * binary_entropy(e_mu)
        + params.mu * math.exp(-params.mu) * est.y1_lower * (1.0 - binary_entropy(e1))
    )


def gllp_rate(q_mu: float, e_mu: float, est: DecoyEstimates, params: ProtocolParams) -> float:
    """Estimated key-rate lower bound, floored at zero."""
    return max(0.0, _gllp(q_mu, e_mu, est, params))


def real_single_photon(params: ProtocolParams) -> Tuple[float, float]:
    """Real single-photon yield and error rate of the signals Eve lets pass."""
    y1 = params.y0 + params.eta_bob - params.y0 * params.eta_bob
    e1 = (params.e_det * params.eta_bob + params.e0 * params.y0) / y1
    return y1, e1


def _real_bounds(sol: AttackSolution, profile: AttackWindowProfile, params: ProtocolParams) -> Tuple[float, float]:
    y1, e1 = real_single_photon(params)
    weight = params.q_sift * (1.0 - profile.beta) * sol.gamma
    single_photon = params.mu * math.exp(-params.mu) * y1 * (1.0 - binary_entropy(e1))

    q_pass = gain_pass(params.mu, params)
    e_pass = error_gain_pass(params.mu, params) / q_pass
    leakage = q_pass * params.f_ec * binary_entropy(e_pass)
    return weight * (single_photon - leakage), weight * single_photon


def real_rate_bounds(
    sol: AttackSolution, profile: AttackWindowProfile, params: ProtocolParams,
) -> Tuple[float, float]:
    """
    (r_real_lower, r_real_upper), both floored at zero. Only passed signals
    carry a real secret key, so both vanish in CASE_I.

    Raises:
        InfeasibleStrategyError: If `sol` is not a feasible attack.
    """
    if not sol.feasible:
        raise InfeasibleStrategyError(f"Real key rate needs a feasible attack, got {sol.case_tag.value}")
    lower, upper = _real_bounds(sol, profile, params)
    return max(0.0, lower), max(0.0, upper)


def key_rate_triple(
    q_mu: float,
    e_mu: float,
    est: DecoyEstimates,
    sol: AttackSolution,
    profile: AttackWindowProfile,
    params: ProtocolParams,
) -> KeyRateTriple:
    """
    All three rates at one feasible attack point; `floored` marks any rate
    that came out negative before flooring.
    """
    if not sol.feasible:
        raise InfeasibleStrategyError(f"Key rates need a feasible attack, got {sol.case_tag.value}")
    r_est = _gllp(q_mu, e_mu, est, params)
    lower, upper = _real_bounds(sol, profile, params)
    floored = min(r_est, lower, upper) < 0
    return KeyRateTriple(
        r_est_lower=max(0.0, r_est),
        r_real_lower=max(0.0, lower),
        r_real_upper=max(0.0, upper),
        floored=floored,
    )
