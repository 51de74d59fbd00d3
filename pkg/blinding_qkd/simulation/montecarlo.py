"""
Gate-level Monte Carlo of a BB84 session under the blinding attack.

Gates are not simulated one by one: the interval's timeline is reduced to
its tag counts, and every gate class (group click, dead, controllable,
uncontrollable, normal) is split over Alice's intensities and resolved
with binomial/multinomial draws, which is equivalent to per-gate
Bernoulli trials.
"""
import math
import time
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from blinding_qkd.analysis.attack import (
    AttackSolution,
    solve_strategy,
    total_error_gain,
    total_gain,
)
from blinding_qkd.detector.timeline import GateTag, build_timeline
from blinding_qkd.errors import InfeasibleStrategyError
from blinding_qkd.models import AttackWindowProfile, BlindingConfig, ProtocolParams
from blinding_qkd.observability.metrics import record_montecarlo, record_z_score

logger = logging.getLogger(__name__)

BLOCK_INTERVALS = 1024
Z_LIMIT = 4.0
STATE_LABELS = ('mu', 'nu', 'vac')


class SessionConfig(BaseModel):
    """One simulated session: strategy, window profile and RNG seed."""
    model_config = ConfigDict(frozen=True)

    length_km: float
    profile: AttackWindowProfile
    solution: AttackSolution
    intervals: int
    seed: Optional[int] = None
    # Alice's emission probabilities for (mu, nu, vacuum)
    state_probs: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    @field_validator('intervals')
    @classmethod
    def at_least_one_interval(cls, v):
        if v < 1:
            raise ValueError('intervals must be >= 1')
        return v

    @model_validator(mode='after')
    def probabilities_valid(self):
        if min(self.state_probs) < 0 or not math.isclose(sum(self.state_probs), 1.0, rel_tol=1e-9):
            raise ValueError(f'state_probs must be non-negative and sum to 1, got {self.state_probs}')
        return self


class StateCounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    gates: int = 0
    clicks: int = 0
    errors: int = 0

    @model_validator(mode='after')
    def counts_ordered(self):
        if not 0 <= self.errors <= self.clicks <= self.gates:
            raise ValueError(f'need errors <= clicks <= gates, got {self}')
        return self

    def __add__(self, other: 'StateCounts') -> 'StateCounts':
        return StateCounts(
            gates=self.gates + other.gates,
            clicks=self.clicks + other.clicks,
            errors=self.errors + other.errors,
        )

    @property
    def gain(self) -> float:
        return self.clicks / self.gates if self.gates else 0.0

    @property
    def qber(self) -> Optional[float]:
        return self.errors / self.clicks if self.clicks else None

    @property
    def error_gain(self) -> float:
        return self.errors / self.gates if self.gates else 0.0

    @property
    def gain_stderr(self) -> float:
        if not self.gates:
            return 0.0
        q = self.gain
        return math.sqrt(q * (1.0 - q) / self.gates)


class EmpiricalStats(BaseModel):
    """Click and error counts per intensity, pre-sifting."""
    model_config = ConfigDict(frozen=True)

    intervals: int
    states: Dict[str, StateCounts]

    def __getitem__(self, label: str) -> StateCounts:
        return self.states[label]

    def merge(self, other: 'EmpiricalStats') -> 'EmpiricalStats':
        return EmpiricalStats(
            intervals=self.intervals + other.intervals,
            states={k: self.states[k] + other.states[k] for k in STATE_LABELS},
        )


def gate_classes(profile: AttackWindowProfile) -> Dict[GateTag, int]:
    """Per-interval gate counts by tag, read off the interval's timeline."""
    # Only the tags are used; a single pulse lays out any valid profile
    return build_timeline(profile, BlindingConfig(cycle_count=1)).counts()


def _simulate_block(
    rng: np.random.Generator,
    n_intervals: int,
    classes: Dict[GateTag, int],
    sol: AttackSolution,
    params: ProtocolParams,
    probs: Sequence[float],
) -> EmpiricalStats:
    omegas = (params.mu, params.nu, 0.0)
    gates = np.zeros(3, dtype=np.int64)
    clicks = np.zeros(3, dtype=np.int64)
    errors = np.zeros(3, dtype=np.int64)

    n_group = classes[GateTag.BLIND_PULSE]
    n_dead_only = classes[GateTag.DEAD]
    n_control = classes[GateTag.BLINDED_CONTROLLABLE]
    n_uncontrollable = classes[GateTag.BLINDED_UNCONTROLLABLE]
    n_normal = classes[GateTag.NORMAL]

    def split(per_interval: int) -> np.ndarray:
        return rng.multinomial(per_interval * n_intervals, probs)

    # Group-initial gate: forced click with a random bit
    group = split(n_group)
    gates += group
    clicks += group
    errors += rng.binomial(group, params.e0)

    # Dead time and blinded-but-uncontrollable gates never click
    gates += split(n_dead_only)
    gates += split(n_uncontrollable)

    # Fully controllable gates: intercept with prob p, ideal detection,
    # resend clicks only when Bob's basis matches Eve's
    controllable = split(n_control)
    gates += controllable
    for i, omega in enumerate(omegas):
        attacked = rng.binomial(controllable[i], sol.p)
        detected = rng.binomial(attacked, 1.0 - math.exp(-omega))
        matched = rng.binomial(detected, 0.5)
        clicks[i] += matched
        errors[i] += rng.binomial(matched, params.e_det)

    # Unblinded gates: pass with prob gamma, otherwise block (dark counts only)
    normal = split(n_normal)
    gates += normal
    for i, omega in enumerate(omegas):
        passed = rng.binomial(normal[i], sol.gamma)
        signal_prob = 1.0 - math.exp(-params.eta_bob * omega)
        signal, dark, _ = rng.multinomial(passed, [signal_prob, params.y0, 1.0 - signal_prob - params.y0])
        blocked_dark = rng.binomial(normal[i] - passed, params.y0)
        clicks[i] += signal + dark + blocked_dark
        errors[i] += (
            rng.binomial(signal, params.e_det)
            + rng.binomial(dark, params.e0)
            + rng.binomial(blocked_dark, params.e0)
        )

    return EmpiricalStats(
        intervals=n_intervals,
        states={
            label: StateCounts(gates=int(gates[i]), clicks=int(clicks[i]), errors=int(errors[i]))
            for i, label in enumerate(STATE_LABELS)
        },
    )


def simulate_session(cfg: SessionConfig, params: ProtocolParams) -> EmpiricalStats:
    """
    Simulate `cfg.intervals` blinding intervals.

    Intervals are grouped in fixed blocks, each with its own child seed of
    `cfg.seed`, so results do not depend on how blocks are scheduled.

    Raises:
        InfeasibleStrategyError: If the solution is not a feasible attack.
    """
    if not cfg.solution.feasible:
        raise InfeasibleStrategyError(f"Cannot simulate a {cfg.solution.case_tag.value} solution")

    started = time.perf_counter()
    n_blocks = math.ceil(cfg.intervals / BLOCK_INTERVALS)
    children = np.random.SeedSequence(cfg.seed).spawn(n_blocks)
    classes = gate_classes(cfg.profile)

    stats = EmpiricalStats(intervals=0, states={k: StateCounts() for k in STATE_LABELS})
    for index, child in enumerate(children):
        size = min(BLOCK_INTERVALS, cfg.intervals - index * BLOCK_INTERVALS)
        block = _simulate_block(
            np.random.default_rng(child), size, classes, cfg.solution, params, cfg.state_probs,
        )
        stats = stats.merge(block)

    record_montecarlo(cfg.intervals)
    logger.info(
        f"Simulated {cfg.intervals} intervals at L={cfg.length_km} km",
        extra={
            'length_km': cfg.length_km,
            'case': cfg.solution.case_tag.value,
            'intervals': cfg.intervals,
            'duration_ms': round((time.perf_counter() - started) * 1000, 1),
        },
    )
    return stats


class Agreement(BaseModel):
    """Empirical versus analytic per-gate rate for one intensity."""
    model_config = ConfigDict(frozen=True)

    state: str
    quantity: str
    empirical: float
    analytic: float
    sigma: float

    @property
    def z_score(self) -> float:
        if self.sigma == 0:
            return 0.0 if self.empirical == self.analytic else math.inf
        return (self.empirical - self.analytic) / self.sigma


def agreement(
    stats: EmpiricalStats,
    sol: AttackSolution,
    profile: AttackWindowProfile,
    params: ProtocolParams,
) -> List[Agreement]:
    """
    Compare the simulated gain and error gain (E*Q) of each intensity with
    the closed forms, using binomial standard errors.
    """
    results = []
    for label, omega in zip(STATE_LABELS, (params.mu, params.nu, 0.0)):
        counts = stats[label]
        for quantity, empirical, analytic in (
            ('gain', counts.gain, total_gain(omega, sol, profile, params)),
            ('error_gain', counts.error_gain, total_error_gain(omega, sol, profile, params)),
        ):
            sigma = math.sqrt(analytic * (1.0 - analytic) / counts.gates) if counts.gates else 0.0
            item = Agreement(state=label, quantity=quantity, empirical=empirical, analytic=analytic, sigma=sigma)
            record_z_score(item.z_score)
            results.append(item)
    return results


class AgreementPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    length_km: float
    solution: AttackSolution
    intervals: int
    stats: EmpiricalStats
    checks: List[Agreement]

    @property
    def max_abs_z(self) -> float:
        return max(abs(c.z_score) for c in self.checks)

    @property
    def passed(self) -> bool:
        return self.max_abs_z <= Z_LIMIT


def agreement_suite(
    profile: AttackWindowProfile,
    params: ProtocolParams,
    lengths: Sequence[float],
    intervals: int,
    seed: int = 0,
) -> List[AgreementPoint]:
    """Simulate every feasible length with its own child seed and compare against the closed forms."""
    seeds = np.random.SeedSequence(seed).spawn(len(lengths))
    points = []
    for length, child in zip(lengths, seeds):
        sol = solve_strategy(float(length), profile, params)
        if not sol.feasible:
            logger.warning(f"Skipping L={length} km: strategy is {sol.case_tag.value}")
            continue
        cfg = SessionConfig(
            length_km=float(length), profile=profile, solution=sol,
            intervals=intervals, seed=int(child.generate_state(1)[0]),
        )
        stats = simulate_session(cfg, params)
        points.append(AgreementPoint(
            length_km=float(length), solution=sol, intervals=intervals,
            stats=stats, checks=agreement(stats, sol, profile, params),
        ))
    return points
