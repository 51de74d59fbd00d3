"""Distance sweeps of the full attack pipeline and crossover search."""
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.optimize import brentq

from blinding_qkd.analysis.attack import (
    CaseTag,
    attack_stats,
    case_boundary_km,
    infeasibility_margin,
    normal_gain,
    normal_qber,
    normal_stats,
    solve_strategy,
    total_qber,
)
from blinding_qkd.analysis.keyrate import decoy_bounds, gllp_rate, key_rate_triple
from blinding_qkd.models import AttackWindowProfile, DetectorTiming, ProtocolParams
from blinding_qkd.observability.metrics import record_crossover, record_sweep_point
from blinding_qkd.params import CALIBRATION_ROWS, CalibrationRow, profile_for_row

logger = logging.getLogger(__name__)

SAMPLING_STEP_KM = 0.5
ROOT_XTOL_KM = 1e-3

SWEEP_COLUMNS = (
    'length_km', 'case', 'p', 'gamma', 'q_mu', 'e_mu', 'q_nu', 'e_nu', 'q_nu_normal',
    'y1_lower', 'e1_upper', 'r_est', 'r_real_lower', 'r_real_upper',
)


class SweepRow(BaseModel):
    """One distance point. INFEASIBLE rows carry only the length and the case."""
    model_config = ConfigDict(frozen=True)

    length_km: float
    case: CaseTag
    p: Optional[float] = None
    gamma: Optional[float] = None
    q_mu: Optional[float] = None
    e_mu: Optional[float] = None
    q_nu: Optional[float] = None
    e_nu: Optional[float] = None
    q_nu_normal: Optional[float] = None
    y1_lower: Optional[float] = None
    e1_upper: Optional[float] = None
    r_est: Optional[float] = None
    r_real_lower: Optional[float] = None
    r_real_upper: Optional[float] = None

    def values(self) -> Tuple:
        return tuple(getattr(self, name) for name in SWEEP_COLUMNS)


class CrossoverReport(BaseModel):
    """Crossover distances and the feasible attack range; None where absent."""
    model_config = ConfigDict(frozen=True)

    l_overestimate_km: Optional[float] = None
    l_insecure_km: Optional[float] = None
    feasible_min_km: Optional[float] = None
    feasible_max_km: Optional[float] = None
    case_boundary_km: Optional[float] = None

    @model_validator(mode='after')
    def ordered(self):
        present = [v for v in (self.feasible_min_km, self.l_overestimate_km, self.l_insecure_km) if v is not None]
        if present != sorted(present):
            raise ValueError(f'expected feasible_min <= l_overestimate <= l_insecure, got {present}')
        return self


def length_grid(l_start: float, l_end: float, step: float) -> np.ndarray:
    """Points l_start + i*step up to and including l_end."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if l_start < 0:
        raise ValueError(f"l_start must be >= 0, got {l_start}")
    if l_end < l_start:
        return np.empty(0)
    count = int(np.floor((l_end - l_start) / step + 1e-9)) + 1
    return l_start + step * np.arange(count)


def evaluate_point(length_km: float, profile: AttackWindowProfile, params: ProtocolParams) -> SweepRow:
    """Run the pipeline at one channel length."""
    if profile.is_identity:
        stats = normal_stats(length_km, params)
        est = decoy_bounds(stats.q_mu, stats.q_nu, stats.e_nu, params)
        row = SweepRow(
            length_km=length_km, case=CaseTag.NO_ATTACK,
            q_mu=stats.q_mu, e_mu=stats.e_mu, q_nu=stats.q_nu, e_nu=stats.e_nu, q_nu_normal=stats.q_nu,
            y1_lower=est.y1_lower, e1_upper=est.e1_upper,
            r_est=gllp_rate(stats.q_mu, stats.e_mu, est, params),
        )
        record_sweep_point(row.case.value)
        return row

    sol = solve_strategy(length_km, profile, params)
    if not sol.feasible:
        record_sweep_point(sol.case_tag.value)
        return SweepRow(length_km=length_km, case=sol.case_tag)

    stats = attack_stats(sol, profile, params)
    est = decoy_bounds(stats.q_mu, stats.q_nu, stats.e_nu, params)
    rates = key_rate_triple(stats.q_mu, stats.e_mu, est, sol, profile, params)
    if rates.floored:
        logger.debug(f"Negative key rate floored at L={length_km} km", extra={'length_km': length_km})

    record_sweep_point(sol.case_tag.value)
    return SweepRow(
        length_km=length_km,
        case=sol.case_tag,
        p=sol.p,
        gamma=sol.gamma,
        q_mu=stats.q_mu,
        e_mu=stats.e_mu,
        q_nu=stats.q_nu,
        e_nu=stats.e_nu,
        q_nu_normal=normal_gain(params.nu, length_km, params),
        y1_lower=est.y1_lower,
        e1_upper=est.e1_upper,
        r_est=rates.r_est_lower,
        r_real_lower=rates.r_real_lower,
        r_real_upper=rates.r_real_upper,
    )


def sweep(
    profile: AttackWindowProfile,
    params: ProtocolParams,
    l_start: float = 0.0,
    l_end: float = 170.0,
    step: float = 0.25,
) -> List[SweepRow]:
    """One row per grid point, sorted by length; infeasible points do not stop the sweep."""
    rows = [evaluate_point(float(length), profile, params) for length in length_grid(l_start, l_end, step)]
    logger.info(f"Swept {len(rows)} points over [{l_start}, {l_end}] km")
    return rows


def _bracketed_root(func: Callable[[float], float], grid: np.ndarray, values: np.ndarray, start: int = 0) -> Optional[float]:
    """
    First upward crossing (<= 0 then > 0) of sampled `values`, refined with
    brentq. A curve already positive at `start` crosses there.
    """
    if len(grid) and values[start] > 0:
        return float(grid[start])
    for i in range(start, len(grid) - 1):
        if values[i] <= 0 < values[i + 1]:
            if values[i] == 0:
                return float(grid[i])
            return float(brentq(func, grid[i], grid[i + 1], xtol=ROOT_XTOL_KM))
    return None


def feasible_range(
    profile: AttackWindowProfile,
    params: ProtocolParams,
    l_min: float = 0.0,
    l_max: float = 170.0,
    resolution: float = SAMPLING_STEP_KM,
) -> Optional[Tuple[float, float]]:
    """
    First contiguous channel-length range inside [l_min, l_max] where Eve can
    match the normal gain, or None.
    """
    if profile.is_identity:
        return None

    def margin(length: float) -> float:
        return infeasibility_margin(length, profile, params)

    grid = length_grid(l_min, l_max, resolution)
    if grid.size == 0:
        return None
    if grid[-1] < l_max:
        grid = np.append(grid, l_max)
    values = np.array([margin(float(x)) for x in grid])

    feasible = np.flatnonzero(values <= 0)
    if feasible.size == 0:
        return None
    first = int(feasible[0])
    if first == 0:
        lower = float(grid[0])
    else:
        lower = float(brentq(margin, grid[first - 1], grid[first], xtol=ROOT_XTOL_KM))
        # brentq may land on the infeasible side of the boundary
        if margin(lower) > 0:
            lower = min(lower + 2 * ROOT_XTOL_KM, float(grid[first]))

    upper_root = _bracketed_root(margin, grid, values, start=first)
    if upper_root is None:
        upper = float(grid[-1])
    else:
        upper = upper_root
        if margin(upper) > 0:
            upper = max(upper - 2 * ROOT_XTOL_KM, lower)
    return lower, upper


def find_crossovers(
    profile: AttackWindowProfile,
    params: ProtocolParams,
    l_min: float = 0.0,
    l_max: float = 170.0,
    resolution: float = SAMPLING_STEP_KM,
) -> CrossoverReport:
    """
    Locate where the estimated key rate first exceeds the real lower bound
    (overestimation) and the real upper bound (insecurity), within the
    feasible part of [l_min, l_max].
    """
    bounds = feasible_range(profile, params, l_min, l_max, resolution)
    if bounds is None:
        record_crossover('overestimate', False)
        record_crossover('insecure', False)
        return CrossoverReport()

    lower, upper = bounds

    def rates(length: float) -> SweepRow:
        return evaluate_point(min(max(length, lower), upper), profile, params)

    def overestimate_gap(length: float) -> float:
        row = rates(length)
        return row.r_est - row.r_real_lower

    def insecure_gap(length: float) -> float:
        row = rates(length)
        return row.r_est - row.r_real_upper

    grid = length_grid(lower, upper, resolution)
    if grid[-1] < upper:
        grid = np.append(grid, upper)

    found = {}
    for kind, gap in (('overestimate', overestimate_gap), ('insecure', insecure_gap)):
        values = np.array([gap(float(x)) for x in grid])
        found[kind] = _bracketed_root(gap, grid, values)
        record_crossover(kind, found[kind] is not None)

    boundary = case_boundary_km(profile, params)
    report = CrossoverReport(
        l_overestimate_km=found['overestimate'],
        l_insecure_km=found['insecure'],
        feasible_min_km=lower,
        feasible_max_km=upper,
        case_boundary_km=boundary if boundary is not None and lower <= boundary <= upper else None,
    )
    logger.info(
        f"Crossovers: overestimate={report.l_overestimate_km} km, insecure={report.l_insecure_km} km, "
        f"feasible=[{lower:.3f}, {upper:.3f}] km"
    )
    return report


class ProfileCrossover(BaseModel):
    model_config = ConfigDict(frozen=True)

    cycle_count: int
    report: CrossoverReport


def crossover_table(
    params: ProtocolParams,
    rows: Sequence[CalibrationRow] = CALIBRATION_ROWS,
    timing: Optional[DetectorTiming] = None,
    l_min: float = 0.0,
    l_max: float = 170.0,
) -> List[ProfileCrossover]:
    """Crossovers for every calibration row with a measured controllable range."""
    table = []
    for row in rows:
        if not row.controllable_gates:
            continue
        profile = profile_for_row(row, timing)
        table.append(ProfileCrossover(cycle_count=row.cycle_count, report=find_crossovers(profile, params, l_min, l_max)))
    return table


class QberRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    length_km: float
    e_mu_normal: float
    e_mu_attack: Optional[float] = None


def qber_curves(profile: AttackWindowProfile, params: ProtocolParams, lengths: Sequence[float]) -> List[QberRow]:
    """Signal QBER with and without the attack; attack value absent where infeasible."""
    rows = []
    for length in lengths:
        sol = solve_strategy(float(length), profile, params)
        attack = total_qber(params.mu, sol, profile, params) if sol.feasible else None
        rows.append(QberRow(length_km=float(length), e_mu_normal=normal_qber(params.mu, float(length), params), e_mu_attack=attack))
    return rows
