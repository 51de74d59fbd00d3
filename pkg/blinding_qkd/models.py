"""Configuration and parameter models using Pydantic."""
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator


def _unit_interval(name: str, v: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f'{name} must lie in [0, 1], got {v}')
    return v


class ProtocolParams(BaseModel):
    """Source, protocol and receiver constants of the decoy-state BB84 link."""
    model_config = ConfigDict(frozen=True)

    mu: float = 0.6
    nu: float = 0.2
    q_sift: float = 0.5
    f_ec: float = 1.2
    e0: float = 0.5
    e_det: float = 0.033
    y0: float = 1.7e-6
    eta_bob: float = 0.045
    loss_coeff: float = Field(default=0.21, description='fiber attenuation in dB/km')

    @field_validator('e0', 'e_det', 'y0', 'q_sift')
    @classmethod
    def probability_range(cls, v, info):
        return _unit_interval(info.field_name, v)

    @field_validator('eta_bob')
    @classmethod
    def eta_range(cls, v):
        if not 0.0 < v <= 1.0:
            raise ValueError(f'eta_bob must lie in (0, 1], got {v}')
        return v

    @field_validator('f_ec')
    @classmethod
    def f_ec_at_least_one(cls, v):
        if v < 1.0:
            raise ValueError(f'f_ec must be >= 1, got {v}')
        return v

    @field_validator('loss_coeff')
    @classmethod
    def loss_positive(cls, v):
        if v <= 0:
            raise ValueError('loss_coeff must be positive')
        return v

    @model_validator(mode='after')
    def decoy_below_signal(self):
        if not 0.0 < self.nu < self.mu:
            raise ValueError(f'need 0 < nu < mu, got nu={self.nu}, mu={self.mu}')
        return self


class DetectorTiming(BaseModel):
    """Gating and noise figures of the gated APD."""
    model_config = ConfigDict(frozen=True)

    gate_frequency: float = 40e6
    dead_time: float = 5e-6
    dark_count_per_gate: float = 5e-6
    # Stored for completeness; afterpulsing is not simulated.
    afterpulse_prob: float = 0.03

    @field_validator('gate_frequency')
    @classmethod
    def frequency_positive(cls, v):
        if v <= 0:
            raise ValueError('gate_frequency must be positive')
        return v

    @field_validator('dead_time')
    @classmethod
    def dead_time_non_negative(cls, v):
        if v < 0:
            raise ValueError('dead_time must be >= 0')
        return v

    @field_validator('dark_count_per_gate', 'afterpulse_prob')
    @classmethod
    def probability_range(cls, v, info):
        return _unit_interval(info.field_name, v)

    @property
    def gate_period(self) -> float:
        return 1.0 / self.gate_frequency


class BlindingConfig(BaseModel):
    """One group of blinding pulses, repeated every `interval` seconds."""
    model_config = ConfigDict(frozen=True)

    cycle_count: int = 500
    pulse_energy: float = 13.32e-12
    pulse_width: float = 4e-9
    interval: float = 2e-3
    pulse_rate: float = Field(default=40e6, description='pulse repetition rate inside a group (Hz)')

    @field_validator('cycle_count')
    @classmethod
    def at_least_one_cycle(cls, v):
        if v < 1:
            raise ValueError('cycle_count must be >= 1')
        return v

    @field_validator('pulse_energy', 'pulse_width', 'pulse_rate')
    @classmethod
    def strictly_positive(cls, v, info):
        if v <= 0:
            raise ValueError(f'{info.field_name} must be positive')
        return v

    @model_validator(mode='after')
    def group_fits_interval(self):
        if not self.interval > self.cycle_count / self.pulse_rate:
            raise ValueError(
                f'interval {self.interval} s does not exceed the group duration '
                f'{self.cycle_count / self.pulse_rate} s'
            )
        return self

    @property
    def group_energy(self) -> float:
        return self.cycle_count * self.pulse_energy


class AttackWindowProfile(BaseModel):
    """Gate-count decomposition of one blinding-group interval."""
    model_config = ConfigDict(frozen=True)

    n_interval: int
    n_blind: int
    n_dead: int
    n_control: int

    @model_validator(mode='after')
    def counts_consistent(self):
        if self.n_interval < 1:
            raise ValueError('n_interval must be >= 1')
        if min(self.n_blind, self.n_dead, self.n_control) < 0:
            raise ValueError('gate counts must be non-negative')
        if self.n_control > self.n_blind:
            raise ValueError(f'n_control={self.n_control} exceeds n_blind={self.n_blind}')
        if self.n_blind + self.n_dead > self.n_interval:
            raise ValueError(
                f'n_blind + n_dead = {self.n_blind + self.n_dead} exceeds n_interval={self.n_interval}'
            )
        return self

    @computed_field
    @property
    def alpha(self) -> float:
        return self.n_control / self.n_interval

    @computed_field
    @property
    def beta(self) -> float:
        return (self.n_blind + self.n_dead) / self.n_interval

    @property
    def is_identity(self) -> bool:
        """True for the no-attack profile (nothing blinded, no group click)."""
        return self.n_blind == 0 and self.n_dead == 0 and self.n_control == 0

    @classmethod
    def no_attack(cls, n_interval: int = 80000) -> 'AttackWindowProfile':
        return cls(n_interval=n_interval, n_blind=0, n_dead=0, n_control=0)


class AnalysisConfig(BaseModel):
    """Flat configuration file model. Unknown keys are rejected."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    mu: float = 0.6
    nu: float = 0.2
    q_sift: float = 0.5
    f_ec: float = 1.2
    e0: float = 0.5
    e_det: float = 0.033
    y0: float = 1.7e-6
    eta_bob: float = 0.045
    loss_coeff_db_per_km: float = 0.21
    gate_frequency_hz: float = 40e6
    dead_time_s: float = 5e-6
    interval_s: float = 2e-3
    cycle_count: int = 500
    blinded_period_s: float = 195.05e-6
    controllable_gates: int = 690

    @field_validator('blinded_period_s')
    @classmethod
    def blinded_non_negative(cls, v):
        if v < 0:
            raise ValueError('blinded_period_s must be >= 0')
        return v

    @field_validator('controllable_gates')
    @classmethod
    def controllable_non_negative(cls, v):
        if v < 0:
            raise ValueError('controllable_gates must be >= 0')
        return v

    @model_validator(mode='after')
    def sub_models_valid(self):
        # Surface invariant violations of the derived models at load time
        try:
            self.protocol()
            self.timing()
            self.blinding()
        except ValueError as e:
            raise ValueError(str(e)) from None
        return self

    def protocol(self) -> ProtocolParams:
        return ProtocolParams(
            mu=self.mu, nu=self.nu, q_sift=self.q_sift, f_ec=self.f_ec,
            e0=self.e0, e_det=self.e_det, y0=self.y0, eta_bob=self.eta_bob,
            loss_coeff=self.loss_coeff_db_per_km,
        )

    def timing(self) -> DetectorTiming:
        return DetectorTiming(gate_frequency=self.gate_frequency_hz, dead_time=self.dead_time_s)

    def blinding(self, pulse_energy: Optional[float] = None) -> BlindingConfig:
        kwargs: Dict[str, Any] = {
            'cycle_count': self.cycle_count,
            'interval': self.interval_s,
            'pulse_rate': self.gate_frequency_hz,
        }
        if pulse_energy is not None:
            kwargs['pulse_energy'] = pulse_energy
        return BlindingConfig(**kwargs)
