"""Linear-mode response of a blinded APD and the fake-state control condition."""
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from blinding_qkd.errors import DegenerateResponseError


class LinearModeResponse(BaseModel):
    """
    Output amplitude model of a blinded detector.

    amplitude = gain_slope * E + U, with U uniform on
    [-noise_halfwidth, +noise_halfwidth]; a click is registered when the
    amplitude exceeds comparator_threshold. Default units: 1 per pJ.
    """
    model_config = ConfigDict(frozen=True)

    gain_slope: float = 1e12
    noise_halfwidth: float = 0.5
    comparator_threshold: float = 3.5

    @field_validator('gain_slope', 'comparator_threshold')
    @classmethod
    def strictly_positive(cls, v, info):
        if v <= 0:
            raise ValueError(f'{info.field_name} must be positive')
        return v

    @field_validator('noise_halfwidth')
    @classmethod
    def noise_non_negative(cls, v):
        if v < 0:
            raise ValueError('noise_halfwidth must be >= 0')
        return v


class ControlEnergies(BaseModel):
    """Trigger energies giving 100% / 50% / 0% click probability."""
    model_config = ConfigDict(frozen=True)

    e_always: float
    e_half: float
    e_never: float

    @model_validator(mode='after')
    def ordered(self):
        if not self.e_never <= self.e_half <= self.e_always:
            raise ValueError(
                f'need e_never <= e_half <= e_always, got '
                f'{self.e_never}, {self.e_half}, {self.e_always}'
            )
        return self


def click_probability_linear(trigger_energy: float, resp: LinearModeResponse) -> float:
    """
    Probability that a trigger pulse produces a click in linear mode.

    Exactly 0 below (I_th - noise)/slope, exactly 1 above (I_th + noise)/slope,
    linear in between.
    """
    if trigger_energy < 0:
        raise ValueError(f"trigger_energy must be >= 0, got {trigger_energy}")

    margin = resp.gain_slope * trigger_energy - resp.comparator_threshold
    w = resp.noise_halfwidth
    if w == 0:
        return 1.0 if margin > 0 else 0.0
    if margin <= -w:
        return 0.0
    if margin >= w:
        return 1.0
    return (margin + w) / (2.0 * w)


def control_energies(resp: LinearModeResponse) -> ControlEnergies:
    """Closed-form E_never / E_half / E_always of a linear-mode response."""
    e_never = (resp.comparator_threshold - resp.noise_halfwidth) / resp.gain_slope
    if e_never <= 0:
        raise DegenerateResponseError(
            f"E_never = {e_never} <= 0: noise band reaches zero energy"
        )
    return ControlEnergies(
        e_always=(resp.comparator_threshold + resp.noise_halfwidth) / resp.gain_slope,
        e_half=resp.comparator_threshold / resp.gain_slope,
        e_never=e_never,
    )


def full_control_condition(c: ControlEnergies) -> bool:
    """
    True if E_always < 2 * E_never.

    A trigger pulse in [E_always, 2 E_never) then always clicks when Bob's
    basis matches Eve's, and splits into two halves below E_never when it
    does not.
    """
    return c.e_always < 2.0 * c.e_never
