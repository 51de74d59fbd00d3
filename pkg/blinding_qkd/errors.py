"""Exception hierarchy for the blinding analysis pipeline."""


class BlindingQKDError(Exception):
    """Base error. `code` is a stable identifier used in logs and CLI output."""

    code = 'ERROR'

    def __init__(self, message: str = ''):
        super().__init__(message or self.code)


class ConfigError(BlindingQKDError):
    """Configuration file or override is invalid."""
    code = 'CONFIG_INVALID'


class ProfileError(BlindingQKDError):
    """Gate-count profile or timeline is internally inconsistent."""
    code = 'PROFILE_INCONSISTENT'


class UndefinedQBERError(BlindingQKDError):
    """QBER requested for a zero gain."""
    code = 'UNDEFINED_QBER'


class DegenerateResponseError(BlindingQKDError):
    """Linear-mode response yields a non-positive E_never."""
    code = 'DEGENERATE_RESPONSE'


class CalibrationAmbiguousError(BlindingQKDError):
    """Probe pulse cannot discriminate blinded from unblinded gates."""
    code = 'CALIBRATION_AMBIGUOUS'


class GridTooNarrowError(BlindingQKDError):
    """Energy grid does not bracket the 0% -> 100% click transition."""
    code = 'GRID_TOO_NARROW'


class InsufficientSpanError(BlindingQKDError):
    """Photocurrent trace is too short to reach steady state."""
    code = 'INSUFFICIENT_SPAN'


class NotBlindableError(BlindingQKDError):
    """Constant-blinding threshold unreachable within the energy bound."""
    code = 'NOT_BLINDABLE'


class SingularFitError(BlindingQKDError):
    """Least-squares charge fit is underdetermined."""
    code = 'SINGULAR_FIT'


class TraceTooLargeError(BlindingQKDError):
    """Requested trace would exceed the sample budget."""
    code = 'TRACE_TOO_LARGE'


class InfeasibleStrategyError(BlindingQKDError):
    """Operation needs a feasible attack solution but got INFEASIBLE."""
    code = 'INFEASIBLE'
