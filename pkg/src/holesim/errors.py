"""Exception hierarchy shared by all holesim modules."""


class HolesimError(Exception):
    """Base class for all errors raised by this package."""


class GridMismatch(HolesimError):
    """Two fields that must share a grid do not."""


class ResolutionError(HolesimError):
    """Requested field cannot be represented on the grid (too narrow, or
    tails above threshold at the domain boundary)."""


class ZeroNormError(HolesimError):
    """Normalization of a zero field requested."""


class NumericalBlowup(HolesimError):
    """Non-finite amplitudes appeared in a computation."""


class NormViolation(HolesimError):
    """A state or observable violates its norm bound."""


class DomainError(HolesimError):
    """Argument outside the mathematical domain of an operation."""


class NonInvertibleDiffeo(HolesimError):
    """Requested coordinate map is not invertible (Jacobian bound failed)."""


class UnderdeterminedFit(HolesimError):
    """Fringe data too sparse to recover the observable."""


class SupportViolation(HolesimError):
    """Wavefunction mass leaked out of the declared support region."""


class InsufficientDisplacement(HolesimError):
    """Displaced support region still overlaps the original one."""


class DegenerateForm(HolesimError):
    """Sampled sesquilinear form is too ill-conditioned to invert."""


class InvalidMeasure(HolesimError):
    """Supplied projector family is not a projector-valued measure."""


class SignatureError(HolesimError):
    """Metric is not Lorentzian at some grid point."""


class ConfigError(HolesimError):
    """One or more configuration entries failed validation.

    Carries the full list of messages so callers can report every
    problem at once instead of the first."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class StabilityWarning(UserWarning):
    """Time step large enough that the potential phase per step exceeds
    the recommended bound."""
