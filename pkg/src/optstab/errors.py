"""Exception types shared across the package."""

from __future__ import annotations


class OptstabError(Exception):
    """Base class for all package errors."""


class UsageError(OptstabError):
    """Malformed input: bad dimension, unknown id, invalid flag combination."""


class DomainError(OptstabError):
    """Input is well-formed but mathematically inadmissible."""


class NotACriticalPointError(DomainError):
    """The supplied point is not a critical point of the objective."""


class DivergedError(OptstabError):
    """A trajectory left the admissible region (non-finite or huge component).

    Attributes
    ----------
    t : iteration index at which the guard fired
    component : flat index of the offending state component
    """

    def __init__(self, t: int, component: int, value: float):
        self.t = t
        self.component = component
        self.value = value
        super().__init__(
            f"trajectory diverged at t={t}: component {component} = {value!r}"
        )


class CertificateUnavailableError(DomainError):
    """No Lyapunov certificate exists (fixed point not exponentially stable)."""


class VerificationFailure(OptstabError):
    """A sampled numerical verification found a violating witness."""
