"""Fixed-point eigenvalues, spectral radii, and hyperparameter bound checks.

Closed forms come straight from the per-family eigenvalue analysis; the
numerical Jacobian is an independent finite-difference cross-check and never
feeds the closed forms.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .dynamics import OptimizerSpec, HyperParams, State, autonomous_map, fixed_point
from .errors import DivergedError, UsageError
from .objectives import FD_STEP, Objective, HessianSpectrum, hessian_spectrum

Array = np.ndarray


@dataclass(frozen=True)
class BoundVerdict:
    """One inequality lhs < rhs; ``satisfied`` is None when not applicable."""

    family: str
    source: str  # "ours" | "kingma" | "reddi"
    lhs: float
    rhs: float
    satisfied: bool | None
    flagged: bool = False  # spectrum not positive definite

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "source": self.source,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "satisfied": self.satisfied,
            "margin": self.margin,
            "flagged": self.flagged,
        }


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: tuple[complex, ...]
    spectral_radius: float
    ours: BoundVerdict
    kingma: BoundVerdict | None
    reddi: BoundVerdict | None
    per_mode_margins: tuple[float, ...]
    epsilon_star: float | None = None

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "spectral_radius": self.spectral_radius,
            "ours": self.ours.to_dict(),
            "kingma": self.kingma.to_dict() if self.kingma else None,
            "reddi": self.reddi.to_dict() if self.reddi else None,
            "per_mode_margins": list(self.per_mode_margins),
            "epsilon_star": self.epsilon_star,
        }


def spectral_radius(eigs) -> float:
    """Maximum eigenvalue modulus."""
    eigs = list(eigs)
    if not eigs:
        raise UsageError("spectral_radius of an empty eigenvalue list")
    return max(abs(z) for z in eigs)


def adam_phi(hp: HyperParams, mu) -> Array:
    """Per-mode quantity (alpha * mu / epsilon) * (1 - beta1)."""
    return (hp.alpha * np.asarray(mu, dtype=float) / hp.epsilon) * (1.0 - hp.beta1)


def adam_closed_form_eigs(hp: HyperParams, spectrum: HessianSpectrum) -> list[complex]:
    """3n eigenvalues of the ADAM fixed-point Jacobian.

    Per Hessian mode mu_i: beta2, and the two roots of
    lambda^2 - (beta1 + 1 - phi_i) lambda + beta1 = 0.
    """
    eigs: list[complex] = []
    for mu in spectrum.eigenvalues:
        phi = float(adam_phi(hp, mu))
        b = hp.beta1 + 1.0 - phi
        disc = b * b - 4.0 * hp.beta1
        root = cmath.sqrt(disc)
        eigs.append(complex(hp.beta2))
        eigs.append((b + root) / 2.0)
        eigs.append((b - root) / 2.0)
    return eigs


def closed_form_eigs(spec: OptimizerSpec, spectrum: HessianSpectrum) -> list[complex]:
    """Per-family fixed-point eigenvalue multiset in the Jacobian's dimension."""
    hp = spec.hyper
    mus = spectrum.eigenvalues
    if spec.family == "adam":
        return adam_closed_form_eigs(hp, spectrum)
    if spec.family == "rmsprop":
        return [complex(hp.beta)] * len(mus) + [
            complex(1.0 - hp.alpha / hp.epsilon * mu) for mu in mus
        ]
    if spec.family == "adagrad":
        return [complex(1.0)] * len(mus) + [
            complex(1.0 - hp.alpha / hp.epsilon * mu) for mu in mus
        ]
    if spec.family == "adadelta":
        return [complex(hp.beta)] * (2 * len(mus)) + [
            complex(1.0 - hp.alpha * mu) for mu in mus
        ]
    if spec.family == "sgd":
        return [complex(1.0 - hp.alpha * mu) for mu in mus]
    raise UsageError(f"unknown family {spec.family!r}")


def numerical_jacobian(spec: OptimizerSpec, obj: Objective, t: int, x: State) -> Array:
    """Finite-difference Jacobian of the autonomous map at ``x``.

    Fourth-order central stencil with per-coordinate step scaled as in the
    finite-difference oracles; independent of the closed forms.
    """
    tbar = autonomous_map(spec, obj)
    x0 = x.pack(spec.layout)
    dim = len(x0)
    jac = np.empty((dim, dim))
    for j in range(dim):
        h = FD_STEP * max(1.0, abs(x0[j]))
        e = np.zeros(dim)
        e[j] = 1.0
        f_p1 = tbar(x0 + h * e)
        f_m1 = tbar(x0 - h * e)
        f_p2 = tbar(x0 + 2.0 * h * e)
        f_m2 = tbar(x0 - 2.0 * h * e)
        jac[:, j] = (-f_p2 + 8.0 * f_p1 - 8.0 * f_m1 + f_m2) / (12.0 * h)
    if not np.all(np.isfinite(jac)):
        bad = int(np.argmax(~np.isfinite(jac)))
        raise DivergedError(t, bad, float(jac.flat[bad]))
    return jac


def numerical_eigs(spec: OptimizerSpec, obj: Objective, t: int, x: State) -> list[complex]:
    return [complex(z) for z in np.linalg.eigvals(numerical_jacobian(spec, obj, t, x))]


def match_eig_multisets(a, b) -> float:
    """Greedy nearest-neighbor pairing; returns the worst pair distance.

    Raises UsageError on length mismatch; the caller compares the returned
    distance against its tolerance.
    """
    a, b = list(a), list(b)
    if len(a) != len(b):
        raise UsageError("eigenvalue multisets differ in size")
    remaining = list(b)
    worst = 0.0
    for z in sorted(a, key=lambda z: (z.real, z.imag)):
        dists = [abs(z - y) for y in remaining]
        k = int(np.argmin(dists))
        worst = max(worst, dists[k])
        remaining.pop(k)
    return worst


def classical_bounds(hp: HyperParams) -> tuple[BoundVerdict, BoundVerdict]:
    """A-priori ADAM conditions: Kingma beta1^2 < sqrt(beta2); Reddi beta1 < sqrt(beta2)."""
    rhs = float(np.sqrt(hp.beta2))
    kingma = BoundVerdict("adam", "kingma", hp.beta1**2, rhs, hp.beta1**2 < rhs)
    reddi = BoundVerdict("adam", "reddi", hp.beta1, rhs, hp.beta1 < rhs)
    return kingma, reddi


def bound_check(spec: OptimizerSpec, spectrum: HessianSpectrum) -> BoundVerdict:
    """The family's convergence inequality over the Hessian spectrum (strict)."""
    hp = spec.hyper
    flagged = not spectrum.positive_definite
    mu_max = spectrum.mu_max
    family = spec.family
    if family == "sgd" or family == "adadelta":
        lhs, rhs = mu_max, 2.0 / hp.alpha
    elif family == "rmsprop":
        lhs, rhs = mu_max, 2.0 * hp.epsilon / hp.alpha
    elif family == "adam":
        lhs = hp.alpha / hp.epsilon * mu_max * (1.0 - hp.beta1)
        rhs = 2.0 * hp.beta1 + 2.0
    elif family == "adagrad":
        return BoundVerdict(family, "ours", float("nan"), float("nan"),
                            None, flagged)
    else:
        raise UsageError(f"unknown family {family!r}")
    return BoundVerdict(family, "ours", float(lhs), float(rhs),
                        bool(lhs < rhs), flagged)


def per_mode_margins(spec: OptimizerSpec, spectrum: HessianSpectrum) -> tuple[float, ...]:
    """Margin (rhs - lhs) of the family inequality evaluated per Hessian mode."""
    margins = []
    for mu in spectrum.eigenvalues:
        one = HessianSpectrum((mu,))
        verdict = bound_check(spec, one)
        margins.append(verdict.margin)
    return tuple(margins)


def epsilon_boundary(hp: HyperParams, mu_max: float) -> float:
    """Threshold eps* = alpha * mu_max * (1 - beta1) / (2 beta1 + 2).

    The ADAM inequality holds exactly for epsilon > eps*.
    """
    return hp.alpha * mu_max * (1.0 - hp.beta1) / (2.0 * hp.beta1 + 2.0)


def analyze(spec: OptimizerSpec, obj: Objective, wstar=None) -> StabilityReport:
    """Full report at a critical point: eigenvalues, rho, all bound verdicts."""
    xstar = fixed_point(spec, obj, wstar)
    spectrum = hessian_spectrum(obj, xstar.w)
    eigs = closed_form_eigs(spec, spectrum)
    rho = spectral_radius(eigs)
    ours = bound_check(spec, spectrum)
    kingma = reddi = None
    eps_star = None
    if spec.family == "adam":
        kingma, reddi = classical_bounds(spec.hyper)
        eps_star = epsilon_boundary(spec.hyper, spectrum.mu_max)
    return StabilityReport(
        eigenvalues=tuple(eigs),
        spectral_radius=rho,
        ours=ours,
        kingma=kingma,
        reddi=reddi,
        per_mode_margins=per_mode_margins(spec, spectrum),
        epsilon_star=eps_star,
    )
