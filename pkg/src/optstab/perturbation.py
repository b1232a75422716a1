"""Sampled verification of the perturbation estimates behind the convergence proof.

Every check draws states around the fixed point, evaluates both sides of the
claimed inequality, and reports violation counts with a witness. Verification
is sampled, not exhaustive; the Euclidean norm is used throughout except for
the weighted norm inside the bias-correction bound, which is exactly the
intermediate quantity of the estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import (
    HyperParams,
    OptimizerSpec,
    State,
    bias_factor,
    fixed_point,
    step_components,
)
from .errors import CertificateUnavailableError, DomainError, UsageError
from .objectives import Objective, hessian_spectrum
from .stability import bound_check, closed_form_eigs, spectral_radius

Array = np.ndarray

SLACK = 1e-12


def sample_ball(rng: np.random.Generator, count: int, dim: int, radius: float) -> Array:
    """Uniform samples from the closed Euclidean ball, shape (count, dim)."""
    d = rng.normal(size=(count, dim))
    d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
    r = radius * rng.uniform(size=(count, 1)) ** (1.0 / dim)
    return d * r


def estimate_lipschitz(obj: Objective, wstar: Array, radius: float,
                       sample_count: int = 1000, seed: int = 0) -> float:
    """Local gradient Lipschitz constant: max Hessian 2-norm on the ball, +5%."""
    rng = np.random.default_rng(seed)
    pts = wstar + sample_ball(rng, sample_count, obj.dim, radius)
    worst = 0.0
    for p in pts:
        mu = np.linalg.eigvalsh(obj.hessian(p))
        worst = max(worst, float(np.max(np.abs(mu))))
    return 1.05 * worst


@dataclass(frozen=True)
class ThetaBoundConstants:
    C: float
    beta_decay: float
    lipschitz: float

    def to_dict(self) -> dict:
        return {"C": self.C, "beta_decay": self.beta_decay,
                "lipschitz": self.lipschitz}


def theta_bound_constants(hp: HyperParams, lipschitz: float) -> ThetaBoundConstants:
    c = 4.0 * hp.alpha / (
        hp.epsilon * (1.0 - hp.beta1) * (np.sqrt(1.0 - hp.beta2) + (1.0 - hp.beta1))
    )
    return ThetaBoundConstants(
        C=float(c),
        beta_decay=max(hp.beta1, hp.beta2, hp.beta1**2),
        lipschitz=lipschitz,
    )


@dataclass(frozen=True)
class CheckReport:
    name: str
    sample_count: int
    violations: int
    max_ratio: float
    witness: dict | None = None
    extra: dict | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        d = {
            "check": self.name,
            "sample_count": self.sample_count,
            "violations": self.violations,
            "max_ratio": self.max_ratio,
            "passed": self.passed,
        }
        if self.witness is not None:
            d["witness"] = self.witness
        if self.extra is not None:
            d.update(self.extra)
        return d


def verify_theta_bound(obj: Objective, hp: HyperParams, sample_count: int = 1000,
                       radius: float = 0.1, seed: int = 0,
                       t_max: int = 200) -> CheckReport:
    """Check ||Theta(t,x)|| <= C beta^{t+1} (b1 ||m|| + (1-b1) L ||w-w*||).

    Samples (t, x) with x in a ball around the fixed point (v clipped to be
    nonnegative) and t in {0..t_max}.
    """
    if obj.minimum is None:
        raise UsageError("theta bound needs an objective with a known minimum")
    rng = np.random.default_rng(seed)
    wstar = obj.minimum
    n = obj.dim
    lip = estimate_lipschitz(obj, wstar, radius, seed=seed)
    consts = theta_bound_constants(hp, lip)

    dev = sample_ball(rng, sample_count, 3 * n, radius)
    m = dev[:, :n]
    v = np.abs(dev[:, n:2 * n])
    w = wstar + dev[:, 2 * n:]
    t = rng.integers(0, t_max + 1, size=sample_count)

    g = obj.grad(w)
    m1 = hp.beta1 * m + (1.0 - hp.beta1) * g
    v1 = hp.beta2 * v + (1.0 - hp.beta2) * g * g
    factor = bias_factor(t, hp.beta1, hp.beta2)
    lhs = hp.alpha * np.abs(1.0 - factor) * np.linalg.norm(
        m1 / np.sqrt(v1 + hp.epsilon**2), axis=1
    )
    rhs = consts.C * consts.beta_decay ** (t + 1) * (
        hp.beta1 * np.linalg.norm(m, axis=1)
        + (1.0 - hp.beta1) * consts.lipschitz * np.linalg.norm(w - wstar, axis=1)
    )
    bad = lhs > rhs + SLACK
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), 0.0)
    witness = None
    if np.any(bad):
        i = int(np.argmax(bad))
        witness = {"t": int(t[i]), "m": m[i].tolist(), "v": v[i].tolist(),
                   "w": w[i].tolist(), "lhs": float(lhs[i]), "rhs": float(rhs[i])}
    return CheckReport(
        name="theta_bound",
        sample_count=sample_count,
        violations=int(np.sum(bad)),
        max_ratio=float(np.max(ratio)),
        witness=witness,
        extra={"constants": consts.to_dict()},
    )


def verify_h_bound(hp: HyperParams, sample_count: int = 1000,
                   radius: float = 1.0, seed: int = 0) -> CheckReport:
    """Check both epsilon-placement estimates.

    Scalar part: |1/(sqrt(v)+eps) - 1/sqrt(v+eps^2)| <= 1/eps on a log-spaced
    v-grid including 0. State part: ||h(x)|| <= (alpha/eps) ||x - x*|| over a
    ball of moment states with v >= 0 (w enters the norm but not h).
    """
    eps = hp.epsilon
    grid_count = max(sample_count // 2, 2)
    v_grid = np.concatenate(
        [[0.0], np.logspace(np.log10(eps * eps) - 10.0,
                            np.log10(eps * eps) + 14.0, grid_count - 1)]
    )
    scalar_lhs = np.abs(1.0 / (np.sqrt(v_grid) + eps) - 1.0 / np.sqrt(v_grid + eps * eps))
    scalar_bad = scalar_lhs > 1.0 / eps + SLACK

    rng = np.random.default_rng(seed)
    n = 2
    state_count = sample_count - grid_count
    dev = sample_ball(rng, state_count, 3 * n, radius)
    m = dev[:, :n]
    v = np.abs(dev[:, n:2 * n])
    dist = np.linalg.norm(np.concatenate([m, v, dev[:, 2 * n:]], axis=1), axis=1)
    diff = 1.0 / np.sqrt(v + eps * eps) - 1.0 / (np.sqrt(v) + eps)
    h_norm = hp.alpha * np.linalg.norm(m * diff, axis=1)
    state_bad = h_norm > (hp.alpha / eps) * dist + SLACK

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.concatenate([
            scalar_lhs * eps,
            np.where(dist > 0, h_norm / ((hp.alpha / eps) * np.where(dist > 0, dist, 1.0)), 0.0),
        ])
    witness = None
    if np.any(scalar_bad):
        i = int(np.argmax(scalar_bad))
        witness = {"v": float(v_grid[i]), "lhs": float(scalar_lhs[i]),
                   "rhs": 1.0 / eps}
    elif np.any(state_bad):
        i = int(np.argmax(state_bad))
        witness = {"m": m[i].tolist(), "v": v[i].tolist(),
                   "lhs": float(h_norm[i]), "rhs": float(hp.alpha / eps * dist[i])}
    return CheckReport(
        name="h_bound",
        sample_count=int(len(v_grid) + state_count),
        violations=int(np.sum(scalar_bad) + np.sum(state_bad)),
        max_ratio=float(np.max(ratios)),
        witness=witness,
    )


@dataclass(frozen=True)
class GradientLowerBound:
    C: float
    verified: bool
    applicable: bool = True

    def to_dict(self) -> dict:
        return {"C": self.C, "verified": self.verified,
                "applicable": self.applicable}


def gradient_lower_bound(obj: Objective, radius: float,
                         sample_count: int = 1000, seed: int = 0) -> GradientLowerBound:
    """Estimate C with ||g(w)|| >= C ||w - w*|| near the minimum.

    C = 1/||H(w*)^{-1}|| - delta, with delta the sampled linearization
    remainder constant inflated by 5%; verified over the sampled ball.
    """
    if obj.minimum is None:
        raise UsageError("gradient lower bound needs a known minimum")
    wstar = obj.minimum
    spectrum = hessian_spectrum(obj, wstar)
    if min(abs(mu) for mu in spectrum.eigenvalues) < 1e-12:
        return GradientLowerBound(C=float("nan"), verified=False, applicable=False)
    if not spectrum.positive_definite:
        return GradientLowerBound(C=float("nan"), verified=False, applicable=False)
    inv_norm = spectrum.mu_min  # 1/||H^{-1}||_2 for SPD H

    rng = np.random.default_rng(seed)
    dev = sample_ball(rng, sample_count, obj.dim, radius)
    keep = np.linalg.norm(dev, axis=1) > 0
    dev = dev[keep]
    w = wstar + dev
    g = obj.grad(w)
    hess = obj.hessian(wstar)
    linear = dev @ hess.T
    dist = np.linalg.norm(dev, axis=1)
    remainder = np.linalg.norm(g - linear, axis=1) / dist
    delta = 1.05 * float(np.max(remainder)) if len(remainder) else 0.0
    c = inv_norm - delta
    verified = c > 0 and bool(
        np.all(np.linalg.norm(g, axis=1) >= c * dist - SLACK)
    )
    return GradientLowerBound(C=float(c), verified=verified)


@dataclass(frozen=True)
class LyapunovCertificate:
    horizon: int
    c1: float
    c2: float
    c3: float
    c4: float
    k: float
    decay: float
    sample_count: int
    violations: int

    @property
    def valid(self) -> bool:
        return self.violations == 0 and min(self.c1, self.c2, self.c3, self.c4) > 0

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon, "c1": self.c1, "c2": self.c2,
            "c3": self.c3, "c4": self.c4, "k": self.k, "decay": self.decay,
            "sample_count": self.sample_count, "violations": self.violations,
            "valid": self.valid,
        }


def _autonomous_batch(spec: OptimizerSpec, obj: Objective, m, v, w):
    hp = spec.hyper
    return step_components(
        spec.family, "eps2_nobias", obj.grad_fn, 0, m, v, w,
        hp.alpha, hp.epsilon, hp.beta1, hp.beta2, hp.beta,
    )


def _batch_states(spec: OptimizerSpec, xstar: State, dev: Array, n: int):
    """Split ball deviations into (m, v, w) batches per the family layout."""
    layout = spec.layout
    parts = {}
    for i, name in enumerate(layout):
        parts[name] = dev[:, i * n:(i + 1) * n]
    m = parts.get("m")
    v = parts.get("v")
    if v is not None:
        v = np.abs(v)  # moment constraint: second moments are nonnegative
    w = xstar.w + parts["w"]
    return m, v, w


def lyapunov_value(spec: OptimizerSpec, obj: Objective, x0: State,
                   horizon: int) -> float:
    """V(x0): sum of squared deviations along ``horizon`` autonomous steps."""
    xstar = fixed_point(spec, obj)
    ref = xstar.pack(spec.layout)
    m, v, w = x0.m, x0.v, x0.w
    total = 0.0
    for _ in range(horizon):
        cur = State(w=w, m=m, v=v).pack(spec.layout)
        total += float(np.sum((cur - ref) ** 2))
        m, v, w = _autonomous_batch(spec, obj, m, v, w)
    return total


#: largest horizon the automatic search will try
MAX_HORIZON = 16_384


class _HorizonTooSmall(DomainError):
    """Fitted envelope does not contract over the requested horizon."""


def lyapunov_certificate(spec: OptimizerSpec, obj: Objective,
                         horizon: int | None = None,
                         sample_count: int = 500, radius: float = 0.05,
                         seed: int = 0) -> LyapunovCertificate:
    """Numerical certificate for the converse-Lyapunov construction.

    Builds V by summing squared deviations over ``horizon`` steps of the
    autonomous map, fits the exponential envelope (k, decay) from the sampled
    trajectories, and extracts the sandwich/decrease/Lipschitz constants
    consistent with all samples. When ``horizon`` is None it is doubled from
    64 until the construction's requirement 1 - k^2 e^{-2*decay*N} > 0 holds
    (the proof picks N large enough for exactly this).
    """
    if horizon is None:
        n = 64
        while True:
            try:
                return lyapunov_certificate(spec, obj, n, sample_count,
                                            radius, seed)
            except _HorizonTooSmall:
                if n >= MAX_HORIZON:
                    raise
                n *= 2
    xstar = fixed_point(spec, obj)
    spectrum = hessian_spectrum(obj, xstar.w)
    verdict = bound_check(spec, spectrum)
    rho = spectral_radius(closed_form_eigs(spec, spectrum))
    if verdict.satisfied is not True or rho >= 1.0:
        raise CertificateUnavailableError(
            f"fixed point not certified stable (rho={rho:.6g}, "
            f"bound satisfied={verdict.satisfied})"
        )

    n = obj.dim
    dim = spec.state_dim(n)
    rng = np.random.default_rng(seed)
    dev = sample_ball(rng, sample_count, dim, radius)
    m, v, w = _batch_states(spec, xstar, dev, n)
    ref = xstar.pack(spec.layout)

    def packed(m, v, w):
        comps = []
        for name in spec.layout:
            comps.append({"m": m, "v": v, "w": w}[name])
        return np.concatenate(comps, axis=1)

    dists = [np.linalg.norm(packed(m, v, w) - ref, axis=1)]
    for _ in range(horizon):
        m, v, w = _autonomous_batch(spec, obj, m, v, w)
        dists.append(np.linalg.norm(packed(m, v, w) - ref, axis=1))
    d = np.stack(dists)  # (horizon+1, samples)

    d0 = d[0]
    live = d0 > 0
    sq = d * d
    value = np.sum(sq[:horizon], axis=0)       # V(x)
    value_next = np.sum(sq[1:horizon + 1], axis=0)  # V(T(x))

    with np.errstate(divide="ignore", invalid="ignore"):
        per_rate = np.where(live, (d[horizon] / np.where(live, d0, 1.0)) ** (1.0 / horizon), 0.0)
    c_env = float(np.max(per_rate))
    decay = -np.log(max(c_env, 1e-300))
    t_axis = np.arange(horizon + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        k = float(np.max(np.where(live, d / np.where(live, d0, 1.0), 0.0)
                         * np.exp(decay * t_axis)))
    if not 1.0 - k * k * np.exp(-2.0 * decay * horizon) > 0.0:
        raise _HorizonTooSmall(
            f"horizon {horizon} too small for fitted envelope (k={k:.3g}, "
            f"decay={decay:.3g}); increase it"
        )

    ratio_v = value[live] / (d0[live] ** 2)
    c1 = float(np.min(ratio_v)) if np.any(live) else 1.0
    c2 = float(np.max(ratio_v)) if np.any(live) else 1.0
    c3 = float(np.min((value[live] - value_next[live]) / d0[live] ** 2)) if np.any(live) else 1.0

    # Lipschitz-type constant over consecutive sample pairs
    x0_all = packed(*_batch_states(spec, xstar, dev, n))
    diffs = np.linalg.norm(x0_all[:-1] - x0_all[1:], axis=1)
    sums = d0[:-1] + d0[1:]
    ok = diffs * sums > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        c4_ratios = np.abs(value[:-1] - value[1:])[ok] / (diffs[ok] * sums[ok])
    c4 = float(np.max(c4_ratios)) if np.any(ok) else 1.0

    # violations against the guaranteed inequalities: V >= ||x-x*||^2 and
    # strict decrease along the map
    lower_bad = value < d0 * d0 * (1.0 - SLACK)
    decrease_bad = live & (value_next >= value)
    violations = int(np.sum(lower_bad) + np.sum(decrease_bad))

    return LyapunovCertificate(
        horizon=horizon, c1=c1, c2=c2, c3=c3, c4=c4,
        k=k, decay=float(decay),
        sample_count=sample_count, violations=violations,
    )


@dataclass(frozen=True)
class EnvelopeFit:
    rate: float
    holds: bool

    def to_dict(self) -> dict:
        return {"rate": self.rate, "holds": self.holds}


def state_distance(a: State, b: State) -> float:
    parts = []
    for name in ("m", "v", "w"):
        x, y = getattr(a, name), getattr(b, name)
        if x is not None and y is not None:
            parts.append(np.asarray(x) - np.asarray(y))
    return float(np.linalg.norm(np.concatenate(parts)))


def convergence_envelope(traj, xstar: State) -> EnvelopeFit:
    """Fit the exponential envelope rate c on the tail half of a trajectory.

    Least squares on log-distances; ``holds`` requires c < 1 and a real decay
    over the fitted window (distance at least halved), so bounded jitter
    around the fixed point does not pass on slope noise alone.
    """
    if getattr(traj, "diverged", False):
        return EnvelopeFit(rate=float("inf"), holds=False)
    states = traj.states
    if len(states) < 50:
        raise UsageError("envelope fit needs a trajectory of at least 50 states")
    d = np.array([state_distance(s, xstar) for s in states])
    if np.max(d) == 0.0:
        return EnvelopeFit(rate=0.0, holds=True)
    start = len(d) // 2
    ts = np.arange(len(d))[start:]
    tail = d[start:]
    pos = tail > 0
    if np.sum(pos) < 2:
        return EnvelopeFit(rate=0.0, holds=True)
    slope, _ = np.polyfit(ts[pos], np.log(tail[pos]), 1)
    c = float(np.exp(slope))
    window = int(np.sum(pos))
    holds = c < 1.0 and c**window < 0.5
    return EnvelopeFit(rate=c, holds=holds)
