"""Optimizers as discrete-time dynamical systems.

Each family iterates a map x_{t+1} = T(t, x_t) on a stacked state. Layouts:

* adam      x = (m, v, w)  in R^{3n}
* adadelta  x = (v, m, w)  in R^{3n}
* rmsprop   x = (v, w)     in R^{2n}
* adagrad   x = (v, w)     in R^{2n}
* sgd       x = w          in R^n

The ADAM variants differ in epsilon placement and bias correction:

* ``eps2_bias``    denominator sqrt(v + eps^2), bias-corrected step
* ``eps2_nobias``  denominator sqrt(v + eps^2), no bias correction
                   (the autonomous map whose Jacobian drives the analysis)
* ``orig_nobias``  denominator sqrt(v) + eps, no bias correction
* ``orig_bias``    denominator sqrt(v) + eps, bias-corrected step

The low-level ``*_components`` kernels operate on arrays of shape (..., n)
and accept scalar or broadcastable array hyperparameters; batched sweeps pass
per-cell hyperparameter columns. All maps are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergedError, NotACriticalPointError, UsageError
from .objectives import Objective

Array = np.ndarray

FAMILIES = ("sgd", "rmsprop", "adagrad", "adadelta", "adam")
ADAM_VARIANTS = ("eps2_bias", "eps2_nobias", "orig_nobias", "orig_bias")

LAYOUTS: dict[str, tuple[str, ...]] = {
    "adam": ("m", "v", "w"),
    "adadelta": ("v", "m", "w"),
    "rmsprop": ("v", "w"),
    "adagrad": ("v", "w"),
    "sgd": ("w",),
}

#: any state component beyond this magnitude aborts a trajectory
DIVERGENCE_LIMIT = 1e12

#: tolerance on the gradient when constructing a fixed point
CRITICAL_POINT_TOL = 1e-8


@dataclass(frozen=True)
class HyperParams:
    """Hyperparameters shared by all families.

    ``beta`` is the single decay rate of RMSProp/AdaDelta; ``beta = 1``
    encodes the degenerate decay of SGD and AdaGrad.
    """

    alpha: float
    epsilon: float
    beta1: float = 0.9
    beta2: float = 0.999
    beta: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise UsageError("alpha must be positive")
        if not self.epsilon > 0:
            raise UsageError("epsilon must be positive")
        if not 0 < self.beta <= 1:
            raise UsageError("beta must lie in (0, 1]")


@dataclass(frozen=True)
class OptimizerSpec:
    """Identifies the optimizer family, ADAM variant, and hyperparameters."""

    family: str
    hyper: HyperParams
    adam_variant: str = "eps2_bias"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown family {self.family!r}")
        if self.family == "adam":
            if self.adam_variant not in ADAM_VARIANTS:
                raise UsageError(f"unknown adam variant {self.adam_variant!r}")
            if not (0 < self.hyper.beta1 < 1 and 0 < self.hyper.beta2 < 1):
                raise UsageError("adam requires beta1, beta2 in (0, 1)")
        if self.family in ("rmsprop", "adadelta") and not 0 < self.hyper.beta < 1:
            raise UsageError(f"{self.family} requires beta in (0, 1)")

    @property
    def layout(self) -> tuple[str, ...]:
        return LAYOUTS[self.family]

    def state_dim(self, n: int) -> int:
        return len(self.layout) * n

    def to_dict(self) -> dict:
        d = {"family": self.family, "alpha": self.hyper.alpha,
             "epsilon": self.hyper.epsilon}
        if self.family == "adam":
            d["variant"] = self.adam_variant
            d["beta1"] = self.hyper.beta1
            d["beta2"] = self.hyper.beta2
        else:
            d["beta"] = self.hyper.beta
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerSpec":
        try:
            family = d["family"]
            hyper = HyperParams(
                alpha=float(d["alpha"]),
                epsilon=float(d["epsilon"]),
                beta1=float(d.get("beta1", 0.9)),
                beta2=float(d.get("beta2", 0.999)),
                beta=float(d.get("beta", 1.0)),
            )
        except KeyError as exc:
            raise UsageError(f"optimizer spec missing field {exc}") from exc
        return cls(family=family, hyper=hyper,
                   adam_variant=d.get("variant", "eps2_bias"))


@dataclass
class State:
    """State of the iteration at index ``t``; unused moments stay ``None``."""

    w: Array
    m: Array | None = None
    v: Array | None = None
    t: int = 0

    def component(self, name: str) -> Array:
        value = getattr(self, name)
        if value is None:
            raise UsageError(f"state has no component {name!r}")
        return value

    def pack(self, layout: tuple[str, ...]) -> Array:
        return np.concatenate([self.component(name) for name in layout])

    @classmethod
    def unpack(cls, x: Array, layout: tuple[str, ...], t: int = 0) -> "State":
        n, rem = divmod(len(x), len(layout))
        if rem:
            raise UsageError("packed state length does not match layout")
        parts = {name: np.asarray(x[i * n:(i + 1) * n], dtype=float)
                 for i, name in enumerate(layout)}
        return cls(w=parts["w"], m=parts.get("m"), v=parts.get("v"), t=t)


def zero_state(spec: OptimizerSpec, w0) -> State:
    """Algorithm start: zero moments, weights at ``w0``, t = 0."""
    w0 = np.asarray(w0, dtype=float).reshape(-1)
    zeros = np.zeros_like(w0)
    return State(
        w=w0.copy(),
        m=zeros.copy() if "m" in LAYOUTS[spec.family] else None,
        v=zeros.copy() if "v" in LAYOUTS[spec.family] else None,
        t=0,
    )


def bias_factor(t, beta1, beta2):
    """ADAM bias-correction factor sqrt(1 - beta2^(t+1)) / (1 - beta1^(t+1))."""
    return np.sqrt(1.0 - beta2 ** (t + 1)) / (1.0 - beta1 ** (t + 1))


# ---------------------------------------------------------------------------
# batched kernels (arrays of shape (..., n); hyperparameters broadcastable)
# ---------------------------------------------------------------------------

def adam_components(grad_fn, t, m, v, w, alpha, epsilon, beta1, beta2,
                    variant="eps2_bias"):
    g = grad_fn(w)
    m1 = beta1 * m + (1.0 - beta1) * g
    v1 = beta2 * v + (1.0 - beta2) * g * g
    if variant.startswith("eps2"):
        denom = np.sqrt(v1 + epsilon * epsilon)
    else:
        denom = np.sqrt(v1) + epsilon
    factor = bias_factor(t, beta1, beta2) if variant.endswith("_bias") else 1.0
    w1 = w - alpha * factor * m1 / denom
    return m1, v1, w1


def rmsprop_components(grad_fn, m, v, w, alpha, epsilon, beta):
    g = grad_fn(w)
    v1 = beta * v + (1.0 - beta) * g * g
    w1 = w - alpha * g / np.sqrt(v1 + epsilon * epsilon)
    return None, v1, w1


def adagrad_components(grad_fn, m, v, w, alpha, epsilon):
    g = grad_fn(w)
    v1 = v + g * g
    w1 = w - alpha * g / np.sqrt(v1 + epsilon * epsilon)
    return None, v1, w1


def adadelta_components(grad_fn, m, v, w, alpha, epsilon, beta):
    # v and m live on shifted time steps: m_{t+1} uses m_t and v_{t+1};
    # the step direction is g(w_t) * sqrt(m_t + eps^2).
    g = grad_fn(w)
    e2 = epsilon * epsilon
    v1 = beta * v + (1.0 - beta) * g * g
    m1 = beta * m + (1.0 - beta) * g * g * (m + e2) / (v1 + e2)
    w1 = w - alpha * np.sqrt(m + e2) / np.sqrt(v1 + e2) * g
    return m1, v1, w1


def sgd_components(grad_fn, m, v, w, alpha):
    return None, None, w - alpha * grad_fn(w)


def step_components(family, variant, grad_fn, t, m, v, w,
                    alpha, epsilon, beta1, beta2, beta):
    """Dispatch one update for any family on raw component arrays."""
    if family == "adam":
        return adam_components(grad_fn, t, m, v, w, alpha, epsilon,
                               beta1, beta2, variant)
    if family == "rmsprop":
        return rmsprop_components(grad_fn, m, v, w, alpha, epsilon, beta)
    if family == "adagrad":
        return adagrad_components(grad_fn, m, v, w, alpha, epsilon)
    if family == "adadelta":
        return adadelta_components(grad_fn, m, v, w, alpha, epsilon, beta)
    if family == "sgd":
        return sgd_components(grad_fn, m, v, w, alpha)
    raise UsageError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# public single-trajectory operations
# ---------------------------------------------------------------------------

def _check_finite(state: State, layout: tuple[str, ...]):
    x = state.pack(layout)
    bad = ~np.isfinite(x) | (np.abs(x) > DIVERGENCE_LIMIT)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise DivergedError(state.t, idx, float(x[idx]))


def step(spec: OptimizerSpec, obj: Objective, t: int, x: State) -> State:
    """One update x_{t+1} = T(t, x_t); raises DivergedError on blow-up."""
    if t != x.t:
        raise UsageError(f"iteration index mismatch: t={t} but state.t={x.t}")
    hp = spec.hyper
    m1, v1, w1 = step_components(
        spec.family, spec.adam_variant, obj.grad_fn, t,
        x.m, x.v, x.w, hp.alpha, hp.epsilon, hp.beta1, hp.beta2, hp.beta,
    )
    nxt = State(w=w1, m=m1, v=v1, t=t + 1)
    _check_finite(nxt, spec.layout)
    return nxt


def fixed_point(spec: OptimizerSpec, obj: Objective, wstar=None,
                tol: float = CRITICAL_POINT_TOL) -> State:
    """Zero-moment state at a critical point w* in the family's layout."""
    if wstar is None:
        if obj.minimum is None:
            raise UsageError(f"objective {obj.name!r} has no known minimum")
        wstar = obj.minimum
    wstar = np.asarray(wstar, dtype=float).reshape(-1)
    gnorm = float(np.max(np.abs(obj.grad(wstar))))
    if gnorm > tol:
        raise NotACriticalPointError(
            f"gradient at w*={wstar.tolist()} has max |g| = {gnorm:.3e} > {tol:g}"
        )
    return zero_state(spec, wstar)


def theta(spec: OptimizerSpec, obj: Objective, t: int, x: State) -> Array:
    """Bias-correction perturbation, stacked in the adam layout (m, v, w).

    For eps2 variants this is the Theta of the autonomous/non-autonomous
    split; for orig variants it is the Theta-tilde with denominator
    sqrt(v) + eps. The identity step(bias) = step(nobias) + theta holds
    componentwise.
    """
    if spec.family != "adam":
        raise UsageError("theta is defined for the adam family only")
    hp = spec.hyper
    g = obj.grad(x.w)
    m1 = hp.beta1 * x.m + (1.0 - hp.beta1) * g
    v1 = hp.beta2 * x.v + (1.0 - hp.beta2) * g * g
    if spec.adam_variant.startswith("eps2"):
        denom = np.sqrt(v1 + hp.epsilon**2)
    else:
        denom = np.sqrt(v1) + hp.epsilon
    theta3 = (1.0 - bias_factor(t, hp.beta1, hp.beta2)) * m1 / denom
    zeros = np.zeros_like(x.w)
    return np.concatenate([zeros, zeros, hp.alpha * theta3])


def h_disturbance(x: State, hp: HyperParams) -> Array:
    """Epsilon-placement disturbance between the two ADAM variants.

    ``x`` carries the freshly updated moments (m_{t+1}, v_{t+1}); the weight
    component is h3 = alpha * m_{t+1} * (1/sqrt(v+eps^2) - 1/(sqrt(v)+eps)),
    signed so that step(orig_nobias) = step(eps2_nobias) + h.
    """
    if x.m is None or x.v is None:
        raise UsageError("h_disturbance needs a state with m and v moments")
    if np.any(x.v < 0):
        raise UsageError("h_disturbance requires v >= 0 componentwise")
    eps = hp.epsilon
    diff = 1.0 / np.sqrt(x.v + eps * eps) - 1.0 / (np.sqrt(x.v) + eps)
    zeros = np.zeros_like(x.w)
    return np.concatenate([zeros, zeros, hp.alpha * x.m * diff])


def autonomous_map(spec: OptimizerSpec, obj: Objective) -> Callable[[Array], Array]:
    """The autonomous iteration T-bar as a map on packed state vectors.

    For ADAM this is the eps2 variant without bias correction, regardless of
    the spec's variant; all other families are autonomous as-is.
    """
    hp = spec.hyper
    layout = spec.layout

    def apply(xvec: Array) -> Array:
        st = State.unpack(np.asarray(xvec, dtype=float), layout)
        m1, v1, w1 = step_components(
            spec.family, "eps2_nobias", obj.grad_fn, 0,
            st.m, st.v, st.w, hp.alpha, hp.epsilon, hp.beta1, hp.beta2, hp.beta,
        )
        return State(w=w1, m=m1, v=v1).pack(layout)

    return apply
