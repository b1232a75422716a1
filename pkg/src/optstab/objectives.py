"""Test objectives with analytic derivatives and finite-difference oracles.

Every objective carries an analytic gradient and Hessian. Gradient callables
accept arrays of shape ``(..., n)`` and act componentwise over leading axes,
which is what the batched sweep engine relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UsageError

Array = np.ndarray

#: default central-difference step scale (cube root of machine epsilon)
FD_STEP = float(np.cbrt(np.finfo(float).eps))


def _as_point(w, n: int) -> Array:
    w = np.asarray(w, dtype=float)
    if w.ndim == 0:
        w = w.reshape(1)
    if w.shape[-1] != n:
        raise UsageError(f"expected point of dimension {n}, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise UsageError("point contains non-finite components")
    return w


@dataclass(frozen=True)
class Objective:
    """A scalar field with analytic derivatives and (optionally) a known minimum."""

    name: str
    dim: int
    eval_fn: Callable[[Array], Array]
    grad_fn: Callable[[Array], Array]
    hess_fn: Callable[[Array], Array]
    minimum: Array | None = None

    def __call__(self, w) -> float:
        return float(self.eval_fn(_as_point(w, self.dim)))

    def grad(self, w) -> Array:
        """Analytic gradient; broadcasts over leading axes of ``w``."""
        return self.grad_fn(_as_point(w, self.dim))

    def hessian(self, w) -> Array:
        """Analytic Hessian at a single point, shape (n, n)."""
        return np.asarray(self.hess_fn(_as_point(w, self.dim)), dtype=float)


@dataclass(frozen=True)
class HessianSpectrum:
    """Sorted eigenvalues of a symmetric Hessian."""

    eigenvalues: tuple[float, ...]

    @property
    def positive_definite(self) -> bool:
        return min(self.eigenvalues) > 0.0

    @property
    def mu_max(self) -> float:
        return max(self.eigenvalues)

    @property
    def mu_min(self) -> float:
        return min(self.eigenvalues)


@dataclass(frozen=True)
class FdReport:
    max_rel_err_grad: float
    max_rel_err_hess: float

    def to_dict(self) -> dict:
        return {
            "max_rel_err_grad": self.max_rel_err_grad,
            "max_rel_err_hess": self.max_rel_err_hess,
        }


def grad(obj: Objective, w) -> Array:
    return obj.grad(w)


def hessian_spectrum(obj: Objective, w) -> HessianSpectrum:
    """Eigenvalues of the (symmetric) Hessian at ``w``, ascending."""
    h = obj.hessian(w)
    mu = np.linalg.eigvalsh(0.5 * (h + h.T))
    return HessianSpectrum(tuple(float(x) for x in mu))


def fd_steps(w: Array, step: float | None = None) -> Array:
    """Per-coordinate central-difference step: scale * max(1, |w_i|)."""
    scale = FD_STEP if step is None else float(step)
    return scale * np.maximum(1.0, np.abs(w))


def fd_gradient(obj: Objective, w, step: float | None = None) -> Array:
    w = _as_point(w, obj.dim)
    h = fd_steps(w, step)
    g = np.empty_like(w)
    for i in range(obj.dim):
        e = np.zeros_like(w)
        e[i] = h[i]
        g[i] = (obj(w + e) - obj(w - e)) / (2.0 * h[i])
    return g


def fd_hessian(obj: Objective, w, step: float | None = None) -> Array:
    """Central differences of the analytic gradient, symmetrized."""
    w = _as_point(w, obj.dim)
    h = fd_steps(w, step)
    cols = []
    for i in range(obj.dim):
        e = np.zeros_like(w)
        e[i] = h[i]
        cols.append((obj.grad(w + e) - obj.grad(w - e)) / (2.0 * h[i]))
    hess = np.stack(cols, axis=-1)
    return 0.5 * (hess + hess.T)


def fd_check(obj: Objective, w, step: float | None = None) -> FdReport:
    """Compare analytic gradient/Hessian against central differences."""
    if step is not None and step <= 0:
        raise UsageError("finite-difference step must be positive")
    w = _as_point(w, obj.dim)
    g_a, g_fd = obj.grad(w), fd_gradient(obj, w, step)
    h_a, h_fd = obj.hessian(w), fd_hessian(obj, w, step)
    err_g = np.max(np.abs(g_a - g_fd)) / max(1.0, float(np.max(np.abs(g_a))))
    err_h = np.max(np.abs(h_a - h_fd)) / max(1.0, float(np.max(np.abs(h_a))))
    return FdReport(float(err_g), float(err_h))


# ---------------------------------------------------------------------------
# built-in objectives
# ---------------------------------------------------------------------------

def quad1d() -> Objective:
    """f(w) = w^2/2 + 10, minimum at 0."""
    return Objective(
        name="quad1d",
        dim=1,
        eval_fn=lambda w: 0.5 * w[..., 0] ** 2 + 10.0,
        grad_fn=lambda w: w.copy(),
        hess_fn=lambda w: np.array([[1.0]]),
        minimum=np.array([0.0]),
    )


def quartic() -> Objective:
    """f(w) = w^4 + w^3, minimum at -3/4."""
    return Objective(
        name="quartic",
        dim=1,
        eval_fn=lambda w: w[..., 0] ** 4 + w[..., 0] ** 3,
        grad_fn=lambda w: 4.0 * w**3 + 3.0 * w**2,
        hess_fn=lambda w: np.array([[12.0 * w[0] ** 2 + 6.0 * w[0]]]),
        minimum=np.array([-0.75]),
    )


def twodim() -> Objective:
    """f(w1,w2) = (w1+2)^2 (w2+1)^2 + (w1+2)^2 + 0.1 (w2+1)^2, minimum (-2,-1)."""

    def _eval(w):
        a, b = w[..., 0] + 2.0, w[..., 1] + 1.0
        return a * a * b * b + a * a + 0.1 * b * b

    def _grad(w):
        a, b = w[..., 0] + 2.0, w[..., 1] + 1.0
        return np.stack(
            [2.0 * a * b * b + 2.0 * a, 2.0 * a * a * b + 0.2 * b], axis=-1
        )

    def _hess(w):
        a, b = w[0] + 2.0, w[1] + 1.0
        return np.array(
            [
                [2.0 * b * b + 2.0, 4.0 * a * b],
                [4.0 * a * b, 2.0 * a * a + 0.2],
            ]
        )

    return Objective(
        name="twodim",
        dim=2,
        eval_fn=_eval,
        grad_fn=_grad,
        hess_fn=_hess,
        minimum=np.array([-2.0, -1.0]),
    )


def scaled_quad(c: float) -> Objective:
    """f(w) = c w^2 / 2, minimum at 0; Hessian spectrum is exactly {c}."""
    c = float(c)
    return Objective(
        name=f"scaled_quad:{c!r}",
        dim=1,
        eval_fn=lambda w: 0.5 * c * w[..., 0] ** 2,
        grad_fn=lambda w: c * w,
        hess_fn=lambda w: np.array([[c]]),
        minimum=np.array([0.0]),
    )


_BUILTINS = {
    "quad1d": quad1d,
    "quartic": quartic,
    "twodim": twodim,
}


def by_name(objective_id: str) -> Objective:
    """Resolve a string id: quad1d | quartic | twodim | scaled_quad:<c>."""
    if objective_id in _BUILTINS:
        return _BUILTINS[objective_id]()
    if objective_id.startswith("scaled_quad:"):
        try:
            c = float(objective_id.split(":", 1)[1])
        except ValueError as exc:
            raise UsageError(f"bad scaled_quad parameter in {objective_id!r}") from exc
        return scaled_quad(c)
    raise UsageError(f"unknown objective {objective_id!r}")


def builtin_ids() -> list[str]:
    return [*_BUILTINS, "scaled_quad:<c>"]
