"""Trajectories, convergence classification, and colored hyperparameter sweeps.

A sweep runs one trajectory per grid cell for a fixed iteration budget,
classifies convergence (last five weight iterates componentwise within 1e-2
of the known minimum, and no divergence), evaluates the a-priori inequalities,
and assigns each cell one of eight colors. Cells are mathematically
independent; the engine batches them through the vectorized update kernels so
results are bitwise identical for any worker count.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .dynamics import (
    DIVERGENCE_LIMIT,
    FAMILIES,
    LAYOUTS,
    OptimizerSpec,
    State,
    step,
    step_components,
    zero_state,
)
from .errors import DivergedError, UsageError
from .objectives import Objective, by_name, hessian_spectrum

Array = np.ndarray

#: componentwise convergence window around the minimum (inclusive)
CONVERGENCE_TOL = 1e-2
#: number of trailing weight iterates examined by the convergence criterion
CONVERGENCE_WINDOW = 5
#: per-cell iteration budget used by all presets
SWEEP_ITERATIONS = 10_000

HYPER_NAMES = ("alpha", "epsilon", "beta1", "beta2", "beta")
HYPER_DEFAULTS = {"alpha": None, "epsilon": None, "beta1": 0.9,
                  "beta2": 0.999, "beta": 1.0}

#: (kingma, ours, converged) -> color
COLOR_TABLE = {
    (True, True, True): "green",
    (False, True, True): "blue",
    (True, False, True): "yellow",
    (False, False, True): "white",
    (True, True, False): "black",
    (False, True, False): "cyan",
    (True, False, False): "magenta",
    (False, False, False): "red",
}

COLOR_NAMES = ("green", "blue", "yellow", "white", "black", "cyan",
               "magenta", "red")


def _g17(x: float) -> str:
    """17-significant-digit decimal rendering (round-trip exact)."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    spec: OptimizerSpec
    objective_id: str
    states: list[State]
    diverged: bool

    def __len__(self) -> int:
        return len(self.states)

    @property
    def final(self) -> State:
        return self.states[-1]


def run_trajectory(spec: OptimizerSpec, obj: Objective, w0, t_max: int,
                   x0: State | None = None) -> Trajectory:
    """Iterate the step map from the zero-moment start (or ``x0``).

    Divergence is recorded in-band: the trajectory stops at the last finite
    state and ``diverged`` is set.
    """
    if t_max < 1:
        raise UsageError("t_max must be at least 1")
    state = zero_state(spec, w0) if x0 is None else x0
    states = [state]
    diverged = False
    for t in range(state.t, state.t + t_max):
        try:
            state = step(spec, obj, t, state)
        except DivergedError:
            diverged = True
            break
        states.append(state)
    return Trajectory(spec=spec, objective_id=obj.name, states=states,
                      diverged=diverged)


def trajectory_csv(traj: Trajectory, wstar=None) -> str:
    """Render a trajectory as CSV: t, w_*, m_*, v_*, dist_to_min."""
    layout = traj.spec.layout
    n = len(traj.states[0].w)
    if wstar is None:
        wstar = by_name(traj.objective_id).minimum
    wstar = None if wstar is None else np.asarray(wstar, dtype=float)
    cols = ["t"]
    cols += [f"w_{i}" for i in range(n)]
    if "m" in layout:
        cols += [f"m_{i}" for i in range(n)]
    if "v" in layout:
        cols += [f"v_{i}" for i in range(n)]
    cols.append("dist_to_min")
    out = io.StringIO()
    out.write(",".join(cols) + "\n")
    for st in traj.states:
        row = [str(st.t)]
        row += [_g17(x) for x in st.w]
        if "m" in layout:
            row += [_g17(x) for x in st.m]
        if "v" in layout:
            row += [_g17(x) for x in st.v]
        dist = float("nan") if wstar is None else float(np.linalg.norm(st.w - wstar))
        row.append(_g17(dist))
        out.write(",".join(row) + "\n")
    return out.getvalue()


def classify_convergence(traj: Trajectory, wstar) -> bool:
    """True iff the last five weight iterates lie componentwise within
    CONVERGENCE_TOL of ``wstar`` and the trajectory did not diverge."""
    if len(traj.states) < CONVERGENCE_WINDOW:
        raise UsageError(
            f"need at least {CONVERGENCE_WINDOW} states to classify convergence"
        )
    if traj.diverged:
        return False
    wstar = np.asarray(wstar, dtype=float)
    tail = traj.states[-CONVERGENCE_WINDOW:]
    return all(bool(np.all(np.abs(st.w - wstar) <= CONVERGENCE_TOL)) for st in tail)


def classify_cell(kingma: bool, ours: bool, converged: bool) -> str:
    return COLOR_TABLE[(bool(kingma), bool(ours), bool(converged))]


# ---------------------------------------------------------------------------
# sweep specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AxisSpec:
    """One swept hyperparameter: ``count`` values from start to stop."""

    name: str
    start: float
    stop: float
    count: int
    scale: str = "linear"  # "linear" | "log"

    def __post_init__(self):
        if self.name not in HYPER_NAMES:
            raise UsageError(f"unknown hyperparameter axis {self.name!r}")
        if self.scale not in ("linear", "log"):
            raise UsageError(f"axis scale must be linear or log, got {self.scale!r}")
        if self.count < 1:
            raise UsageError("axis count must be positive")
        if self.scale == "log" and not (self.start > 0 and self.stop > 0):
            raise UsageError("log axis endpoints must be positive")

    def values(self) -> Array:
        if self.scale == "log":
            return np.logspace(np.log10(self.start), np.log10(self.stop), self.count)
        return np.linspace(self.start, self.stop, self.count)

    def to_dict(self) -> dict:
        return {"name": self.name, "start": self.start, "stop": self.stop,
                "count": self.count, "scale": self.scale}

    @classmethod
    def from_dict(cls, d: dict) -> "AxisSpec":
        try:
            return cls(name=d["name"], start=float(d["start"]),
                       stop=float(d["stop"]), count=int(d["count"]),
                       scale=d.get("scale", "linear"))
        except KeyError as exc:
            raise UsageError(f"axis spec missing field {exc}") from exc


@dataclass(frozen=True)
class SweepSpec:
    """Everything needed to run one sweep deterministically."""

    family: str
    objective_id: str
    w0: tuple[float, ...]
    axis1: AxisSpec
    axis2: AxisSpec
    fixed: dict = field(default_factory=dict)
    adam_variant: str = "eps2_bias"
    t_max: int = SWEEP_ITERATIONS
    preset_id: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown family {self.family!r}")
        if self.axis1.name == self.axis2.name:
            raise UsageError("the two sweep axes must differ")
        for key in self.fixed:
            if key not in HYPER_NAMES:
                raise UsageError(f"unknown fixed hyperparameter {key!r}")
        if self.t_max < CONVERGENCE_WINDOW:
            raise UsageError("t_max too small for the convergence criterion")

    def hyper_columns(self, p1: Array, p2: Array) -> dict[str, Array]:
        """Per-cell value for every hyperparameter name (scalars broadcast)."""
        cols: dict[str, Array] = {}
        for name in HYPER_NAMES:
            if name == self.axis1.name:
                cols[name] = p1
            elif name == self.axis2.name:
                cols[name] = p2
            elif name in self.fixed:
                cols[name] = np.full_like(p1, float(self.fixed[name]))
            else:
                default = HYPER_DEFAULTS[name]
                if default is None:
                    raise UsageError(f"hyperparameter {name!r} is neither swept "
                                     f"nor fixed and has no default")
                cols[name] = np.full_like(p1, default)
        if np.any(cols["alpha"] <= 0) or np.any(cols["epsilon"] <= 0):
            raise UsageError("alpha and epsilon must be positive over the grid")
        if self.family == "adam" and (
            np.any((cols["beta1"] <= 0) | (cols["beta1"] >= 1))
            or np.any((cols["beta2"] <= 0) | (cols["beta2"] >= 1))
        ):
            raise UsageError("adam sweep requires beta1, beta2 in (0, 1)")
        if self.family in ("rmsprop", "adadelta") and np.any(
            (cols["beta"] <= 0) | (cols["beta"] >= 1)
        ):
            raise UsageError(f"{self.family} sweep requires beta in (0, 1)")
        return cols

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "objective": self.objective_id,
            "w0": list(self.w0),
            "axis1": self.axis1.to_dict(),
            "axis2": self.axis2.to_dict(),
            "fixed": dict(self.fixed),
            "variant": self.adam_variant,
            "t_max": self.t_max,
            "preset": self.preset_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        try:
            return cls(
                family=d["family"],
                objective_id=d["objective"],
                w0=tuple(float(x) for x in np.atleast_1d(d["w0"])),
                axis1=AxisSpec.from_dict(d["axis1"]),
                axis2=AxisSpec.from_dict(d["axis2"]),
                fixed={k: float(v) for k, v in d.get("fixed", {}).items()},
                adam_variant=d.get("variant", "eps2_bias"),
                t_max=int(d.get("t_max", SWEEP_ITERATIONS)),
                preset_id=d.get("preset"),
            )
        except KeyError as exc:
            raise UsageError(f"sweep spec missing field {exc}") from exc


@dataclass(frozen=True)
class SweepCell:
    param1: float
    param2: float
    kingma: bool
    ours: bool
    converged: bool
    color: str


@dataclass(frozen=True)
class SweepGrid:
    spec: SweepSpec
    cells: tuple[SweepCell, ...]

    def __post_init__(self):
        expected = self.spec.axis1.count * self.spec.axis2.count
        if len(self.cells) != expected:
            raise UsageError(
                f"grid has {len(self.cells)} cells, expected {expected}"
            )

    def color_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(COLOR_NAMES, 0)
        for cell in self.cells:
            counts[cell.color] += 1
        return counts

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("param1,param2,kingma,ours,converged,color\n")
        for c in self.cells:
            out.write(
                f"{_g17(c.param1)},{_g17(c.param2)},"
                f"{str(c.kingma).lower()},{str(c.ours).lower()},"
                f"{str(c.converged).lower()},{c.color}\n"
            )
        return out.getvalue()


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _load_presets() -> dict:
    text = resources.files(__package__).joinpath("presets.json").read_text()
    return json.loads(text)


def preset_ids() -> list[str]:
    return sorted(_load_presets())


def preset(preset_id: str) -> SweepSpec:
    """Named sweep configuration from the checked-in preset file."""
    table = _load_presets()
    if preset_id not in table:
        raise UsageError(
            f"unknown preset {preset_id!r}; known: {', '.join(sorted(table))}"
        )
    d = dict(table[preset_id])
    d.pop("note", None)
    d["preset"] = preset_id
    return SweepSpec.from_dict(d)


# ---------------------------------------------------------------------------
# sweep engine
# ---------------------------------------------------------------------------

def _bound_columns(spec: SweepSpec, cols: dict[str, Array],
                   mu_max: float) -> tuple[Array, Array]:
    """Vectorized (kingma, ours) verdicts per cell.

    Kingma's condition only constrains ADAM's beta pair; for other families
    it is recorded as False. AdaGrad has no applicable bound; its cells also
    record ours = False.
    """
    alpha, eps = cols["alpha"], cols["epsilon"]
    b1, b2 = cols["beta1"], cols["beta2"]
    if spec.family == "adam":
        kingma = b1 * b1 < np.sqrt(b2)
        ours = alpha / eps * mu_max * (1.0 - b1) < 2.0 * b1 + 2.0
    else:
        kingma = np.zeros_like(alpha, dtype=bool)
        if spec.family == "rmsprop":
            ours = mu_max < 2.0 * eps / alpha
        elif spec.family in ("sgd", "adadelta"):
            ours = mu_max < 2.0 / alpha
        else:  # adagrad: bound not applicable
            ours = np.zeros_like(alpha, dtype=bool)
    return kingma, ours


def _run_cells(spec_dict: dict, p1: Array, p2: Array) -> tuple[Array, ...]:
    """Classify a batch of cells; returns (kingma, ours, converged) arrays."""
    spec = SweepSpec.from_dict(spec_dict)
    obj = by_name(spec.objective_id)
    wstar = obj.minimum
    if wstar is None:
        raise UsageError(f"objective {spec.objective_id!r} has no known minimum")
    mu_max = hessian_spectrum(obj, wstar).mu_max

    k = len(p1)
    n = obj.dim
    cols = spec.hyper_columns(p1, p2)
    col = {name: cols[name][:, None] for name in HYPER_NAMES}
    layout = LAYOUTS[spec.family]

    w = np.tile(np.asarray(spec.w0, dtype=float), (k, 1))
    m = np.zeros((k, n)) if "m" in layout else None
    v = np.zeros((k, n)) if "v" in layout else None

    diverged = np.zeros(k, dtype=bool)
    ring = np.empty((CONVERGENCE_WINDOW, k, n))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for t in range(spec.t_max):
            m1, v1, w1 = step_components(
                spec.family, spec.adam_variant, obj.grad_fn, t, m, v, w,
                col["alpha"], col["epsilon"], col["beta1"], col["beta2"],
                col["beta"],
            )
            bad = np.zeros(k, dtype=bool)
            for arr in (m1, v1, w1):
                if arr is not None:
                    bad |= np.any(~np.isfinite(arr) | (np.abs(arr) > DIVERGENCE_LIMIT),
                                  axis=1)
            diverged |= bad
            # freeze diverged cells at zero so NaNs stop propagating
            frozen = diverged[:, None]
            w = np.where(frozen, 0.0, w1)
            if m1 is not None:
                m = np.where(frozen, 0.0, m1)
            if v1 is not None:
                v = np.where(frozen, 0.0, v1)
            ring[t % CONVERGENCE_WINDOW] = w

    close = np.all(np.abs(ring - wstar) <= CONVERGENCE_TOL, axis=(0, 2))
    converged = close & ~diverged
    kingma, ours = _bound_columns(spec, cols, mu_max)
    return kingma, ours, converged


def sweep(spec: SweepSpec, jobs: int = 1) -> SweepGrid:
    """Run the full grid; row-major over (axis1, axis2).

    ``jobs`` > 1 splits the flattened cell list into contiguous chunks over a
    process pool; results are bitwise identical for any job count because the
    per-cell arithmetic is elementwise.
    """
    if jobs < 1:
        raise UsageError("jobs must be a positive integer")
    v1 = spec.axis1.values()
    v2 = spec.axis2.values()
    p1 = np.repeat(v1, len(v2))
    p2 = np.tile(v2, len(v1))
    spec_dict = spec.to_dict()

    if jobs == 1 or len(p1) < 2 * jobs:
        kingma, ours, converged = _run_cells(spec_dict, p1, p2)
    else:
        bounds = np.linspace(0, len(p1), jobs + 1).astype(int)
        chunks = [(spec_dict, p1[a:b], p2[a:b])
                  for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_cells_star, chunks))
        kingma = np.concatenate([p[0] for p in parts])
        ours = np.concatenate([p[1] for p in parts])
        converged = np.concatenate([p[2] for p in parts])

    cells = tuple(
        SweepCell(
            param1=float(p1[i]), param2=float(p2[i]),
            kingma=bool(kingma[i]), ours=bool(ours[i]),
            converged=bool(converged[i]),
            color=classify_cell(kingma[i], ours[i], converged[i]),
        )
        for i in range(len(p1))
    )
    return SweepGrid(spec=spec, cells=cells)


def _run_cells_star(args) -> tuple[Array, ...]:
    return _run_cells(*args)


def with_resolution(spec: SweepSpec, count1: int, count2: int) -> SweepSpec:
    """Same sweep at a different grid resolution."""
    return replace(
        spec,
        axis1=replace(spec.axis1, count=count1),
        axis2=replace(spec.axis2, count=count2),
    )
