"""Command-line interface.

Subcommands: analyze | trajectory | sweep | verify | boundary. Flags mirror
the JSON config field names; ``--config path.json`` supplies defaults that
explicit flags override. Exit codes: 0 success, 1 verification failure,
2 domain error, 64 usage error.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import experiments, perturbation, stability
from .dynamics import ADAM_VARIANTS, FAMILIES, OptimizerSpec, zero_state
from .errors import DomainError, UsageError, VerificationFailure
from .experiments import _g17
from .objectives import builtin_ids, by_name, hessian_spectrum

VERIFY_CHECKS = ("theta_bound", "h_bound", "gradient_lower_bound",
                 "lyapunov", "envelope")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must contain a JSON object")
    return cfg


def _merged(cfg: dict, **flags) -> dict:
    """Config values overridden by explicitly supplied flags."""
    out = dict(cfg)
    for key, value in flags.items():
        if value is not None:
            out[key] = value
    return out


def _optimizer_from(params: dict) -> OptimizerSpec:
    for key in ("family", "alpha", "epsilon"):
        if params.get(key) is None:
            raise UsageError(f"missing required option --{key}")
    return OptimizerSpec.from_dict(params)


def _parse_point(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"cannot parse point {text!r}") from exc


def _emit(text: str, output: str | None):
    if output is None:
        click.echo(text, nl=not text.endswith("\n"))
    else:
        with open(output, "w") as fh:
            fh.write(text)


def _json_dump(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True)


def optimizer_options(fn):
    fn = click.option("--family", type=click.Choice(FAMILIES))(fn)
    fn = click.option("--variant", type=click.Choice(ADAM_VARIANTS))(fn)
    fn = click.option("--alpha", type=float)(fn)
    fn = click.option("--epsilon", type=float)(fn)
    fn = click.option("--beta1", type=float)(fn)
    fn = click.option("--beta2", type=float)(fn)
    fn = click.option("--beta", type=float)(fn)
    fn = click.option("--objective", "objective_id",
                      help=f"objective id: {', '.join(builtin_ids())}")(fn)
    fn = click.option("--config", "config_path", type=click.Path(),
                      help="JSON file with the same field names as the flags")(fn)
    fn = click.option("-o", "--output", type=click.Path(),
                      help="write to file instead of stdout")(fn)
    return fn


@click.group()
def cli():
    """Stability analysis of adaptive gradient-descent optimizers."""


@cli.command()
@optimizer_options
@click.option("--wstar", help="critical point, comma-separated components")
def analyze(family, variant, alpha, epsilon, beta1, beta2, beta,
            objective_id, config_path, output, wstar):
    """Eigenvalues, spectral radius, and bound verdicts at the fixed point."""
    cfg = _merged(_load_config(config_path), family=family, variant=variant,
                  alpha=alpha, epsilon=epsilon, beta1=beta1, beta2=beta2,
                  beta=beta, objective=objective_id, wstar=wstar)
    if cfg.get("objective") is None:
        raise UsageError("missing required option --objective")
    spec = _optimizer_from(cfg)
    obj = by_name(cfg["objective"])
    point = cfg.get("wstar")
    if isinstance(point, str):
        point = _parse_point(point)
    report = stability.analyze(spec, obj, point)
    payload = {"optimizer": spec.to_dict(), "objective": obj.name,
               "report": report.to_dict()}
    _emit(_json_dump(payload), output)


@cli.command()
@optimizer_options
@click.option("--w0", help="start point, comma-separated components")
@click.option("--t-max", "t_max", type=int)
def trajectory(family, variant, alpha, epsilon, beta1, beta2, beta,
               objective_id, config_path, output, w0, t_max):
    """Run one trajectory from a zero-moment start; emit CSV."""
    cfg = _merged(_load_config(config_path), family=family, variant=variant,
                  alpha=alpha, epsilon=epsilon, beta1=beta1, beta2=beta2,
                  beta=beta, objective=objective_id, w0=w0, t_max=t_max)
    if cfg.get("objective") is None:
        raise UsageError("missing required option --objective")
    if cfg.get("w0") is None:
        raise UsageError("missing required option --w0")
    spec = _optimizer_from(cfg)
    obj = by_name(cfg["objective"])
    start = cfg["w0"]
    if isinstance(start, str):
        start = _parse_point(start)
    budget = int(cfg.get("t_max", 10_000))
    traj = experiments.run_trajectory(spec, obj, start, budget)
    _emit(experiments.trajectory_csv(traj), output)


@cli.command()
@click.option("--preset", "preset_id",
              help=f"one of: {', '.join(experiments.preset_ids())}")
@click.option("--config", "config_path", type=click.Path(),
              help="JSON sweep spec (used when no preset is given; "
                   "otherwise overrides are not supported)")
@click.option("--resolution", nargs=2, type=int, default=None,
              help="override grid resolution: COUNT1 COUNT2")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="parallel worker processes")
@click.option("-o", "--output", type=click.Path())
def sweep(preset_id, config_path, resolution, jobs, output):
    """Run a colored hyperparameter region sweep; emit CSV."""
    if preset_id is not None:
        spec = experiments.preset(preset_id)
    elif config_path is not None:
        spec = experiments.SweepSpec.from_dict(_load_config(config_path))
    else:
        raise UsageError("provide --preset or --config")
    if resolution is not None:
        spec = experiments.with_resolution(spec, *resolution)
    grid = experiments.sweep(spec, jobs=jobs)
    _emit(grid.to_csv(), output)


@cli.command()
@optimizer_options
@click.option("--check", "checks", multiple=True,
              type=click.Choice(VERIFY_CHECKS),
              help="run a subset of checks (repeatable); default: all applicable")
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--radius", type=float, default=0.1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def verify(family, variant, alpha, epsilon, beta1, beta2, beta,
           objective_id, config_path, output, checks, samples, radius, seed):
    """Sampled verification of the perturbation estimates; emit JSON report."""
    cfg = _merged(_load_config(config_path), family=family, variant=variant,
                  alpha=alpha, epsilon=epsilon, beta1=beta1, beta2=beta2,
                  beta=beta, objective=objective_id)
    if cfg.get("objective") is None:
        raise UsageError("missing required option --objective")
    spec = _optimizer_from(cfg)
    obj = by_name(cfg["objective"])
    selected = list(checks) if checks else None
    report = run_verification(spec, obj, selected, samples, radius, seed)
    _emit(_json_dump(report), output)
    if not report["passed"]:
        raise VerificationFailure("one or more checks failed; see report")


def run_verification(spec: OptimizerSpec, obj, selected: list[str] | None,
                     samples: int, radius: float, seed: int) -> dict:
    """Run the requested perturbation checks and aggregate a JSON report."""
    if selected is None:
        selected = [c for c in VERIFY_CHECKS
                    if c != "theta_bound" or spec.family == "adam"]
    results = []
    for check in selected:
        if check == "theta_bound":
            if spec.family != "adam":
                raise UsageError("theta_bound applies to the adam family only")
            rep = perturbation.verify_theta_bound(
                obj, spec.hyper, sample_count=samples, radius=radius, seed=seed)
            results.append(rep.to_dict())
        elif check == "h_bound":
            rep = perturbation.verify_h_bound(
                spec.hyper, sample_count=samples, radius=radius, seed=seed)
            results.append(rep.to_dict())
        elif check == "gradient_lower_bound":
            glb = perturbation.gradient_lower_bound(
                obj, radius, sample_count=samples, seed=seed)
            results.append({"check": "gradient_lower_bound",
                            **glb.to_dict(),
                            "passed": glb.verified or not glb.applicable})
        elif check == "lyapunov":
            cert = perturbation.lyapunov_certificate(
                spec, obj, sample_count=min(samples, 500),
                radius=min(radius, 0.05), seed=seed)
            results.append({"check": "lyapunov", **cert.to_dict(),
                            "passed": cert.valid})
        elif check == "envelope":
            results.append(_envelope_check(spec, obj))
        else:  # pragma: no cover - guarded by click.Choice
            raise UsageError(f"unknown check {check!r}")
    return {"optimizer": spec.to_dict(), "objective": obj.name,
            "checks": results, "passed": all(r["passed"] for r in results)}


def _envelope_check(spec: OptimizerSpec, obj) -> dict:
    """Fit the convergence envelope on a trajectory started near the minimum."""
    if obj.minimum is None:
        raise UsageError("envelope check needs an objective with a known minimum")
    w0 = np.asarray(obj.minimum, dtype=float) + 0.1
    traj = experiments.run_trajectory(spec, obj, w0, 2000)
    fit = perturbation.convergence_envelope(
        traj, zero_state(spec, obj.minimum))
    return {"check": "envelope", **fit.to_dict(), "passed": fit.holds}


@cli.command()
@click.option("--alpha", type=float)
@click.option("--beta1", type=float)
@click.option("--epsilon", type=float, default=1.0,
              help="ignored by the boundary formula; accepted for config parity")
@click.option("--beta2", type=float)
@click.option("--objective", "objective_id",
              help="take mu_max from this objective's Hessian at its minimum")
@click.option("--mu-max", "mu_max", type=float,
              help="largest Hessian eigenvalue (overrides --objective)")
@click.option("--config", "config_path", type=click.Path())
@click.option("-o", "--output", type=click.Path())
def boundary(alpha, beta1, epsilon, beta2, objective_id, mu_max,
             config_path, output):
    """Print the critical epsilon of the convergence inequality (17 digits)."""
    cfg = _merged(_load_config(config_path), alpha=alpha, beta1=beta1,
                  beta2=beta2, epsilon=epsilon, objective=objective_id,
                  mu_max=mu_max)
    if cfg.get("alpha") is None or cfg.get("beta1") is None:
        raise UsageError("boundary requires --alpha and --beta1")
    hyper = OptimizerSpec.from_dict(
        {"family": "adam", "alpha": cfg["alpha"], "epsilon": cfg.get("epsilon", 1.0),
         "beta1": cfg["beta1"], "beta2": cfg.get("beta2", 0.999)}
    ).hyper
    mu = cfg.get("mu_max")
    if mu is None:
        if cfg.get("objective") is None:
            raise UsageError("boundary requires --mu-max or --objective")
        obj = by_name(cfg["objective"])
        if obj.minimum is None:
            raise UsageError(f"objective {obj.name!r} has no known minimum")
        mu = hessian_spectrum(obj, obj.minimum).mu_max
    _emit(_g17(stability.epsilon_boundary(hyper, float(mu))), output)


def entry() -> None:
    """Console entry point translating exceptions to exit codes."""
    try:
        cli.main(standalone_mode=False)
    except (click.UsageError, UsageError) as exc:
        click.echo(f"error: {exc.format_message() if isinstance(exc, click.UsageError) else exc}",
                   err=True)
        sys.exit(64)
    except VerificationFailure as exc:
        click.echo(f"verification failed: {exc}", err=True)
        sys.exit(1)
    except DomainError as exc:
        click.echo(f"domain error: {exc}", err=True)
        sys.exit(2)
    except click.ClickException as exc:
        exc.show()
        sys.exit(64)
    except click.exceptions.Abort:
        sys.exit(130)


if __name__ == "__main__":
    entry()
