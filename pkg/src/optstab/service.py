"""HTTP service exposing the analysis, trajectory, sweep, and verification
operations. The CLI and this service are thin layers over the same core
functions; all numeric payloads round-trip exactly through JSON."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__, experiments, perturbation, stability
from .cli import run_verification
from .dynamics import OptimizerSpec
from .errors import (
    CertificateUnavailableError,
    DomainError,
    UsageError,
)
from .objectives import builtin_ids, by_name, hessian_spectrum


class OptimizerModel(BaseModel):
    family: str
    alpha: float
    epsilon: float
    beta1: float = 0.9
    beta2: float = 0.999
    beta: float = 1.0
    variant: str = "eps2_bias"

    def to_spec(self) -> OptimizerSpec:
        return OptimizerSpec.from_dict(self.model_dump())


class AnalyzeRequest(BaseModel):
    optimizer: OptimizerModel
    objective: str
    wstar: list[float] | None = None


class BoundaryRequest(BaseModel):
    optimizer: OptimizerModel
    objective: str | None = None
    mu_max: float | None = None


class TrajectoryRequest(BaseModel):
    optimizer: OptimizerModel
    objective: str
    w0: list[float]
    t_max: int = 10_000


class VerifyRequest(BaseModel):
    optimizer: OptimizerModel
    objective: str
    checks: list[str] | None = None
    samples: int = Field(default=1000, ge=1)
    radius: float = Field(default=0.1, gt=0)
    seed: int = 0


class SweepRequest(BaseModel):
    preset: str | None = None
    spec: dict | None = None
    resolution: tuple[int, int] | None = None
    jobs: int = Field(default=1, ge=1)


def create_app() -> FastAPI:
    app = FastAPI(title="optstab", version=__version__)

    @app.exception_handler(UsageError)
    async def _usage(_: Request, exc: UsageError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(DomainError)
    async def _domain(_: Request, exc: DomainError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/objectives")
    def objectives():
        return {"objectives": builtin_ids()}

    @app.get("/presets")
    def presets():
        return {"presets": experiments.preset_ids()}

    @app.post("/analyze")
    def analyze(req: AnalyzeRequest):
        spec = req.optimizer.to_spec()
        obj = by_name(req.objective)
        report = stability.analyze(spec, obj, req.wstar)
        return {"optimizer": spec.to_dict(), "objective": obj.name,
                "report": report.to_dict()}

    @app.post("/boundary")
    def boundary(req: BoundaryRequest):
        spec = req.optimizer.to_spec()
        mu = req.mu_max
        if mu is None:
            if req.objective is None:
                raise UsageError("provide mu_max or an objective")
            obj = by_name(req.objective)
            if obj.minimum is None:
                raise UsageError(f"objective {obj.name!r} has no known minimum")
            mu = hessian_spectrum(obj, obj.minimum).mu_max
        return {"epsilon_star": stability.epsilon_boundary(spec.hyper, mu)}

    @app.post("/trajectory")
    def trajectory(req: TrajectoryRequest):
        spec = req.optimizer.to_spec()
        obj = by_name(req.objective)
        traj = experiments.run_trajectory(spec, obj, req.w0, req.t_max)
        return {
            "diverged": traj.diverged,
            "steps": len(traj.states) - 1,
            "final_w": [float(x) for x in traj.final.w],
            "csv": experiments.trajectory_csv(traj),
        }

    @app.post("/verify")
    def verify(req: VerifyRequest):
        spec = req.optimizer.to_spec()
        obj = by_name(req.objective)
        try:
            return run_verification(spec, obj, req.checks, req.samples,
                                    req.radius, req.seed)
        except CertificateUnavailableError as exc:
            raise DomainError(str(exc)) from exc

    @app.post("/sweep")
    def run_sweep(req: SweepRequest):
        if req.preset is not None:
            spec = experiments.preset(req.preset)
        elif req.spec is not None:
            spec = experiments.SweepSpec.from_dict(req.spec)
        else:
            raise UsageError("provide a preset id or a sweep spec")
        if req.resolution is not None:
            spec = experiments.with_resolution(spec, *req.resolution)
        grid = experiments.sweep(spec, jobs=req.jobs)
        return {"spec": spec.to_dict(), "color_counts": grid.color_counts(),
                "csv": grid.to_csv()}

    return app


app = create_app()
