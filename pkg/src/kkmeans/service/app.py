"""FastAPI wrapper around the core package.

Endpoints return JSON only; file emission (CSV, artifacts) stays with the
caller. Error responses carry a machine-readable ``code`` ("config" for bad
parameters, "data" for unreadable or degenerate inputs) which the CLI maps
to exit codes.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..data_io import ingest
from ..embedding import (
    build_embedder,
    embed,
    embedder_from_dict,
    embedder_to_dict,
)
from ..errors import (
    DegenerateBandwidthError,
    DegenerateMatrixError,
    FormatError,
    InvalidArgumentError,
)
from ..experiment import ExperimentConfig, RunRecord, run_experiment
from ..kernels import Dataset, KernelSpec, auto_bandwidth, gram
from .. import landmarks as lm
from .models import (
    CertifyRequest,
    CertifyResponse,
    DataRef,
    EmbedderBuildRequest,
    EmbedRequest,
    EmbedResponse,
    ExperimentRequest,
    ExperimentResponse,
    HealthResponse,
    KernelModel,
    LeverageRequest,
    LeverageResponse,
    RunRecordModel,
)

_DATA_ERRORS = (FormatError, DegenerateBandwidthError, DegenerateMatrixError, OSError)


def _resolve_data(ref: DataRef) -> Dataset:
    if ref.points is not None:
        labels = None if ref.labels is None else np.asarray(ref.labels)
        points = np.asarray(ref.points, dtype=float)
        if ref.scale_255:
            points = points / 255.0
        return Dataset(points=points, labels=labels)
    if not ref.path:
        raise InvalidArgumentError("data reference needs either inline points or a path")
    return ingest(ref.path, ref.format, ref.scale_255, ref.label_column)


def _resolve_kernel(model: KernelModel, points: np.ndarray, seed: int = 0):
    """Returns (spec, sigma_used) where sigma_used is set when derived."""
    if model.family == "gaussian":
        if model.sigma is not None:
            return KernelSpec.gaussian(model.sigma), None
        sigma = auto_bandwidth(points, seed=seed)
        return KernelSpec.gaussian(sigma), sigma
    if model.kappa_sq is not None:
        return KernelSpec(family="linear", kappa_sq=model.kappa_sq), None
    return KernelSpec.linear_for(points), None


def _sample_dictionary(req, data: Dataset, kernel: KernelSpec):
    rng = np.random.default_rng(req.seed)
    gamma = req.gamma
    if req.sampler == "rls":
        scores = lm.rls_exact(gram(kernel, data.points).values, gamma)
        return lm.sample_rls(scores, getattr(req, "epsilon", 0.5), req.delta,
                             kernel.kappa_sq, rng, m=req.m)
    m = req.m
    if m is None:
        m = lm.uniform_size(data.n, gamma, req.epsilon, req.delta, kernel.kappa_sq)
    return lm.sample_uniform(data.n, m, rng)


def create_app() -> FastAPI:
    app = FastAPI(title="kkmeans service", version=__version__)

    @app.exception_handler(InvalidArgumentError)
    async def _config_error(request: Request, exc: InvalidArgumentError):
        return JSONResponse(status_code=400, content={"code": "config", "detail": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"code": "config", "detail": str(exc)})

    for err in _DATA_ERRORS:

        @app.exception_handler(err)
        async def _data_error(request: Request, exc: Exception):
            return JSONResponse(status_code=400, content={"code": "data", "detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/leverage-scores", response_model=LeverageResponse)
    def leverage_scores(req: LeverageRequest) -> LeverageResponse:
        data = _resolve_data(req.data)
        kernel, sigma = _resolve_kernel(req.kernel, data.points)
        scores = lm.rls_exact(gram(kernel, data.points).values, req.gamma)
        return LeverageResponse(
            gamma=scores.gamma, tau=scores.tau.tolist(), d_eff=scores.d_eff, sigma=sigma
        )

    @app.post("/certify", response_model=CertifyResponse)
    def certify(req: CertifyRequest) -> CertifyResponse:
        data = _resolve_data(req.data)
        kernel, sigma = _resolve_kernel(req.kernel, data.points)
        full = gram(kernel, data.points)
        rng = np.random.default_rng(req.seed)
        if req.sampler == "rls":
            scores = lm.rls_exact(full.values, req.gamma)
            dictionary = lm.sample_rls(
                scores, req.epsilon, req.delta, kernel.kappa_sq, rng, m=req.m
            )
        else:
            m = req.m
            if m is None:
                m = lm.uniform_size(data.n, req.gamma, req.epsilon, req.delta, kernel.kappa_sq)
            dictionary = lm.sample_uniform(data.n, m, rng)
        if req.include_sandwich:
            report = lm.certify(full.values, dictionary, req.gamma, req.epsilon)
        else:
            report = lm.certify_gamma_preserving(full.values, dictionary, req.gamma, req.epsilon)
        return CertifyResponse(
            gamma=report.gamma,
            epsilon=report.epsilon,
            passed=report.passed,
            slack=report.slack,
            sandwich_passed=report.sandwich_passed,
            sandwich_norm=report.sandwich_norm,
            m=dictionary.m,
            sampler=dictionary.sampler,
            seed=req.seed,
            sigma=sigma,
        )

    @app.post("/experiment/run", response_model=ExperimentResponse)
    def experiment_run(req: ExperimentRequest) -> ExperimentResponse:
        data = _resolve_data(req.data)
        cfg = ExperimentConfig(
            data_path=req.data.path or "",
            data_format=req.data.format,
            label_column=req.data.label_column,
            scale_255=False,  # applied while resolving the data reference
            kernel_family=req.kernel.family,
            sigma=req.kernel.sigma,
            k=req.k,
            sampler=req.sampler,
            m_grid=None if req.m_grid is None else tuple(req.m_grid),
            gamma_grid=None if req.gamma_grid is None else tuple(req.gamma_grid),
            gamma=req.gamma,
            epsilon=req.epsilon,
            delta=req.delta,
            repeats=req.repeats,
            test_fraction=req.test_fraction,
            seed=req.seed,
            max_iter=req.max_iter,
            move_tol=req.move_tol,
            rank_tol=req.rank_tol,
            max_pairs=req.max_pairs,
            nmi_on_test=req.nmi_on_test,
            collect_timings=req.collect_timings,
        )
        records = run_experiment(cfg, data=data)
        return ExperimentResponse(records=[_record_model(r) for r in records])

    @app.post("/embedder/build")
    def embedder_build(req: EmbedderBuildRequest) -> dict:
        data = _resolve_data(req.data)
        kernel, _ = _resolve_kernel(req.kernel, data.points, seed=req.seed)
        gamma = req.gamma if req.gamma is not None else math.sqrt(data.n)
        rng = np.random.default_rng(req.seed)
        if req.sampler == "rls":
            scores = lm.rls_exact(gram(kernel, data.points).values, gamma)
            dictionary = lm.sample_rls(scores, 0.5, 0.1, kernel.kappa_sq, rng, m=req.m)
        else:
            dictionary = lm.sample_uniform(data.n, req.m, rng)
        embedder = build_embedder(data.points, dictionary, kernel, rank_tol=req.rank_tol)
        return embedder_to_dict(embedder)

    @app.post("/embed", response_model=EmbedResponse)
    def embed_points(req: EmbedRequest) -> EmbedResponse:
        embedder = embedder_from_dict(req.artifact.model_dump())
        result = embed(embedder, np.asarray(req.points, dtype=float))
        return EmbedResponse(
            coords=result.coords.tolist(),
            residuals=result.residuals.tolist(),
            self_kernel=result.self_kernel.tolist(),
        )

    return app


def _record_model(r: RunRecord) -> RunRecordModel:
    return RunRecordModel(
        m=r.m,
        m_effective=r.m_effective,
        repeat=r.repeat,
        seed=r.seed,
        W_train=r.W_train,
        W_test=r.W_test,
        residual_mean=r.residual_mean,
        nmi=r.nmi,
        d_eff=r.d_eff,
        iterations=r.iterations,
        t_embed_ms=r.t_embed_ms,
        t_lloyd_ms=r.t_lloyd_ms,
    )


app = create_app()
