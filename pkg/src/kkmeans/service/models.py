"""Request/response models for the compute service."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field


class DataRef(BaseModel):
    """A dataset either inline or by server-local path."""

    path: Optional[str] = None
    format: Literal["csv", "libsvm", "idx"] = "csv"
    scale_255: bool = False
    label_column: Optional[Union[int, str]] = None
    points: Optional[list[list[float]]] = None
    labels: Optional[list[int]] = None


class KernelModel(BaseModel):
    family: Literal["gaussian", "linear"] = "gaussian"
    sigma: Optional[float] = None  # gaussian only; None -> bandwidth heuristic
    kappa_sq: Optional[float] = None  # linear only; None -> derived from data


class HealthResponse(BaseModel):
    status: str
    version: str


class LeverageRequest(BaseModel):
    data: DataRef
    kernel: KernelModel = KernelModel()
    gamma: float


class LeverageResponse(BaseModel):
    gamma: float
    tau: list[float]
    d_eff: float
    sigma: Optional[float] = None


class CertifyRequest(BaseModel):
    data: DataRef
    kernel: KernelModel = KernelModel()
    gamma: float
    epsilon: float
    sampler: Literal["uniform", "rls"] = "uniform"
    m: Optional[int] = None  # None -> the sampler's size formula
    seed: int = 0
    include_sandwich: bool = True
    delta: float = 0.1


class CertifyResponse(BaseModel):
    gamma: float
    epsilon: float
    passed: bool
    slack: float
    sandwich_passed: Optional[bool] = None
    sandwich_norm: Optional[float] = None
    m: int
    sampler: str
    seed: int
    sigma: Optional[float] = None


class ExperimentRequest(BaseModel):
    data: DataRef
    k: int
    kernel: KernelModel = KernelModel()
    sampler: Literal["uniform", "rls"] = "uniform"
    m_grid: Optional[list[int]] = None
    gamma_grid: Optional[list[float]] = None
    gamma: Optional[float] = None
    epsilon: float = 0.5
    delta: float = 0.1
    repeats: int = 1
    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    seed: int = 0
    max_iter: int = 300
    move_tol: float = 1e-9
    rank_tol: float = 1e-10
    max_pairs: int = 1_000_000
    nmi_on_test: bool = False
    collect_timings: bool = False


class RunRecordModel(BaseModel):
    m: int
    m_effective: int
    repeat: int
    seed: int
    W_train: float
    W_test: float
    residual_mean: float
    nmi: Optional[float] = None
    d_eff: Optional[float] = None
    iterations: int
    t_embed_ms: float
    t_lloyd_ms: float


class ExperimentResponse(BaseModel):
    records: list[RunRecordModel]


class EmbedderArtifact(BaseModel):
    magic: str
    version: int
    kernel: dict
    rank_tol: float
    landmark_points: list[list[float]]
    transform: list[list[float]]
    kept_eigenvalues: list[float]


class EmbedderBuildRequest(BaseModel):
    data: DataRef
    kernel: KernelModel = KernelModel()
    sampler: Literal["uniform", "rls"] = "uniform"
    m: int
    seed: int = 0
    gamma: Optional[float] = None  # rls scores ridge; default sqrt(n)
    rank_tol: float = 1e-10


class EmbedRequest(BaseModel):
    artifact: EmbedderArtifact
    points: list[list[float]]


class EmbedResponse(BaseModel):
    coords: list[list[float]]
    residuals: list[float]
    self_kernel: list[float]


class ErrorBody(BaseModel):
    code: Literal["config", "data", "internal"]
    detail: str
