"""Pydantic request/response models for the service endpoints."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..criteria import CriterionSpec
from ..sequential import RunConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class DesignRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(gt=0)
    bounds: list[tuple[float, float]]
    maximin: bool = True
    seed: int = 0
    n_restarts: int = Field(default=8, gt=0)
    centered: bool = False


class DesignResponse(BaseModel):
    points: list[list[float]]
    min_distance: float | None


class ModelPayload(BaseModel):
    """Serialized fitted emulator; enough to rebuild it bit-identically."""

    model_config = ConfigDict(extra="forbid")

    theta: list[float]
    p: list[float]
    mu: float
    sigma2: float
    nugget: float
    loglik: float | None = None
    transformation: str = "identity"
    inference: str = "plugin_mle"
    bounds: list[tuple[float, float]]
    x: list[list[float]]
    z: list[float]


class DiagnosticsPayload(BaseModel):
    loo_means: list[float]
    loo_sds: list[float]
    standardized_residuals: list[float]
    max_abs_standardized_residual: float
    rms_standardized_residual: float


class FitRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x: list[list[float]]
    z: list[float]
    bounds: list[tuple[float, float]]
    transformation: str = "identity"
    select_transform: bool = False
    seed: int = 0
    n_starts: int | None = None
    nugget: float | None = None


class FitResponse(BaseModel):
    model: ModelPayload
    diagnostics: DiagnosticsPayload | None
    transformation: str


class PredictRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelPayload
    points: list[list[float]]


class PredictResponse(BaseModel):
    means: list[float]
    sds: list[float]


class CriterionPayload(BaseModel):
    """Criterion spec as it appears in run configs; only kind-relevant fields may be set."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    kind: str
    a: float | None = None
    levels: list[float] | None = None
    alpha: float | None = None
    g: int | None = None
    w: float | None = None
    lam: float | None = Field(default=None, alias="lambda")
    p_target: float | None = None
    constraint: tuple[float, float] | None = None

    def to_core(self) -> CriterionSpec:
        return CriterionSpec.from_dict(self.model_dump(by_alias=True, exclude_none=True))


class CandidatesPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    points: list[list[float]] | None = None
    grid: list[int] | None = None


class SurfacePayload(BaseModel):
    points: list[list[float]]
    yhat: list[float]
    s: list[float]
    ei: list[float]


class ProposeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelPayload
    criterion: CriterionPayload
    candidates: CandidatesPayload
    incumbent: float | None = None
    constraint_model: ModelPayload | None = None
    include_surface: bool = False
    seed: int = 0


class ProposeResponse(BaseModel):
    x_new: list[float]
    ei_value: float
    index: int
    tie_broken: bool
    incumbent: float | None
    surface: SurfacePayload | None = None


class GridPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    bounds: list[tuple[float, float]]
    resolution: tuple[int, int]
    values: list[float]
    interpolation: str = "bilinear"


class SimulatorPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str
    noise_sd: float = 0.0
    seed: int = 0
    grid: GridPayload | None = None


class InitialPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    points: list[list[float]] | None = None
    n: int | None = None
    maximin: bool = True
    n_restarts: int = 8


class StopPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    threshold: float | None = None
    budget: int = Field(ge=0)


class FitOptionsPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_starts: int | None = None
    nugget: float | None = None


class DomainPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    bounds: list[tuple[float, float]]


class LoopRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: DomainPayload | None = None
    simulator: SimulatorPayload
    criterion: CriterionPayload
    transformation: str = "identity"
    initial: InitialPayload | None = None
    candidates: CandidatesPayload
    stop: StopPayload
    seed: int = 0
    fit: FitOptionsPayload | None = None
    record_surfaces: bool = False

    def to_core(self) -> RunConfig:
        return RunConfig.from_dict(self.model_dump(by_alias=True, exclude_none=True))


class LoopResponse(BaseModel):
    history: dict
    surfaces: list[SurfacePayload] | None = None


class VerifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    kind: str
    trials: int = Field(default=100, gt=0)
    n_samples: int = Field(default=1_000_000, ge=1000)
    seed: int = 0
    g: int | None = None
    lam: float | None = Field(default=None, alias="lambda")
    constraint: tuple[float, float] | None = None


class VerifyResponse(BaseModel):
    kind: str
    passed: bool
    max_abs_z: float
    n_samples: int
    z_limit: float
    trials: list[dict]
