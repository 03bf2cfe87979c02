"""Pydantic request/response models: the wire schema of the service.

These mirror the JSON layouts of the library dataclasses (every model
round-trips through the corresponding ``to_dict``/``from_dict``), so the
CLI, the HTTP API and files on disk share one format.  Intensities are per
trading day; thresholds, excesses and scale parameters are in the units of
the input series.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from tailhawkes.core import HawkesParams
from tailhawkes.fit import FitOptions, FitResult
from tailhawkes.garch import GarchFit, GarchParams
from tailhawkes.ingest import ExceedanceSeries


def nan_to_none(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


class TailPair(BaseModel):
    left: float
    right: float


class HawkesParamsModel(BaseModel):
    """Kind-tagged parameter vector with named per-tail fields."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["bivariate", "bivariate-decoupled", "common", "common-symmetric"]
    mu: dict[str, float]
    branching: dict[str, float]
    beta: TailPair
    xi: TailPair
    varsigma: TailPair
    eta: TailPair
    alpha: TailPair
    w: float = 0.0

    def to_core(self) -> HawkesParams:
        return HawkesParams.from_dict(self.model_dump())

    @classmethod
    def from_core(cls, params: HawkesParams) -> "HawkesParamsModel":
        return cls.model_validate(params.to_dict())


class EventModel(BaseModel):
    t: int
    tail: Literal["left", "right"]
    m: float


class ExceedancesModel(BaseModel):
    """Serialised two-tailed exceedance event history."""

    u_left: float
    u_right: float
    T: int
    train_end: int
    events: list[EventModel]

    def to_core(self) -> ExceedanceSeries:
        return ExceedanceSeries.from_dict(self.model_dump())

    @classmethod
    def from_core(cls, exc: ExceedanceSeries) -> "ExceedancesModel":
        return cls.model_validate(exc.to_dict())


class SeriesPayload(BaseModel):
    """A raw return series with its training/forecast split."""

    x: list[float]
    train_end: int | None = None
    labels: list[str] | None = None

    @field_validator("x")
    @classmethod
    def _finite(cls, v: list[float]) -> list[float]:
        if not all(math.isfinite(xi) for xi in v):
            raise ValueError("x must be finite")
        return v


class ThresholdRequest(BaseModel):
    series: SeriesPayload
    q: float = Field(default=0.025, gt=0.0, lt=0.5)


class ThresholdResponse(BaseModel):
    u_left: float
    u_right: float
    q: float
    n_train: int


class ExtractRequest(BaseModel):
    series: SeriesPayload
    q: float = Field(default=0.025, gt=0.0, lt=0.5)
    u_left: float | None = None
    u_right: float | None = None


class FitOptionsModel(BaseModel):
    restarts: int = Field(default=8, ge=1)
    seed: int = 0
    fixed: dict[str, float] = Field(default_factory=dict)
    free_w: bool = False
    window: tuple[float, float] | None = None
    maxiter: int = Field(default=500, ge=1)

    def to_core(self) -> FitOptions:
        return FitOptions(restarts=self.restarts, seed=self.seed, fixed=dict(self.fixed),
                          free_w=self.free_w, window=self.window, maxiter=self.maxiter)


class FitRequest(BaseModel):
    exceedances: ExceedancesModel
    kind: Literal["bivariate", "bivariate-decoupled", "common", "common-symmetric"]
    options: FitOptionsModel = Field(default_factory=FitOptionsModel)


class FitResultModel(BaseModel):
    kind: str
    params: HawkesParamsModel
    se: dict[str, float | None]
    loglik: float
    deviance: float
    n_events: dict[str, int]
    converged: bool
    n_restarts_used: int
    free_names: list[str]
    boundary_pinned: list[str] = Field(default_factory=list)
    se_pseudo_inverse: bool = False
    window: tuple[float, float] | None = None

    def to_core(self) -> FitResult:
        d = self.model_dump()
        d["se"] = {k: (float("nan") if v is None else v) for k, v in d["se"].items()}
        return FitResult.from_dict(d)

    @classmethod
    def from_core(cls, result: FitResult) -> "FitResultModel":
        d = result.to_dict()
        d["se"] = nan_to_none(d["se"])
        return cls.model_validate(d)


class LogLikRequest(BaseModel):
    exceedances: ExceedancesModel
    params: HawkesParamsModel
    window: tuple[float, float] | None = None


class LogLikResponse(BaseModel):
    total: float
    left: float
    right: float


class TestReportModel(BaseModel):
    name: str
    statistic: float
    p_value: float
    n: int
    reject_05: bool
    reject_01: bool


class ResidualsModel(BaseModel):
    """Residual-time analysis, arrays keyed by process where per-process."""

    tau_both: list[float]
    tail: list[Literal["left", "right"]]
    resid_m: list[float]
    dtau: dict[str, list[float]]
    z: dict[str, list[float]]


class AcfModel(BaseModel):
    lags: list[int]
    values: list[float]
    band_95: float
    band_99: float


class RollingAcfModel(BaseModel):
    start: list[int]
    values: list[float | None]
    window: int
    band_95: float
    band_99: float


class DiagnoseRequest(BaseModel):
    exceedances: ExceedancesModel
    params: HawkesParamsModel
    window: tuple[float, float] | None = None
    max_lag: int = Field(default=30, ge=1)
    rolling_window: int = Field(default=50, ge=5)


class DiagnoseResponse(BaseModel):
    residuals: ResidualsModel
    reports: list[TestReportModel]
    acf: dict[str, AcfModel]
    rolling_acf1: dict[str, RollingAcfModel]


class SimulateRequest(BaseModel):
    params: HawkesParamsModel
    T: int = Field(gt=0)
    seed: int = 0
    burn_in: int | None = Field(default=None, ge=0)
    replications: int = Field(default=1, ge=1)
    thresholds: tuple[float, float] = (-1.0, 1.0)


class SimulateResponse(BaseModel):
    series: list[ExceedancesModel]
    manifest: dict


class GarchParamsModel(BaseModel):
    mu: float
    omega: float
    alpha1: float
    beta1: float
    gamma1: float = 0.0
    dist: Literal["normal", "student-t"] = "normal"
    nu: float | None = None

    def to_core(self) -> GarchParams:
        return GarchParams.from_dict(self.model_dump())

    @classmethod
    def from_core(cls, params: GarchParams) -> "GarchParamsModel":
        return cls.model_validate(params.to_dict())


class GarchFitRequest(BaseModel):
    series: SeriesPayload
    o: Literal[0, 1] = 0
    dist: Literal["normal", "student-t"] = "normal"
    restarts: int = Field(default=4, ge=1)
    seed: int = 0


class GarchFitModel(BaseModel):
    params: GarchParamsModel
    se: dict[str, float | None]
    loglik: float
    aic: float
    converged: bool

    @classmethod
    def from_core(cls, fit: GarchFit) -> "GarchFitModel":
        d = fit.to_dict()
        d["se"] = nan_to_none(d["se"])
        return cls.model_validate(d)


class GarchFilterRequest(BaseModel):
    series: SeriesPayload
    params: GarchParamsModel


class GarchFilterResponse(BaseModel):
    sigma: list[float]
    z: list[float]


class ResidualHawkesRequest(BaseModel):
    series: SeriesPayload
    params: GarchParamsModel
    q: float = Field(default=0.025, gt=0.0, lt=0.5)
    options: FitOptionsModel = Field(default_factory=FitOptionsModel)


class ResidualHawkesResponse(BaseModel):
    fit: FitResultModel
    u_left: float
    u_right: float
    exceedances: ExceedancesModel


class HealthResponse(BaseModel):
    status: str
    version: str
