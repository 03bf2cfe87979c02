"""FastAPI application exposing the service operations."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from tailhawkes.service import handlers
from tailhawkes.service import schemas as s


def create_app() -> FastAPI:
    app = FastAPI(title="tailhawkes", description="Two-tailed exceedance Hawkes modelling service")

    def run(fn, *args):
        try:
            return fn(*args)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err)) from err

    @app.get("/health", response_model=s.HealthResponse)
    def health() -> s.HealthResponse:
        return handlers.health()

    @app.post("/series/thresholds", response_model=s.ThresholdResponse)
    def thresholds(req: s.ThresholdRequest) -> s.ThresholdResponse:
        return run(handlers.thresholds, req)

    @app.post("/series/exceedances", response_model=s.ExceedancesModel)
    def exceedances(req: s.ExtractRequest) -> s.ExceedancesModel:
        return run(handlers.exceedances, req)

    @app.post("/hawkes/fit", response_model=s.FitResultModel)
    def fit(req: s.FitRequest) -> s.FitResultModel:
        return run(handlers.fit, req)

    @app.post("/hawkes/loglik", response_model=s.LogLikResponse)
    def loglik(req: s.LogLikRequest) -> s.LogLikResponse:
        return run(handlers.loglik, req)

    @app.post("/hawkes/diagnose", response_model=s.DiagnoseResponse)
    def diagnose(req: s.DiagnoseRequest) -> s.DiagnoseResponse:
        return run(handlers.diagnose, req)

    @app.post("/hawkes/simulate", response_model=s.SimulateResponse)
    def simulate(req: s.SimulateRequest) -> s.SimulateResponse:
        return run(handlers.simulate, req)

    @app.post("/garch/fit", response_model=s.GarchFitModel)
    def garch_fit(req: s.GarchFitRequest) -> s.GarchFitModel:
        return run(handlers.garch_fit, req)

    @app.post("/garch/filter", response_model=s.GarchFilterResponse)
    def garch_filter(req: s.GarchFilterRequest) -> s.GarchFilterResponse:
        return run(handlers.garch_filter, req)

    @app.post("/garch/residual-hawkes", response_model=s.ResidualHawkesResponse)
    def residual_hawkes(req: s.ResidualHawkesRequest) -> s.ResidualHawkesResponse:
        return run(handlers.residual_hawkes, req)

    return app


app = create_app()
