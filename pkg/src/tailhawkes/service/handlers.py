"""Service operations: pydantic payloads in, pydantic payloads out.

Both the FastAPI routes and the CLI call these functions, so there is a
single compute surface regardless of transport.  All handlers are pure
(results depend only on the request payload), which keeps remote and
in-process execution interchangeable.
"""

from __future__ import annotations

import numpy as np

import tailhawkes
from tailhawkes import diag, fit as fit_mod, garch as garch_mod, sim as sim_mod
from tailhawkes.core import TAIL_NAMES
from tailhawkes.ingest import ReturnSeries, extract_exceedances, select_thresholds
from tailhawkes.service import schemas as s


def _series(payload: s.SeriesPayload) -> ReturnSeries:
    x = np.asarray(payload.x, dtype=float)
    train_end = payload.train_end if payload.train_end is not None else x.size
    return ReturnSeries(x=x, train_end=train_end, labels=payload.labels)


def health() -> s.HealthResponse:
    return s.HealthResponse(status="ok", version=tailhawkes.__version__)


def thresholds(req: s.ThresholdRequest) -> s.ThresholdResponse:
    series = _series(req.series)
    u_left, u_right = select_thresholds(series, req.q)
    return s.ThresholdResponse(u_left=u_left, u_right=u_right, q=req.q,
                               n_train=series.train_end)


def exceedances(req: s.ExtractRequest) -> s.ExceedancesModel:
    series = _series(req.series)
    if req.u_left is None or req.u_right is None:
        u_left, u_right = select_thresholds(series, req.q)
    else:
        u_left, u_right = req.u_left, req.u_right
    return s.ExceedancesModel.from_core(extract_exceedances(series, u_left, u_right))


def fit(req: s.FitRequest) -> s.FitResultModel:
    result = fit_mod.fit_ml(req.kind, req.exceedances.to_core(), req.options.to_core())
    return s.FitResultModel.from_core(result)


def loglik(req: s.LogLikRequest) -> s.LogLikResponse:
    ll = fit_mod.log_likelihood(req.params.to_core(), req.exceedances.to_core(), req.window)
    return s.LogLikResponse(total=ll.total, left=ll.left, right=ll.right)


def diagnose(req: s.DiagnoseRequest) -> s.DiagnoseResponse:
    params = req.params.to_core()
    exc = req.exceedances.to_core()
    rs = diag.residual_time(params, exc, req.window)
    reports = []
    acf_out: dict[str, s.AcfModel] = {}
    rolling_out: dict[str, s.RollingAcfModel] = {}
    for proc in diag.PROCESSES:
        dtau = rs.dtau[proc]
        if dtau.size >= 5:
            reports.append(s.TestReportModel(**diag.ks_test(
                dtau, "unit-exponential", name=f"ks-interarrivals-{proc}").to_dict()))
        z = rs.z[proc]
        if z.size >= 5:
            reports.append(s.TestReportModel(**diag.ks_test(
                z, "unit-normal", name=f"ks-normal-transform-{proc}").to_dict()))
        max_lag = min(req.max_lag, max(z.size - 2, 1))
        if z.size > max_lag and z.size >= 8:
            a = diag.acf(z, max_lag)
            acf_out[proc] = s.AcfModel(lags=a.lags.tolist(), values=a.values.tolist(),
                                       band_95=a.band_95, band_99=a.band_99)
        if z.size >= req.rolling_window:
            r = diag.rolling_acf1(z, req.rolling_window)
            rolling_out[proc] = s.RollingAcfModel(
                start=r.start.tolist(),
                values=[None if np.isnan(v) else float(v) for v in r.values],
                window=r.window, band_95=r.band_95, band_99=r.band_99)
    if rs.resid_m.size >= 5:
        reports.append(s.TestReportModel(**diag.ks_test(
            rs.resid_m, "unit-exponential", name="ks-residual-magnitudes").to_dict()))
    residuals = s.ResidualsModel(
        tau_both=rs.tau_both.tolist(),
        tail=[TAIL_NAMES[t] for t in rs.tail],
        resid_m=rs.resid_m.tolist(),
        dtau={k: v.tolist() for k, v in rs.dtau.items()},
        z={k: v.tolist() for k, v in rs.z.items()},
    )
    return s.DiagnoseResponse(residuals=residuals, reports=reports, acf=acf_out,
                              rolling_acf1=rolling_out)


def simulate(req: s.SimulateRequest) -> s.SimulateResponse:
    params = req.params.to_core()
    series = []
    for rep in range(req.replications):
        cfg = sim_mod.SimConfig(T=req.T, seed=req.seed, burn_in=req.burn_in, replication=rep)
        series.append(s.ExceedancesModel.from_core(
            sim_mod.simulate_hawkes(params, cfg, req.thresholds)))
    manifest = {
        "params": req.params.model_dump(),
        "T": req.T,
        "seed": req.seed,
        "burn_in": req.burn_in,
        "replications": req.replications,
        "thresholds": list(req.thresholds),
    }
    return s.SimulateResponse(series=series, manifest=manifest)


def garch_fit(req: s.GarchFitRequest) -> s.GarchFitModel:
    result = garch_mod.garch_fit(_series(req.series), o=req.o, dist=req.dist,
                                 restarts=req.restarts, seed=req.seed)
    return s.GarchFitModel.from_core(result)


def garch_filter(req: s.GarchFilterRequest) -> s.GarchFilterResponse:
    sigma, z = garch_mod.garch_filter(req.params.to_core(), _series(req.series))
    return s.GarchFilterResponse(sigma=sigma.tolist(), z=z.tolist())


def residual_hawkes(req: s.ResidualHawkesRequest) -> s.ResidualHawkesResponse:
    res = garch_mod.hawkes_on_residuals(_series(req.series), req.params.to_core(),
                                        q=req.q, options=req.options.to_core())
    return s.ResidualHawkesResponse(
        fit=s.FitResultModel.from_core(res.fit),
        u_left=res.u_left, u_right=res.u_right,
        exceedances=s.ExceedancesModel.from_core(res.exceedances),
    )
