"""Command-line front end: a thin client of the service layer.

Every command builds service request payloads, dispatches them either
in-process or to a running server (``--server`` / ``TAILHAWKES_SERVER``),
and writes the responses into one output directory per run together with a
``manifest.json`` capturing the effective configuration, seeds and package
version.  Outputs are schema-validated before the process exits with code
0; on a compute failure the partial outputs are moved to a ``quarantine/``
subdirectory and the exit code is 1.  Configuration-validation problems
exit with code 2 before anything is written.

A config file (YAML or JSON) may supply any option; explicit flags
override it.  ``TAILHAWKES_OUT`` overrides the root that relative output
directories are created under.
"""

from __future__ import annotations

import csv
import json
import os
import shutil
import sys
from pathlib import Path

import click
import httpx
import yaml
from pydantic import BaseModel, Field, ValidationError

import tailhawkes
from tailhawkes import diag
from tailhawkes.ingest import load_series
from tailhawkes.service import handlers
from tailhawkes.service import schemas as s

KIND_ALIASES = {
    "bivariate": "bivariate",
    "bi": "bivariate",
    "bivariate-decoupled": "bivariate-decoupled",
    "decoupled": "bivariate-decoupled",
    "common": "common",
    "ci": "common",
    "common-symmetric": "common-symmetric",
    "symmetric": "common-symmetric",
}
GARCH_VARIANTS = {
    "0n": (0, "normal"),
    "0t": (0, "student-t"),
    "1n": (1, "normal"),
    "1t": (1, "student-t"),
}

_ROUTES = {
    "thresholds": ("/series/thresholds", handlers.thresholds, s.ThresholdResponse),
    "exceedances": ("/series/exceedances", handlers.exceedances, s.ExceedancesModel),
    "fit": ("/hawkes/fit", handlers.fit, s.FitResultModel),
    "loglik": ("/hawkes/loglik", handlers.loglik, s.LogLikResponse),
    "diagnose": ("/hawkes/diagnose", handlers.diagnose, s.DiagnoseResponse),
    "simulate": ("/hawkes/simulate", handlers.simulate, s.SimulateResponse),
    "garch_fit": ("/garch/fit", handlers.garch_fit, s.GarchFitModel),
    "garch_filter": ("/garch/filter", handlers.garch_filter, s.GarchFilterResponse),
    "residual_hawkes": ("/garch/residual-hawkes", handlers.residual_hawkes, s.ResidualHawkesResponse),
}


class ServiceClient:
    """Dispatch service calls in-process or over HTTP."""

    def __init__(self, server: str | None = None):
        self.server = server or os.environ.get("TAILHAWKES_SERVER") or None

    def call(self, op: str, request: BaseModel):
        path, fn, response_model = _ROUTES[op]
        if self.server is None:
            return fn(request)
        resp = httpx.post(self.server.rstrip("/") + path,
                          content=request.model_dump_json(),
                          headers={"content-type": "application/json"}, timeout=3600.0)
        if resp.status_code != 200:
            raise ValueError(f"server error {resp.status_code} on {path}: {resp.text}")
        return response_model.model_validate(resp.json())


class RunConfig(BaseModel):
    """Declarative run configuration; flags override file values."""

    input: str | None = None
    price_column: str = "close"
    returns_column: str | None = None
    date_column: str = "date"
    train_end: str | None = None
    quantile: float = Field(default=0.025, gt=0.0, lt=0.5)
    kinds: list[str] = Field(default_factory=lambda: list(dict.fromkeys(KIND_ALIASES.values())))
    seed: int = 0
    restarts: int = Field(default=8, ge=1)
    out: str = "run"
    max_lag: int = Field(default=30, ge=1)
    rolling_window: int = Field(default=50, ge=5)
    server: str | None = None


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    raw = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(raw)
    if not isinstance(data, dict):
        raise click.UsageError(f"config file {path} must hold a mapping")
    return data


def _build_config(config_path: str | None, overrides: dict) -> RunConfig:
    values = _load_config(config_path)
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "kinds" in values and isinstance(values["kinds"], str):
        values["kinds"] = [k.strip() for k in values["kinds"].split(",") if k.strip()]
    try:
        cfg = RunConfig.model_validate(values)
    except ValidationError as err:
        raise click.UsageError(f"invalid configuration: {err}") from None
    bad = [k for k in cfg.kinds if k not in KIND_ALIASES]
    if bad:
        raise click.UsageError(f"unknown model kinds: {bad}")
    cfg.kinds = [KIND_ALIASES[k] for k in cfg.kinds]
    return cfg


def _out_dir(out: str) -> Path:
    root = os.environ.get("TAILHAWKES_OUT")
    path = Path(out)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def _load_input(cfg: RunConfig):
    if not cfg.input:
        raise click.UsageError("an input CSV is required (--input or config key 'input')")
    if not Path(cfg.input).exists():
        raise click.UsageError(f"input file {cfg.input} does not exist")
    train_end = cfg.train_end
    if train_end is not None and train_end.lstrip("-").isdigit():
        train_end = int(train_end)
    try:
        series = load_series(cfg.input, price_column=cfg.price_column,
                             date_column=cfg.date_column, returns_column=cfg.returns_column,
                             train_end=train_end)
    except ValueError as err:
        raise click.UsageError(str(err)) from None
    return s.SeriesPayload(x=series.x.tolist(), train_end=series.train_end,
                           labels=list(series.labels) if series.labels else None)


class RunDir:
    """Output directory with tracked writes, validation and quarantine."""

    def __init__(self, out: Path):
        self.path = out
        self.path.mkdir(parents=True, exist_ok=True)
        self.written: list[tuple[Path, object]] = []

    def write_json(self, name: str, payload, model: type[BaseModel] | None = None) -> Path:
        target = self.path / name
        obj = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
        target.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.written.append((target, model or (type(payload) if isinstance(payload, BaseModel) else None)))
        return target

    def write_csv(self, name: str, header: list[str], rows: list[list]) -> Path:
        target = self.path / name
        with open(target, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        self.written.append((target, len(rows)))
        return target

    def validate(self) -> None:
        """Re-read every artifact and check it against its schema."""
        for target, schema in self.written:
            if isinstance(schema, int):
                with open(target, newline="", encoding="utf-8") as fh:
                    rows = list(csv.reader(fh))
                if len(rows) != schema + 1:
                    raise ValueError(f"{target.name}: expected {schema} data rows, found {len(rows) - 1}")
            else:
                data = json.loads(target.read_text(encoding="utf-8"))
                if isinstance(schema, type) and issubclass(schema, BaseModel):
                    schema.model_validate(data)

    def quarantine(self) -> Path:
        qdir = self.path / "quarantine"
        qdir.mkdir(exist_ok=True)
        for target, _ in self.written:
            if target.exists():
                shutil.move(str(target), str(qdir / target.name))
        return qdir


def _run_stages(rundir: RunDir, body) -> None:
    """Execute a command body with quarantine-on-failure semantics."""
    try:
        body()
        rundir.validate()
    except (ValueError, ValidationError) as err:
        qdir = rundir.quarantine()
        click.echo(f"error: {err}", err=True)
        click.echo(f"partial outputs moved to {qdir}", err=True)
        sys.exit(1)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _manifest(cfg: RunConfig, command: str, extra: dict | None = None) -> dict:
    manifest = {"command": command, "version": tailhawkes.__version__,
                "config": json.loads(cfg.model_dump_json())}
    if extra:
        manifest.update(extra)
    return manifest


def _comparison_rows(client: ServiceClient, fits: dict[str, s.FitResultModel],
                     exc: s.ExceedancesModel) -> tuple[list[str], list[list]]:
    header = ["kind", "dim", "n_events_train", "n_events_forecast",
              "loglik_train", "deviance_train", "aic_train", "bic_train",
              "loglik_forecast", "deviance_forecast", "aic_forecast", "bic_forecast"]
    core_exc = exc.to_core()
    n_fc = core_exc.n_events(window=(core_exc.train_end, core_exc.T))
    rows = []
    for kind, fr in fits.items():
        dim = len(fr.free_names)
        n_train = fr.n_events["total"]
        row = [kind, dim, n_train, n_fc,
               _fmt(fr.loglik), _fmt(fr.deviance),
               _fmt(diag.aic(fr.loglik, dim)),
               _fmt(diag.bic(fr.loglik, dim, max(2 * n_train, 1)))]
        if core_exc.T > core_exc.train_end and n_fc > 0:
            ll = client.call("loglik", s.LogLikRequest(
                exceedances=exc, params=fr.params,
                window=(float(core_exc.train_end), float(core_exc.T))))
            # parameters are frozen ex ante: no dimension penalty in the
            # forecast AIC; the forecast BIC applies the documented
            # event-count penalty of the scored window
            rows.append(row + [_fmt(ll.total), _fmt(-2.0 * ll.total),
                               _fmt(-2.0 * ll.total),
                               _fmt(diag.bic(ll.total, dim, 2 * n_fc))])
        else:
            rows.append(row + ["", "", "", ""])
    return header, rows


def _lr_reports(client: ServiceClient, fits: dict[str, s.FitResultModel],
                exc: s.ExceedancesModel) -> list[dict]:
    """Whole-model LR tests for nested pairs, per process, default dof."""
    core_exc = exc.to_core()
    windows = {"train": (0.0, float(core_exc.train_end))}
    if core_exc.T > core_exc.train_end:
        windows["forecast"] = (float(core_exc.train_end), float(core_exc.T))
    lls: dict[tuple[str, str], s.LogLikResponse] = {}
    for kind, fr in fits.items():
        for wname, window in windows.items():
            lls[kind, wname] = client.call("loglik", s.LogLikRequest(
                exceedances=exc, params=fr.params, window=window))
    reports = []
    for k0, f0 in fits.items():
        for k1, f1 in fits.items():
            dof = len(f1.free_names) - len(f0.free_names)
            if dof <= 0 or k0 == k1:
                continue
            for wname in windows:
                l0, l1 = lls[k0, wname], lls[k1, wname]
                for proc, a0, a1 in (("both", l0.total, l1.total),
                                     ("left", l0.left, l1.left),
                                     ("right", l0.right, l1.right)):
                    rep = diag.lr_test(a0, a1, dof, name=f"lr-{k0}-vs-{k1}-{proc}-{wname}")
                    reports.append({"null": k0, "alternative": k1, "process": proc,
                                    "period": wname, "dof": dof, **rep.to_dict()})
    return reports


@click.group()
@click.version_option(tailhawkes.__version__)
def main() -> None:
    """Two-tailed exceedance Hawkes modelling."""


_shared = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="YAML/JSON config file; flags override its values."),
    click.option("--input", "input_", type=str, default=None, help="Input CSV path."),
    click.option("--price-column", type=str, default=None),
    click.option("--returns-column", type=str, default=None),
    click.option("--date-column", type=str, default=None),
    click.option("--train-end", type=str, default=None,
                 help="Training cutoff: integer index or date label."),
    click.option("--quantile", type=float, default=None, help="Tail probability q."),
    click.option("--seed", type=int, default=None),
    click.option("--restarts", type=int, default=None),
    click.option("--out", type=str, default=None, help="Output directory."),
    click.option("--server", type=str, default=None, help="Remote service URL."),
]


def _with_shared(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


def _overrides(**kw) -> dict:
    mapping = {"input_": "input"}
    return {mapping.get(k, k): v for k, v in kw.items()}


@main.command()
@_with_shared
@click.option("--kinds", type=str, default=None,
              help="Comma-separated model kinds (default: all four).")
def fit(config_path, kinds, **kw) -> None:
    """Extract exceedances and fit the requested model variants."""
    cfg = _build_config(config_path, _overrides(kinds=kinds, **kw))
    series = _load_input(cfg)
    client = ServiceClient(cfg.server)
    rundir = RunDir(_out_dir(cfg.out))

    def body():
        rundir.write_json("manifest.json", _manifest(cfg, "fit"))
        exc = client.call("exceedances", s.ExtractRequest(series=series, q=cfg.quantile))
        rundir.write_json("exceedances.json", exc)
        fits: dict[str, s.FitResultModel] = {}
        for kind in cfg.kinds:
            result = client.call("fit", s.FitRequest(
                exceedances=exc, kind=kind,
                options=s.FitOptionsModel(restarts=cfg.restarts, seed=cfg.seed)))
            fits[kind] = result
            rundir.write_json(f"fit_{kind}.json", result)
        header, rows = _comparison_rows(client, fits, exc)
        rundir.write_csv("comparison.csv", header, rows)
        rundir.write_json("lr_tests.json", {"reports": _lr_reports(client, fits, exc)})

    _run_stages(rundir, body)
    click.echo(f"wrote fit artifacts to {rundir.path}")


@main.command()
@_with_shared
@click.option("--fit", "fit_path", type=click.Path(exists=True), required=True,
              help="FitResult JSON produced by the fit command.")
@click.option("--exceedances", "exc_path", type=click.Path(exists=True), default=None,
              help="Exceedances JSON (default: exceedances.json next to the fit).")
@click.option("--window", "window_name", type=click.Choice(["all", "train", "forecast"]),
              default="all")
@click.option("--max-lag", type=int, default=None)
@click.option("--rolling-window", type=int, default=None)
def diagnose(config_path, fit_path, exc_path, window_name, max_lag, rolling_window, **kw) -> None:
    """Residual-time diagnostics for one fit artifact."""
    cfg = _build_config(config_path, _overrides(max_lag=max_lag,
                                                rolling_window=rolling_window, **kw))
    exc_path = exc_path or str(Path(fit_path).parent / "exceedances.json")
    if not Path(exc_path).exists():
        raise click.UsageError(f"exceedances file {exc_path} does not exist")
    fit_model = s.FitResultModel.model_validate(json.loads(Path(fit_path).read_text()))
    exc = s.ExceedancesModel.model_validate(json.loads(Path(exc_path).read_text()))
    window = {"all": None,
              "train": (0.0, float(exc.train_end)),
              "forecast": (float(exc.train_end), float(exc.T))}[window_name]
    client = ServiceClient(cfg.server)
    rundir = RunDir(_out_dir(cfg.out))

    def body():
        rundir.write_json("manifest.json", _manifest(cfg, "diagnose", {
            "fit": str(fit_path), "exceedances": str(exc_path), "window": window_name}))
        res = client.call("diagnose", s.DiagnoseRequest(
            exceedances=exc, params=fit_model.params, window=window,
            max_lag=cfg.max_lag, rolling_window=cfg.rolling_window))
        r = res.residuals
        # count-vs-residual-time plot data: under a correct model the count
        # tracks the unit-rate line, with KS bands of +/- c sqrt(n) counts
        n_ev = max(len(r.tau_both), 1)
        band95, band99 = diag.KS_BAND_95 * n_ev ** 0.5, diag.KS_BAND_99 * n_ev ** 0.5
        rundir.write_csv(
            "residuals.csv",
            ["count", "tail", "tau_both", "resid_m",
             "expected_count", "count_band_95", "count_band_99"],
            [[i + 1, tail, _fmt(tau), _fmt(rm), _fmt(tau), _fmt(band95), _fmt(band99)]
             for i, (tail, tau, rm) in enumerate(zip(r.tail, r.tau_both, r.resid_m))])
        for proc in diag.PROCESSES:
            dtau = r.dtau[proc]
            z = r.z[proc]
            rundir.write_csv(f"interarrivals_{proc}.csv", ["dtau", "z"],
                             [[_fmt(d), _fmt(zi)] for d, zi in zip(dtau, z)])
        rundir.write_json("reports.json",
                          {"reports": [rep.model_dump() for rep in res.reports]})
        for proc, a in res.acf.items():
            rundir.write_csv(f"acf_{proc}.csv",
                             ["lag", "acf", "band_95", "band_99"],
                             [[lag, _fmt(v), _fmt(a.band_95), _fmt(a.band_99)]
                              for lag, v in zip(a.lags, a.values)])
        for proc, rr in res.rolling_acf1.items():
            rundir.write_csv(f"rolling_acf1_{proc}.csv",
                             ["start", "acf1", "band_95", "band_99", "gap"],
                             [[st, _fmt(v), _fmt(rr.band_95), _fmt(rr.band_99),
                               int(v is None)]
                              for st, v in zip(rr.start, rr.values)])

    _run_stages(rundir, body)
    click.echo(f"wrote diagnostics to {rundir.path}")


@main.command()
@_with_shared
@click.option("--fits", "fit_paths", type=click.Path(exists=True), multiple=True, required=True)
@click.option("--exceedances", "exc_path", type=click.Path(exists=True), required=True)
def compare(config_path, fit_paths, exc_path, **kw) -> None:
    """Comparison table and LR tests for existing fit artifacts."""
    cfg = _build_config(config_path, _overrides(**kw))
    client = ServiceClient(cfg.server)
    exc = s.ExceedancesModel.model_validate(json.loads(Path(exc_path).read_text()))
    fits = {}
    for path in fit_paths:
        model = s.FitResultModel.model_validate(json.loads(Path(path).read_text()))
        fits[model.kind] = model
    rundir = RunDir(_out_dir(cfg.out))

    def body():
        rundir.write_json("manifest.json", _manifest(cfg, "compare", {
            "fits": [str(p) for p in fit_paths], "exceedances": str(exc_path)}))
        header, rows = _comparison_rows(client, fits, exc)
        rundir.write_csv("comparison.csv", header, rows)
        rundir.write_json("lr_tests.json", {"reports": _lr_reports(client, fits, exc)})

    _run_stages(rundir, body)
    click.echo(f"wrote comparison to {rundir.path}")


@main.command()
@_with_shared
@click.option("--params", "params_path", type=click.Path(exists=True), default=None,
              help="HawkesParams or FitResult JSON.")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), default=None,
              help="Regenerate a previous batch from its manifest.")
@click.option("--length", type=int, default=None, help="Series length in trading days.")
@click.option("--replications", type=int, default=None)
@click.option("--burn-in", type=int, default=None)
def simulate(config_path, params_path, manifest_path, length, replications, burn_in, **kw) -> None:
    """Generate synthetic exceedance series (one CSV per replication)."""
    cfg = _build_config(config_path, _overrides(**kw))
    if manifest_path is not None:
        stored = json.loads(Path(manifest_path).read_text())["request"]
        request = s.SimulateRequest.model_validate(stored)
    else:
        if params_path is None:
            raise click.UsageError("either --params or --manifest is required")
        raw = json.loads(Path(params_path).read_text())
        params = s.HawkesParamsModel.model_validate(raw.get("params", raw))
        if length is None:
            raise click.UsageError("--length is required")
        request = s.SimulateRequest(params=params, T=length, seed=cfg.seed,
                                    burn_in=burn_in, replications=replications or 1)
    client = ServiceClient(cfg.server)
    rundir = RunDir(_out_dir(cfg.out))

    def body():
        res = client.call("simulate", request)
        rundir.write_json("manifest.json", _manifest(cfg, "simulate", {
            "request": json.loads(request.model_dump_json())}))
        for i, series in enumerate(res.series):
            rows = [[e.t, e.tail, _fmt(e.m)] for e in series.events]
            rundir.write_csv(f"series_{i:03d}.csv", ["t", "tail", "m"], rows)
            rundir.write_json(f"series_{i:03d}.json", series)

    _run_stages(rundir, body)
    click.echo(f"wrote {request.replications} simulated series to {rundir.path}")


@main.command()
@_with_shared
@click.option("--variants", type=str, default="0n,0t,1n,1t",
              help="GARCH variants to fit: comma list of {0n, 0t, 1n, 1t}.")
def garch(config_path, variants, **kw) -> None:
    """GJR-GARCH study: fit variants, filter residuals, refit exceedance model."""
    cfg = _build_config(config_path, _overrides(**kw))
    chosen = [v.strip().lower() for v in variants.split(",") if v.strip()]
    bad = [v for v in chosen if v not in GARCH_VARIANTS]
    if bad:
        raise click.UsageError(f"unknown GARCH variants: {bad}")
    series = _load_input(cfg)
    client = ServiceClient(cfg.server)
    rundir = RunDir(_out_dir(cfg.out))

    def body():
        rundir.write_json("manifest.json", _manifest(cfg, "garch", {"variants": chosen}))
        garch_rows = []
        hawkes_rows = []
        for name in chosen:
            o, dist = GARCH_VARIANTS[name]
            gfit = client.call("garch_fit", s.GarchFitRequest(
                series=series, o=o, dist=dist, seed=cfg.seed))
            rundir.write_json(f"garch_{name}.json", gfit)
            filt = client.call("garch_filter", s.GarchFilterRequest(
                series=series, params=gfit.params))
            rundir.write_csv(
                f"filtered_{name}.csv", ["t", "x", "sigma", "z"],
                [[i, _fmt(x), _fmt(sg), _fmt(z)]
                 for i, (x, sg, z) in enumerate(zip(series.x, filt.sigma, filt.z))])
            p = gfit.params
            garch_rows.append([name, o, dist, _fmt(p.mu), _fmt(p.omega), _fmt(p.alpha1),
                               _fmt(p.gamma1), _fmt(p.beta1), _fmt(p.nu),
                               _fmt(gfit.loglik), _fmt(gfit.aic), gfit.converged])
            rh = client.call("residual_hawkes", s.ResidualHawkesRequest(
                series=series, params=gfit.params, q=cfg.quantile,
                options=s.FitOptionsModel(restarts=cfg.restarts, seed=cfg.seed)))
            rundir.write_json(f"residual_hawkes_{name}.json", rh)
            hp = rh.fit.params
            hawkes_rows.append([name, _fmt(rh.u_left), _fmt(rh.u_right),
                                _fmt(hp.mu.get("left")), _fmt(hp.mu.get("right")),
                                _fmt(hp.branching.get("left_left")),
                                _fmt(hp.branching.get("left_right")),
                                _fmt(hp.branching.get("right_left")),
                                _fmt(hp.branching.get("right_right")),
                                _fmt(hp.beta.left), _fmt(hp.beta.right),
                                _fmt(hp.xi.left), _fmt(hp.xi.right),
                                _fmt(hp.varsigma.left), _fmt(hp.varsigma.right)])
        rundir.write_csv("garch_fits.csv",
                         ["variant", "o", "dist", "mu", "omega", "alpha1", "gamma1",
                          "beta1", "nu", "loglik", "aic", "converged"], garch_rows)
        rundir.write_csv("residual_hawkes.csv",
                         ["variant", "u_left", "u_right", "mu_left", "mu_right",
                          "gamma_left_left", "gamma_left_right", "gamma_right_left",
                          "gamma_right_right", "beta_left", "beta_right",
                          "xi_left", "xi_right", "varsigma_left", "varsigma_right"],
                         hawkes_rows)

    _run_stages(rundir, body)
    click.echo(f"wrote GARCH study to {rundir.path}")


@main.command()
@click.option("--host", type=str, default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from tailhawkes.service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
