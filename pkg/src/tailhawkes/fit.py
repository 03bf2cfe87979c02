"""Maximum-likelihood estimation for the four model variants.

The log-likelihood of an event history over a window ``[a, b)`` is the sum
over processes of the negated compensator integral plus, for each event,
the log of the pre-event intensity and the log mark density.  For the
common kinds the mark density carries the logistic tail weights, so the
event terms split exactly by tail; this split is the basis of the
per-process likelihood-ratio tests.

Optimisation is bounded quasi-Newton (L-BFGS-B) on a rescaled parameter
vector, restarted from randomised initial points, with the subcriticality
constraint enforced through a rejection penalty.  Standard errors come
from a central-difference Hessian of the log-likelihood at the optimum
(inverse observed information), falling back to a pseudo-inverse when the
Hessian is singular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from tailhawkes import core
from tailhawkes.core import LEFT, RIGHT, HawkesParams
from tailhawkes.ingest import ExceedanceSeries

_BOUNDS = {
    "mu": (1e-6, 1.0),
    "gamma": (0.0, 2.0),
    "beta": (1e-4, 10.0),
    "xi": (-0.95, 0.95),
    "varsigma": (1e-6, 1.0),
    "eta": (0.0, 10.0),
    "alpha": (0.0, 100.0),
    "w": (-5.0, 5.0),
}
_MAX_BRANCHING = 0.999
_PENALTY = 1e9


@dataclass(frozen=True)
class LogLik:
    """Window log-likelihood with its per-tail decomposition."""

    total: float
    left: float
    right: float


@dataclass(frozen=True)
class FitOptions:
    """Controls for :func:`fit_ml`.

    ``fixed`` pins named parameters at given values (removing them from the
    free vector); ``bounds`` overrides the box bounds per parameter family
    (``mu``, ``gamma``, ``beta``, ``xi``, ``varsigma``, ``eta``, ``alpha``,
    ``w``); ``free_w`` frees the tail-weight asymmetry of the common kinds,
    which is otherwise pinned at zero as implied by symmetric quantile
    thresholds.  ``window`` defaults to the training window.
    """

    restarts: int = 8
    seed: int = 0
    fixed: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    free_w: bool = False
    window: tuple[float, float] | None = None
    maxiter: int = 500


@dataclass(frozen=True)
class FitResult:
    """Outcome of one maximum-likelihood fit."""

    params: HawkesParams
    se: dict
    loglik: float
    deviance: float
    n_events: dict
    converged: bool
    n_restarts_used: int
    free_names: tuple[str, ...]
    boundary_pinned: tuple[str, ...] = ()
    se_pseudo_inverse: bool = False
    window: tuple[float, float] | None = None

    def dim(self) -> int:
        return len(self.free_names)

    def to_dict(self) -> dict:
        return {
            "kind": self.params.kind,
            "params": self.params.to_dict(),
            "se": dict(self.se),
            "loglik": self.loglik,
            "deviance": self.deviance,
            "n_events": dict(self.n_events),
            "converged": self.converged,
            "n_restarts_used": self.n_restarts_used,
            "free_names": list(self.free_names),
            "boundary_pinned": list(self.boundary_pinned),
            "se_pseudo_inverse": self.se_pseudo_inverse,
            "window": list(self.window) if self.window else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(
            params=HawkesParams.from_dict(d["params"]),
            se=dict(d["se"]),
            loglik=float(d["loglik"]),
            deviance=float(d["deviance"]),
            n_events=dict(d["n_events"]),
            converged=bool(d["converged"]),
            n_restarts_used=int(d["n_restarts_used"]),
            free_names=tuple(d["free_names"]),
            boundary_pinned=tuple(d.get("boundary_pinned", ())),
            se_pseudo_inverse=bool(d.get("se_pseudo_inverse", False)),
            window=tuple(d["window"]) if d.get("window") else None,
        )


def log_likelihood(params: HawkesParams, exceedances: ExceedanceSeries,
                   window: tuple[float, float] | None = None) -> LogLik:
    """Log-likelihood of the event history over ``[a, b)``.

    Events inside the window contribute their event terms; the whole
    history before the window still drives the intensity state.  The
    compensator integral is evaluated in closed form.
    """
    a, b = _check_window(window, exceedances.T)
    scan = core.event_scan(params, exceedances) if len(exceedances) else None
    return _loglik_from_scan(params, exceedances, scan, a, b)


def _check_window(window, T) -> tuple[float, float]:
    if window is None:
        return 0.0, float(T)
    a, b = float(window[0]), float(window[1])
    if not (0.0 <= a < b <= T):
        raise ValueError(f"window [{a}, {b}) must lie within [0, {T}]")
    return a, b


def _loglik_from_scan(params, exc, scan, a, b) -> LogLik:
    comp = core.compensator_at(params, exc, np.array([a, b]), scan=scan)
    d_comp = comp[:, 1] - comp[:, 0]
    if len(exc) == 0:
        if params.is_common:
            return LogLik(total=-d_comp[0],
                          left=-core.tail_weight(-params.w) * d_comp[0],
                          right=-core.tail_weight(params.w) * d_comp[0])
        return LogLik(total=-float(d_comp.sum()), left=-d_comp[0], right=-d_comp[1])
    in_win = (exc.t >= a) & (exc.t < b)
    is_left = exc.tail == LEFT
    if params.is_common:
        log_lam = np.log(scan["lam_pre_both"])
        s_left = core.tail_weight(-params.w)
        s_right = core.tail_weight(params.w)
        terms = log_lam + scan["logf"] + np.where(is_left, math.log(s_left), math.log(s_right))
        ll_left = -s_left * d_comp[0] + terms[in_win & is_left].sum()
        ll_right = -s_right * d_comp[0] + terms[in_win & ~is_left].sum()
    else:
        lam_event = scan["lam_pre"][exc.tail, np.arange(len(exc))]
        terms = np.log(lam_event) + scan["logf"]
        ll_left = -d_comp[0] + terms[in_win & is_left].sum()
        ll_right = -d_comp[1] + terms[in_win & ~is_left].sum()
    return LogLik(total=float(ll_left + ll_right), left=float(ll_left), right=float(ll_right))


# ---------------------------------------------------------------------------
# parameter layout

_PAIR_FIELDS = ("beta", "xi", "varsigma", "eta", "alpha")


class _Layout:
    """Mapping between a free parameter vector and ``HawkesParams``."""

    def __init__(self, kind: str, fixed: dict, free_w: bool, bounds: dict):
        self.kind = kind
        self.fixed = dict(fixed)
        if kind == "common" and not free_w:
            self.fixed.setdefault("w", 0.0)
        names: list[str] = []
        if kind in core.COMMON_KINDS:
            names.append("mu")
            if kind == "common-symmetric":
                names.append("gamma")
                names.extend(_PAIR_FIELDS)
            else:
                names.extend(["gamma_left", "gamma_right"])
                for f in _PAIR_FIELDS:
                    names.extend([f"{f}_left", f"{f}_right"])
                names.append("w")
        else:
            names.extend(["mu_left", "mu_right"])
            if kind == "bivariate":
                names.extend(["gamma_left_left", "gamma_left_right",
                              "gamma_right_left", "gamma_right_right"])
            else:
                names.extend(["gamma_left_left", "gamma_right_right"])
            for f in _PAIR_FIELDS:
                names.extend([f"{f}_left", f"{f}_right"])
        unknown = set(self.fixed) - set(names)
        if unknown:
            raise ValueError(f"unknown fixed parameters for kind {kind!r}: {sorted(unknown)}")
        self.names = [n for n in names if n not in self.fixed]
        self.bounds = [dict(_BOUNDS, **bounds)[n.split("_", 1)[0]] for n in self.names]

    def build(self, x: np.ndarray) -> HawkesParams:
        v = dict(zip(self.names, x))
        v.update(self.fixed)
        if self.kind == "common-symmetric":
            return HawkesParams(
                kind=self.kind, mu=v["mu"], branching=(v["gamma"], v["gamma"]),
                **{f: (v[f], v[f]) for f in _PAIR_FIELDS}, w=0.0)
        if self.kind in core.COMMON_KINDS:
            return HawkesParams(
                kind=self.kind, mu=v["mu"], branching=(v["gamma_left"], v["gamma_right"]),
                **{f: (v[f"{f}_left"], v[f"{f}_right"]) for f in _PAIR_FIELDS},
                w=v.get("w", 0.0))
        g_lr = v.get("gamma_left_right", 0.0)
        g_rl = v.get("gamma_right_left", 0.0)
        return HawkesParams(
            kind=self.kind, mu=(v["mu_left"], v["mu_right"]),
            branching=[[v["gamma_left_left"], g_lr], [g_rl, v["gamma_right_right"]]],
            **{f: (v[f"{f}_left"], v[f"{f}_right"]) for f in _PAIR_FIELDS})

    def branching_ratio(self, x: np.ndarray) -> float:
        v = dict(zip(self.names, x))
        v.update(self.fixed)
        if self.kind == "common-symmetric":
            return v["gamma"]
        if self.kind in core.COMMON_KINDS:
            w = v.get("w", 0.0)
            return core.tail_weight(-w) * v["gamma_left"] + core.tail_weight(w) * v["gamma_right"]
        g = np.array([[v["gamma_left_left"], v.get("gamma_left_right", 0.0)],
                      [v.get("gamma_right_left", 0.0), v["gamma_right_right"]]])
        return core.spectral_radius(g)

    def extract(self, params: HawkesParams) -> np.ndarray:
        d = _flatten_params(params)
        return np.array([d[n] for n in self.names])


def _flatten_params(params: HawkesParams) -> dict:
    d = {}
    if params.is_common:
        d["mu"] = params.mu
        d["gamma"] = params.branching[0]
        d["gamma_left"], d["gamma_right"] = params.branching
        d["w"] = params.w
        for f in _PAIR_FIELDS:
            v = getattr(params, f)
            d[f] = v[0]
            d[f"{f}_left"], d[f"{f}_right"] = v
    else:
        d["mu_left"], d["mu_right"] = params.mu
        g = params.branching
        d["gamma_left_left"], d["gamma_left_right"] = g[0]
        d["gamma_right_left"], d["gamma_right_right"] = g[1]
        for f in _PAIR_FIELDS:
            v = getattr(params, f)
            d[f"{f}_left"], d[f"{f}_right"] = v
    return d


def _scales(layout: _Layout, exc: ExceedanceSeries, window) -> np.ndarray:
    """Typical magnitude per free parameter, used to condition the search."""
    a, b = window
    span = max(b - a, 1.0)
    n = max(exc.n_events(window=window), 1)
    rate = n / span
    m_std = float(np.std(np.abs(exc.m))) if len(exc) else 1e-2
    m_std = max(m_std, 1e-8)
    per_family = {
        "mu": max(0.5 * rate, 1e-5),
        "gamma": 0.5,
        "beta": 0.05,
        "xi": 0.3,
        "varsigma": m_std,
        "eta": max(m_std / max(rate, 1e-6), 1e-6),
        "alpha": 1.0,
        "w": 1.0,
    }
    return np.array([per_family[nm.split("_", 1)[0]] for nm in layout.names])


def _default_start(layout: _Layout, exc: ExceedanceSeries, window) -> np.ndarray:
    a, b = window
    span = max(b - a, 1.0)
    n_left = max(exc.n_events(tail=LEFT, window=window), 1)
    n_right = max(exc.n_events(tail=RIGHT, window=window), 1)
    m_std = max(float(np.std(np.abs(exc.m))) if len(exc) else 1e-2, 1e-8)
    v = {
        "mu": 0.5 * (n_left + n_right) / span,
        "mu_left": 0.5 * n_left / span,
        "mu_right": 0.5 * n_right / span,
        "gamma": 0.5, "gamma_left": 0.5, "gamma_right": 0.5,
        "gamma_left_left": 0.4, "gamma_left_right": 0.1,
        "gamma_right_left": 0.1, "gamma_right_right": 0.4,
        "w": 0.0,
    }
    for f in _PAIR_FIELDS:
        base = {"beta": 0.05, "xi": 0.1, "varsigma": 0.8 * m_std, "eta": 0.0, "alpha": 0.0}[f]
        v[f] = base
        v[f"{f}_left"] = base
        v[f"{f}_right"] = base
    x = np.array([v[nm] for nm in layout.names])
    return _clip_to_bounds(x, layout)


def _random_start(layout: _Layout, scales: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    x = np.empty(len(layout.names))
    for i, nm in enumerate(layout.names):
        fam = nm.split("_", 1)[0]
        if fam in ("mu", "beta", "varsigma"):
            x[i] = scales[i] * math.exp(rng.uniform(math.log(1 / 30), math.log(30)))
        elif fam == "gamma":
            x[i] = rng.uniform(0.05, 1.0)
        elif fam == "xi":
            x[i] = rng.uniform(-0.3, 0.5)
        elif fam == "eta":
            x[i] = scales[i] * math.exp(rng.uniform(math.log(1e-2), math.log(10)))
        elif fam == "alpha":
            x[i] = math.exp(rng.uniform(math.log(0.05), math.log(5.0)))
        else:  # w
            x[i] = rng.uniform(-1.0, 1.0)
    rho = layout.branching_ratio(x)
    if rho >= _MAX_BRANCHING:
        shrink = 0.9 * _MAX_BRANCHING / rho
        for i, nm in enumerate(layout.names):
            if nm.split("_", 1)[0] == "gamma":
                x[i] *= shrink
    return _clip_to_bounds(x, layout)


def _clip_to_bounds(x: np.ndarray, layout: _Layout) -> np.ndarray:
    lo = np.array([b[0] for b in layout.bounds])
    hi = np.array([b[1] for b in layout.bounds])
    return np.clip(x, lo, hi)


def fit_ml(kind: str, exceedances: ExceedanceSeries,
           options: FitOptions | None = None) -> FitResult:
    """Fit one model variant by bounded maximum likelihood.

    Runs L-BFGS-B from a moment-based default start plus randomised
    restarts and keeps the best optimum.  Requires at least 10 events per
    tail inside the fit window.
    """
    options = options or FitOptions()
    if kind not in core.KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {core.KINDS}")
    window = _check_window(options.window or (0.0, float(exceedances.train_end)),
                           exceedances.T)
    for tail in (LEFT, RIGHT):
        if exceedances.n_events(tail=tail, window=window) < 10:
            raise ValueError(
                f"need at least 10 {core.TAIL_NAMES[tail]}-tail events in the fit window")
    layout = _Layout(kind, options.fixed, options.free_w, options.bounds)
    scales = _scales(layout, exceedances, window)
    a, b = window

    def objective(u: np.ndarray) -> float:
        x = u * scales
        rho = layout.branching_ratio(x)
        if rho >= _MAX_BRANCHING:
            return _PENALTY * (1.0 + rho - _MAX_BRANCHING)
        try:
            params = layout.build(x)
            ll = log_likelihood(params, exceedances, (a, b))
        except ValueError:
            return _PENALTY
        if not math.isfinite(ll.total):
            return _PENALTY
        return -ll.total

    scaled_bounds = [(lo / s, hi / s) for (lo, hi), s in zip(layout.bounds, scales)]
    rng = np.random.default_rng(options.seed)
    best = None
    n_runs = max(options.restarts, 1)
    for run in range(n_runs):
        x0 = _default_start(layout, exceedances, window) if run == 0 \
            else _random_start(layout, scales, rng)
        res = minimize(objective, x0 / scales, method="L-BFGS-B", bounds=scaled_bounds,
                       options={"maxiter": options.maxiter, "eps": 1e-7})
        if best is None or res.fun < best.fun:
            best = res
    if not math.isfinite(best.fun) or best.fun >= _PENALTY:
        raise ValueError(f"no feasible optimum found after {n_runs} restarts")
    x_hat = best.x * scales
    params = layout.build(x_hat)
    ll = log_likelihood(params, exceedances, window)
    pinned = tuple(
        nm for nm, xv, (lo, hi) in zip(layout.names, x_hat, layout.bounds)
        if xv - lo < 1e-9 * (hi - lo) or hi - xv < 1e-9 * (hi - lo)
    )
    se, pseudo = _se_from_layout(layout, x_hat, scales, exceedances, window, pinned)
    n_events = {
        "left": exceedances.n_events(tail=LEFT, window=window),
        "right": exceedances.n_events(tail=RIGHT, window=window),
        "total": exceedances.n_events(window=window),
    }
    return FitResult(
        params=params, se=se, loglik=ll.total, deviance=-2.0 * ll.total,
        n_events=n_events, converged=bool(best.success), n_restarts_used=n_runs,
        free_names=tuple(layout.names), boundary_pinned=pinned,
        se_pseudo_inverse=pseudo, window=(a, b),
    )


def hessian(f, x: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """Central-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=float)
    steps = np.broadcast_to(np.asarray(steps, dtype=float), x.shape)
    k = x.size
    h = np.empty((k, k))
    f0 = f(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = steps[i]
        h[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / steps[i] ** 2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = steps[j]
            h[i, j] = h[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * steps[i] * steps[j])
    return h


def _se_from_layout(layout, x_hat, scales, exc, window, pinned) -> tuple[dict, bool]:
    a, b = window

    def ll_of(x):
        try:
            return log_likelihood(layout.build(x), exc, (a, b)).total
        except ValueError:
            return -np.inf

    se = {nm: float("nan") for nm in layout.names}
    if not layout.names:
        return se, False
    steps = 1e-4 * scales
    # centre the stencil just inside the box so boundary-pinned optima still
    # get a curvature-based (typically very wide) standard error
    x0 = x_hat.copy()
    for i, (lo, hi) in enumerate(layout.bounds):
        steps[i] = min(steps[i], (hi - lo) / 4)
        x0[i] = min(max(x0[i], lo + steps[i]), hi - steps[i])

    h = hessian(ll_of, x0, steps)
    pseudo = False
    if not np.all(np.isfinite(h)):
        raise ValueError("non-finite Hessian entries in standard-error evaluation")
    info = -h
    try:
        cov = np.linalg.inv(info)
        if np.any(np.diag(cov) <= 0):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(info)
        pseudo = True
    diag = np.diag(cov)
    for i, nm in enumerate(layout.names):
        se[nm] = math.sqrt(diag[i]) if diag[i] > 0 else float("nan")
    return se, pseudo


def standard_errors(params: HawkesParams, exceedances: ExceedanceSeries,
                    window: tuple[float, float] | None = None,
                    fixed: dict | None = None, free_w: bool = False) -> dict:
    """Standard errors at an interior optimum.

    Inverse observed-information (negative central-difference Hessian of
    the log-likelihood); parameters at their box bounds are reported NaN,
    and a singular Hessian falls back to the pseudo-inverse.
    """
    window = _check_window(window or (0.0, float(exceedances.train_end)), exceedances.T)
    layout = _Layout(params.kind, fixed or {}, free_w, {})
    x = layout.extract(params)
    scales = _scales(layout, exceedances, window)
    pinned = tuple(
        nm for nm, xv, (lo, hi) in zip(layout.names, x, layout.bounds)
        if xv - lo < 1e-9 * (hi - lo) or hi - xv < 1e-9 * (hi - lo)
    )
    se, _ = _se_from_layout(layout, x, scales, exceedances, window, pinned)
    return se


def score_window(params: HawkesParams, exceedances: ExceedanceSeries,
                 window: tuple[float, float]) -> LogLik:
    """Evaluate a frozen parameter vector on an arbitrary window.

    The intensity state entering the window is propagated through the full
    event history before it, which is how out-of-sample (forecast) scores
    are defined here.
    """
    return log_likelihood(params, exceedances, window)
