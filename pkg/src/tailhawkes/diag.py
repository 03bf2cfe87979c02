"""Residual diagnostics, goodness-of-fit tests and model comparison.

Under a correctly specified model the event history, replotted in residual
time (the integrated conditional intensity), is a unit-rate Poisson
process: residual interarrivals are i.i.d. unit exponential and the
magnitude residuals of the conditional GPD are too.  The helpers here
compute those residuals, map them to the normal scale for correlogram
diagnostics, and wrap the KS, likelihood-ratio, AIC/BIC and ACF machinery
used to compare model variants.

Conventions: ``n_obs`` for the (training) BIC is twice the number of
events in the scored window, one observation each for an event's arrival
and its magnitude.  Out-of-sample windows are scored with parameters
frozen ex ante, so the forecast AIC carries no dimension penalty, while
the forecast BIC applies the event-count penalty of the scored window
(a deliberate, documented convention; it does not reproduce any published
forecast-BIC table).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from tailhawkes import core
from tailhawkes.core import LEFT, RIGHT, HawkesParams
from tailhawkes.ingest import ExceedanceSeries

PROCESSES = ("left", "right", "both")

#: One-sample KS confidence-band coefficients (band = coeff / sqrt(n)).
KS_BAND_95 = 1.358
KS_BAND_99 = 1.628


@dataclass(frozen=True)
class TestReport:
    """A named test statistic with its p-value and rejection flags."""

    name: str
    statistic: float
    p_value: float
    n: int
    reject_05: bool = field(init=False)
    reject_01: bool = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p_value must lie in [0, 1]")
        object.__setattr__(self, "reject_05", self.p_value < 0.05)
        object.__setattr__(self, "reject_01", self.p_value < 0.01)

    def to_dict(self) -> dict:
        return {
            "name": self.name, "statistic": self.statistic, "p_value": self.p_value,
            "n": self.n, "reject_05": self.reject_05, "reject_01": self.reject_01,
        }


@dataclass(frozen=True)
class ResidualSeries:
    """Residual times and residual magnitudes for one fitted model.

    ``tau_both`` is the pooled-process residual time at each event.
    ``dtau`` maps each process ("left", "right", "both") to its residual
    interarrivals (one fewer than that process's event count), and ``z``
    to their normal transforms.  ``resid_m`` holds the per-event magnitude
    residuals, unit exponential under a correct model.
    """

    tau_both: np.ndarray
    dtau: dict
    resid_m: np.ndarray
    z: dict
    tail: np.ndarray

    def __post_init__(self):
        n = self.tau_both.size
        if self.resid_m.size != n or self.tail.size != n:
            raise ValueError("per-event arrays must share one length")
        if np.any(np.diff(self.tau_both) < 0):
            raise ValueError("residual time must be non-decreasing")
        counts = {
            "left": int(np.sum(self.tail == LEFT)),
            "right": int(np.sum(self.tail == RIGHT)),
            "both": n,
        }
        for proc in PROCESSES:
            if self.dtau[proc].size != max(counts[proc] - 1, 0):
                raise ValueError(f"dtau[{proc!r}] must have n_events - 1 entries")
            if np.any(self.dtau[proc] <= 0):
                raise ValueError("residual interarrivals must be positive")


def split_interarrivals(dtau_both, w: float) -> tuple[np.ndarray, np.ndarray]:
    """Share pooled-process residual interarrivals between the tails.

    The per-tail interarrival is the tail-probability share of the pooled
    residual mass accrued between consecutive events of that tail:
    ``S(-w) * dtau`` for the left piece and ``S(+w) * dtau`` for the right,
    which sum to the input and halve it when ``w = 0``.  Applied to the
    pooled residual elapsed between same-tail events this makes each tail's
    interarrivals unit exponential under a correct model.
    """
    dtau_both = np.asarray(dtau_both, dtype=float)
    if np.any(dtau_both < 0):
        raise ValueError("dtau_both must be non-negative")
    return core.tail_weight(-w) * dtau_both, core.tail_weight(w) * dtau_both


def residual_time(params: HawkesParams, exceedances: ExceedanceSeries,
                  window: tuple[float, float] | None = None) -> ResidualSeries:
    """Residual-time rescaling of an event history under a model.

    For bivariate kinds the per-tail residual clocks are the per-process
    compensators; for common kinds the pooled clock is computed and shared
    between the tails via :func:`split_interarrivals`.  ``window`` limits
    the events analysed (history before it still drives the state).
    """
    a, b = (0.0, float(exceedances.T)) if window is None else (float(window[0]), float(window[1]))
    if len(exceedances) == 0:
        raise ValueError("no events to analyse")
    scan = core.event_scan(params, exceedances)
    sel = (exceedances.t >= a) & (exceedances.t < b)
    tail = exceedances.tail[sel]
    is_left = tail == LEFT
    if params.is_common:
        tau_both = scan["comp_both"][sel]
        dtau = {
            "both": np.diff(tau_both),
            "left": split_interarrivals(np.diff(tau_both[is_left]), params.w)[0],
            "right": split_interarrivals(np.diff(tau_both[~is_left]), params.w)[1],
        }
    else:
        comp = scan["comp"][:, sel]
        tau_both = comp[0] + comp[1]
        dtau = {
            "both": np.diff(tau_both),
            "left": np.diff(comp[0, is_left]),
            "right": np.diff(comp[1, ~is_left]),
        }
    z = {proc: normal_transform(dtau[proc]) for proc in PROCESSES}
    return ResidualSeries(tau_both=tau_both, dtau=dtau, resid_m=scan["resid"][sel],
                          z=z, tail=tail)


def residual_magnitudes(m, sigma_at_event, xi) -> np.ndarray:
    """Unit-exponential residuals of excess magnitudes under the GPD.

    ``E = ln(1 + xi |m| / sigma) / xi`` for ``xi != 0`` and ``|m| / sigma``
    in the exponential limit.
    """
    absm = np.abs(np.asarray(m, dtype=float))
    sigma = np.asarray(sigma_at_event, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive at every event")
    xi = float(xi)
    if xi == 0.0:
        return absm / sigma
    arg = 1.0 + xi * absm / sigma
    if np.any(arg <= 0):
        raise ValueError("excess magnitude outside GPD support for xi < 0")
    return np.log1p(xi * absm / sigma) / xi


def normal_transform(dtau) -> np.ndarray:
    """Map unit-exponential residual interarrivals to the unit-normal scale.

    ``z = sqrt(2) * erfinv(1 - 2 exp(-dtau))``; strictly increasing, with
    ``z < 0`` exactly when the event arrived sooner than the model expected.
    Evaluated through the normal inverse survival function, which stays
    accurate deep into the late-arrival tail.
    """
    dtau = np.asarray(dtau, dtype=float)
    if np.any(dtau <= 0):
        raise ValueError("residual interarrivals must be positive")
    return stats.norm.isf(np.exp(-dtau))


_REFERENCES = {
    "unit-exponential": stats.expon,
    "unit-normal": stats.norm,
    "uniform": stats.uniform,
}


def ks_test(sample, reference: str = "unit-exponential", name: str | None = None) -> TestReport:
    """One-sample two-sided KS test with the asymptotic Kolmogorov p-value."""
    sample = np.asarray(sample, dtype=float)
    if sample.size < 5:
        raise ValueError("KS test needs at least 5 observations")
    if reference not in _REFERENCES:
        raise ValueError(f"reference must be one of {sorted(_REFERENCES)}")
    res = stats.kstest(sample, _REFERENCES[reference].cdf, mode="asymp")
    return TestReport(name=name or f"ks-{reference}", statistic=float(res.statistic),
                      p_value=float(res.pvalue), n=sample.size)


def ks_bands(n: int) -> tuple[float, float]:
    """95% and 99% KS confidence half-widths for a sample of size ``n``."""
    return KS_BAND_95 / math.sqrt(n), KS_BAND_99 / math.sqrt(n)


def aic(loglik: float, dim_theta: int) -> float:
    """Akaike information criterion ``2 dim - 2 loglik``."""
    if dim_theta < 0:
        raise ValueError("dim_theta must be non-negative")
    return 2.0 * dim_theta - 2.0 * loglik


def bic(loglik: float, dim_theta: int, n_obs: int) -> float:
    """Bayesian information criterion ``dim ln(n_obs) - 2 loglik``."""
    if dim_theta < 0:
        raise ValueError("dim_theta must be non-negative")
    if n_obs < 1:
        raise ValueError("n_obs must be at least 1")
    return dim_theta * math.log(n_obs) - 2.0 * loglik


def lr_test(loglik_0: float, loglik_1: float, dof: int, name: str = "lr") -> TestReport:
    """Likelihood-ratio test of a nested pair of fits.

    ``2 (l1 - l0)`` against chi-squared with ``dof`` degrees of freedom;
    when the larger model fits no better the p-value is 1 by construction.
    """
    if dof < 1:
        raise ValueError("dof must be at least 1")
    statistic = max(2.0 * (loglik_1 - loglik_0), 0.0)
    p = float(stats.chi2.sf(statistic, dof))
    return TestReport(name=name, statistic=statistic, p_value=p, n=dof)


@dataclass(frozen=True)
class AcfResult:
    """Sample autocorrelations with null-hypothesis confidence bands."""

    lags: np.ndarray
    values: np.ndarray
    band_95: float
    band_99: float


def acf(series, max_lag: int) -> AcfResult:
    """Sample autocorrelation function up to ``max_lag``.

    Bands are the +/- z(alpha/2)/sqrt(n) nulls for a white-noise series.
    """
    x = np.asarray(series, dtype=float)
    if x.size <= max_lag:
        raise ValueError("series must be longer than max_lag")
    x = x - x.mean()
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise ValueError("zero-variance series has undefined autocorrelation")
    values = np.empty(max_lag + 1)
    values[0] = 1.0
    for h in range(1, max_lag + 1):
        values[h] = float(np.dot(x[h:], x[:-h])) / denom
    n = x.size
    return AcfResult(lags=np.arange(max_lag + 1), values=values,
                     band_95=1.959963984540054 / math.sqrt(n),
                     band_99=2.5758293035489004 / math.sqrt(n))


@dataclass(frozen=True)
class RollingAcf:
    """Lag-1 autocorrelation over a sliding window.

    ``values[i]`` covers ``series[i : i + window]``; zero-variance windows
    are NaN and flagged in ``gaps``.
    """

    start: np.ndarray
    values: np.ndarray
    window: int
    band_95: float
    band_99: float

    @property
    def gaps(self) -> np.ndarray:
        return np.isnan(self.values)


def rolling_acf1(series, window: int = 50) -> RollingAcf:
    """Windowed lag-1 autocorrelation for local over/under-forecast signals."""
    x = np.asarray(series, dtype=float)
    if x.size < window:
        raise ValueError("series must be at least one window long")
    n_win = x.size - window + 1
    values = np.empty(n_win)
    for i in range(n_win):
        seg = x[i : i + window]
        seg = seg - seg.mean()
        denom = float(np.dot(seg, seg))
        values[i] = float(np.dot(seg[1:], seg[:-1])) / denom if denom > 0 else float("nan")
    return RollingAcf(start=np.arange(n_win), values=values, window=window,
                      band_95=1.959963984540054 / math.sqrt(window),
                      band_99=2.5758293035489004 / math.sqrt(window))
