"""Model parameters, conditional intensities, and mark distributions.

Four model variants are supported, identified by a ``kind`` tag:

* ``bivariate`` -- left- and right-tail exceedances are two coupled point
  processes with a full 2x2 branching matrix (16 parameters).
* ``bivariate-decoupled`` -- no cross-excitation: the off-diagonal branching
  entries are fixed at zero (14 parameters).
* ``common`` -- a single arrival process for both tails; each event's tail is
  drawn stochastically with a logistic weight in ``w`` (13 parameters when
  ``w`` is pinned by symmetric threshold construction).
* ``common-symmetric`` -- the common model with both tails constrained to be
  identical and ``w = 0`` (7 parameters).

Time is measured in trading days (unit step); intensities are per trading
day, thresholds and scale parameters are in the units of the input series
(log-returns).  Excitation decays exponentially between events, so the
intensity state is Markov: a pair of per-tail excitation levels ``chi`` that
decay at rates ``beta`` and jump by ``beta * kappa(m)`` when an event of
that tail arrives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tailhawkes import _kernels

LEFT = 0
RIGHT = 1
TAIL_NAMES = ("left", "right")

KINDS = ("bivariate", "bivariate-decoupled", "common", "common-symmetric")
BIVARIATE_KINDS = ("bivariate", "bivariate-decoupled")
COMMON_KINDS = ("common", "common-symmetric")

#: Free-parameter counts when thresholds are symmetric training quantiles
#: (so the tail-weight asymmetry of the common kinds is pinned at zero).
DIM_BY_KIND = {
    "bivariate": 16,
    "bivariate-decoupled": 14,
    "common": 13,
    "common-symmetric": 7,
}


def _pair(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size == 1:
        arr = np.repeat(arr, 2)
    if arr.shape != (2,):
        raise ValueError(f"{name} must be a scalar or a (left, right) pair")
    return arr


@dataclass(frozen=True)
class HawkesParams:
    """Parameter vector for one model variant.

    ``mu`` is a (left, right) pair of background intensities for the
    bivariate kinds and a single scalar background for the common kinds.
    ``branching`` is the 2x2 matrix ``G[target, source]`` for the bivariate
    kinds and the 2-vector of per-source-tail ratios for the common kinds.
    The remaining per-tail pairs are the kernel decay rates ``beta``, GPD
    shapes ``xi``, base scales ``varsigma``, intensity-coupling coefficients
    ``eta``, and mark parameters ``alpha``.  ``w`` is the tail-weight
    asymmetry of the common kinds (relative left/right event frequency is
    ``exp(-w)``).
    """

    kind: str
    mu: np.ndarray | float
    branching: np.ndarray
    beta: np.ndarray
    xi: np.ndarray
    varsigma: np.ndarray
    eta: np.ndarray
    alpha: np.ndarray
    w: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        set_ = lambda k, v: object.__setattr__(self, k, v)
        if self.is_common:
            set_("mu", float(self.mu if np.ndim(self.mu) == 0 else np.asarray(self.mu).reshape(-1)[0]))
            branching = np.asarray(self.branching, dtype=float).reshape(-1)
            if branching.shape != (2,):
                raise ValueError("common kinds take a 2-vector branching")
            set_("branching", branching)
            if self.mu <= 0:
                raise ValueError("mu must be positive")
        else:
            mu = _pair(self.mu, "mu")
            branching = np.asarray(self.branching, dtype=float)
            if branching.shape != (2, 2):
                raise ValueError("bivariate kinds take a 2x2 branching matrix")
            set_("mu", mu)
            set_("branching", branching)
            if np.any(mu <= 0):
                raise ValueError("mu must be positive componentwise")
            if self.kind == "bivariate-decoupled" and (branching[0, 1] != 0 or branching[1, 0] != 0):
                raise ValueError("decoupled kind requires zero off-diagonal branching")
        for name in ("beta", "xi", "varsigma", "eta", "alpha"):
            set_(name, _pair(getattr(self, name), name))
        set_("w", float(self.w))

        if np.any(self.beta <= 0):
            raise ValueError("beta must be positive")
        if np.any(self.varsigma <= 0):
            raise ValueError("varsigma must be positive")
        if np.any(self.eta < 0) or np.any(self.alpha < 0) or np.any(self.branching < 0):
            raise ValueError("eta, alpha and branching entries must be non-negative")
        if self.kind == "common-symmetric":
            if self.w != 0.0:
                raise ValueError("common-symmetric requires w = 0")
            for name in ("beta", "xi", "varsigma", "eta", "alpha"):
                v = getattr(self, name)
                if v[0] != v[1]:
                    raise ValueError(f"common-symmetric requires equal {name} components")
            if self.branching[0] != self.branching[1]:
                raise ValueError("common-symmetric requires equal branching components")
        rho = self.branching_ratio()
        if rho >= 1.0:
            raise ValueError(f"supercritical parameters: branching ratio {rho:.4f} >= 1")
        for name in ("beta", "xi", "varsigma", "eta", "alpha", "branching"):
            getattr(self, name).flags.writeable = False
        if not self.is_common:
            self.mu.flags.writeable = False

    @property
    def is_common(self) -> bool:
        return self.kind in COMMON_KINDS

    def branching_ratio(self) -> float:
        """Spectral radius of the branching matrix, or its scalar analogue."""
        return spectral_radius(self.branching, self.w)

    def dim(self) -> int:
        """Free-parameter count under symmetric-threshold construction."""
        return DIM_BY_KIND[self.kind]

    def background_both(self) -> float:
        """Total background intensity of the pooled (both-tails) process."""
        return self.mu if self.is_common else float(self.mu[0] + self.mu[1])

    def to_dict(self) -> dict:
        if self.is_common:
            d = {
                "kind": self.kind,
                "mu": {"both": self.mu},
                "branching": {"left": self.branching[0], "right": self.branching[1]},
                "w": self.w,
            }
        else:
            d = {
                "kind": self.kind,
                "mu": {"left": self.mu[0], "right": self.mu[1]},
                "branching": {
                    "left_left": self.branching[0, 0],
                    "left_right": self.branching[0, 1],
                    "right_left": self.branching[1, 0],
                    "right_right": self.branching[1, 1],
                },
            }
        for name in ("beta", "xi", "varsigma", "eta", "alpha"):
            v = getattr(self, name)
            d[name] = {"left": v[0], "right": v[1]}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HawkesParams":
        kind = d["kind"]
        pairs = {k: (d[k]["left"], d[k]["right"]) for k in ("beta", "xi", "varsigma", "eta", "alpha")}
        if kind in COMMON_KINDS:
            return cls(
                kind=kind,
                mu=d["mu"]["both"],
                branching=(d["branching"]["left"], d["branching"]["right"]),
                w=d.get("w", 0.0),
                **pairs,
            )
        b = d["branching"]
        return cls(
            kind=kind,
            mu=(d["mu"]["left"], d["mu"]["right"]),
            branching=[[b["left_left"], b["left_right"]], [b["right_left"], b["right_right"]]],
            **pairs,
        )


@dataclass(frozen=True)
class IntensityState:
    """Markov excitation state: time and the per-tail excitation pair."""

    t: float
    chi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "chi", _pair(self.chi, "chi"))
        if np.any(self.chi < 0):
            raise ValueError("chi must be non-negative")


@dataclass(frozen=True)
class IntensityPath:
    """Sampled conditional-intensity trajectory.

    ``lam_left``/``lam_right`` are the per-tail intensities (for common
    kinds these are the reporting split ``S(-w) * lam_both`` and
    ``S(+w) * lam_both``); ``lam_both`` is the pooled intensity, which for
    bivariate kinds equals the pointwise sum of the per-tail components.
    Values at event times are left limits.
    """

    times: np.ndarray
    lam_left: np.ndarray
    lam_right: np.ndarray
    lam_both: np.ndarray
    chi: np.ndarray  # shape (2, n)


def impact_kappa(f_value, alpha):
    """Impact multiplier for an event whose excess has conditional CDF value ``f_value``.

    ``kappa = (1 - alpha * ln(1 - f_value)) / (1 + alpha)``; the unmarked
    case ``alpha = 0`` gives 1, and the mean over the mark distribution is 1
    for every ``alpha``.
    """
    f_value = np.asarray(f_value, dtype=float)
    if np.any(f_value < 0) or np.any(f_value >= 1):
        raise ValueError("f_value must lie in [0, 1); F = 1 would require infinite impact")
    if np.any(np.asarray(alpha) < 0):
        raise ValueError("alpha must be non-negative")
    out = (1.0 - alpha * np.log1p(-f_value)) / (1.0 + alpha)
    return float(out) if out.ndim == 0 else out


def _check_sign(m, tail) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if tail == LEFT and np.any(m >= 0):
        raise ValueError("left-tail excesses must be negative")
    if tail == RIGHT and np.any(m <= 0):
        raise ValueError("right-tail excesses must be positive")
    return np.abs(m)


def gpd_cdf(m, tail, xi, sigma):
    """Conditional GPD distribution function of a signed excess magnitude.

    For ``xi != 0``: ``F = 1 - (1 + xi |m| / sigma)^(-1/xi)``; for
    ``xi = 0`` the exponential limit ``1 - exp(-|m| / sigma)``.  The sign of
    ``m`` must match the tail (negative for left, positive for right).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z = _check_sign(m, tail) / sigma
    if xi == 0.0:
        out = -np.expm1(-z)
    else:
        arg = 1.0 + xi * z
        if np.any(arg <= 0):
            raise ValueError("excess magnitude outside GPD support for xi < 0")
        out = -np.expm1(-np.log1p(xi * z) / xi)
    return float(out) if out.ndim == 0 else out


def gpd_pdf(m, tail, xi, sigma):
    """Conditional GPD density of a signed excess magnitude (see ``gpd_cdf``)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z = _check_sign(m, tail) / sigma
    if xi == 0.0:
        out = np.exp(-z) / sigma
    else:
        arg = 1.0 + xi * z
        if np.any(arg <= 0):
            raise ValueError("excess magnitude outside GPD support for xi < 0")
        out = np.exp(-(1.0 / xi + 1.0) * np.log1p(xi * z)) / sigma
    return float(out) if out.ndim == 0 else out


def conditional_scale(lambda_now, mu_background, varsigma, eta):
    """GPD scale conditioned on the current excess intensity.

    ``sigma = varsigma + eta * (lambda_now - mu_background)``; with
    ``eta = 0`` this is the unconditional scale.
    """
    lambda_now = np.asarray(lambda_now, dtype=float)
    if np.any(lambda_now < mu_background):
        raise ValueError("intensity below background signals an intensity-evaluation fault")
    out = varsigma + eta * (lambda_now - mu_background)
    return float(out) if out.ndim == 0 else out


def tail_weight(w):
    """Logistic tail weight ``S(w) = 1 / (1 + exp(-w))``.

    An event of the common process is drawn from the left tail with
    probability ``S(-w)`` and from the right tail with ``S(+w)``, so the
    relative left/right frequency is ``exp(-w)``.
    """
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("w must be finite")
    out = 1.0 / (1.0 + np.exp(-w))
    return float(out) if out.ndim == 0 else out


def mixture_density(m, params: HawkesParams, sigma=None):
    """Two-tailed mark density of the common kinds.

    ``f(m) = S(-w) f_left(m)`` for ``m < 0`` and ``S(+w) f_right(m)`` for
    ``m > 0``, which integrates to one over both tails.  ``sigma`` is the
    (left, right) pair of conditional scales; it defaults to the base
    scales ``varsigma``.
    """
    m = float(m)
    if m == 0.0:
        raise ValueError("mixture density is undefined at m = 0")
    sigma = params.varsigma if sigma is None else _pair(sigma, "sigma")
    tail = LEFT if m < 0 else RIGHT
    weight = tail_weight(-params.w) if tail == LEFT else tail_weight(params.w)
    return weight * gpd_pdf(m, tail, params.xi[tail], sigma[tail])


def spectral_radius(branching, w: float = 0.0) -> float:
    """Branching ratio of the model: spectral radius of the 2x2 matrix.

    For a 2x2 matrix with non-negative entries the eigenvalues are real and
    the radius has the closed form ``(tr + sqrt(tr^2 - 4 det)) / 2``.  A
    2-vector is interpreted as the common-kind branching vector, whose
    scalar analogue is the tail-weighted mean ``S(-w) g_left + S(+w) g_right``.
    """
    b = np.asarray(branching, dtype=float)
    if np.any(b < 0):
        raise ValueError("branching entries must be non-negative")
    if b.shape == (2,):
        return float(tail_weight(-w) * b[0] + tail_weight(w) * b[1])
    if b.shape != (2, 2):
        raise ValueError("branching must be a 2x2 matrix or a 2-vector")
    tr = b[0, 0] + b[1, 1]
    disc = (b[0, 0] - b[1, 1]) ** 2 + 4.0 * b[0, 1] * b[1, 0]
    return float((tr + math.sqrt(disc)) / 2.0)


def _event_arrays(exceedances) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.asarray(exceedances.t, dtype=float)
    tail = np.asarray(exceedances.tail, dtype=np.int8)
    m = np.asarray(exceedances.m, dtype=float)
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("event times must be strictly increasing")
    return t, tail, m


def _kernel_args(params: HawkesParams) -> tuple:
    p = params
    if p.is_common:
        return (p.mu, p.branching[0], p.branching[1], p.beta[0], p.beta[1],
                p.xi[0], p.xi[1], p.varsigma[0], p.varsigma[1],
                p.eta[0], p.eta[1], p.alpha[0], p.alpha[1], p.w)
    g = p.branching
    return (p.mu[0], p.mu[1], g[0, 0], g[0, 1], g[1, 0], g[1, 1],
            p.beta[0], p.beta[1], p.xi[0], p.xi[1], p.varsigma[0], p.varsigma[1],
            p.eta[0], p.eta[1], p.alpha[0], p.alpha[1])


def event_scan(params: HawkesParams, exceedances):
    """Run the Markov recursion over the event history.

    Returns a dict of per-event arrays: pre-event (left-limit) intensities,
    conditional scales, impacts, log mark densities, cumulative compensators
    and post-event excitation states.  This is the single evaluation path
    shared by the likelihood, the residual diagnostics and path sampling.
    """
    t, tail, m = _event_arrays(exceedances)
    if params.is_common:
        res = _kernels.scan_common(t, tail, m, *_kernel_args(params))
        (lam_pre, sigma, kappa, logf, resid, comp, chi_post, status, bad) = res
        if status != 0:
            raise ValueError(_kernels.status_message(status, bad, t))
        return {
            "lam_pre_both": lam_pre,
            "sigma": sigma,
            "kappa": kappa,
            "logf": logf,
            "resid": resid,
            "comp_both": comp,
            "chi_post": chi_post,
        }
    res = _kernels.scan_bivariate(t, tail, m, *_kernel_args(params))
    (lam_pre, sigma, kappa, logf, resid, comp, chi_post, status, bad) = res
    if status != 0:
        raise ValueError(_kernels.status_message(status, bad, t))
    return {
        "lam_pre": lam_pre,          # shape (2, n): both tail intensities at each event
        "sigma": sigma,
        "kappa": kappa,
        "logf": logf,
        "resid": resid,
        "comp": comp,                # shape (2, n): cumulative per-process compensators
        "chi_post": chi_post,
    }


def _chi_at(params: HawkesParams, t_events, chi_post, times) -> np.ndarray:
    """Left-limit excitation at arbitrary times given post-event states."""
    times = np.asarray(times, dtype=float)
    idx = np.searchsorted(t_events, times, side="left")  # events strictly before each time
    chi = np.zeros((2, times.size))
    has = idx > 0
    if np.any(has):
        last = idx[has] - 1
        dt = times[has] - t_events[last]
        for j in (LEFT, RIGHT):
            chi[j, has] = chi_post[j, last] * np.exp(-params.beta[j] * dt)
    return chi


def evolve_intensity(params: HawkesParams, exceedances, times=None) -> IntensityPath:
    """Sample the conditional-intensity path implied by an event history.

    Decay between events is the exact exponential closed form; values at
    event times are the pre-jump (left-limit) intensities.  ``times``
    defaults to the integer grid ``0 .. T-1``.
    """
    t, tail, m = _event_arrays(exceedances)
    if times is None:
        times = np.arange(float(exceedances.T))
    times = np.asarray(times, dtype=float)
    if t.size == 0:
        chi = np.zeros((2, times.size))
    else:
        scan = event_scan(params, exceedances)
        chi = _chi_at(params, t, scan["chi_post"], times)
    if params.is_common:
        lam_both = params.mu + params.branching[0] * chi[0] + params.branching[1] * chi[1]
        lam_left = tail_weight(-params.w) * lam_both
        lam_right = tail_weight(params.w) * lam_both
    else:
        g = params.branching
        lam_left = params.mu[0] + g[0, 0] * chi[0] + g[0, 1] * chi[1]
        lam_right = params.mu[1] + g[1, 0] * chi[0] + g[1, 1] * chi[1]
        lam_both = lam_left + lam_right
    return IntensityPath(times=times, lam_left=lam_left, lam_right=lam_right,
                         lam_both=lam_both, chi=chi)


def compensator_at(params: HawkesParams, exceedances, times, scan=None) -> np.ndarray:
    """Cumulative compensators ``int_0^t lam_i`` at arbitrary times.

    Returns shape (2, n) for bivariate kinds (per-tail processes) and
    shape (1, n) for common kinds (the pooled process).  ``scan`` may carry
    a precomputed :func:`event_scan` result.
    """
    t, tail, m = _event_arrays(exceedances)
    times = np.asarray(times, dtype=float)
    n_proc = 1 if params.is_common else 2
    out = np.zeros((n_proc, times.size))
    if t.size == 0:
        mu = np.array([params.mu]) if params.is_common else params.mu
        for i in range(n_proc):
            out[i] = mu[i] * times
        return out
    if scan is None:
        scan = event_scan(params, exceedances)
    chi_post = scan["chi_post"]
    comp = scan["comp_both"][None, :] if params.is_common else scan["comp"]
    idx = np.searchsorted(t, times, side="left")
    chi = _chi_at(params, t, chi_post, times)
    # integral of chi_j from the last event (or 0) up to each time
    int_chi = np.zeros((2, times.size))
    t_last = np.where(idx > 0, t[np.maximum(idx - 1, 0)], 0.0)
    chi_start = np.zeros((2, times.size))
    has = idx > 0
    for j in (LEFT, RIGHT):
        chi_start[j, has] = chi_post[j, idx[has] - 1]
        int_chi[j] = (chi_start[j] - chi[j]) / params.beta[j]
    comp_last = np.zeros((n_proc, times.size))
    for i in range(n_proc):
        comp_last[i, has] = comp[i, idx[has] - 1]
    dt = times - t_last
    if params.is_common:
        out[0] = comp_last[0] + params.mu * dt + params.branching[0] * int_chi[0] + params.branching[1] * int_chi[1]
    else:
        g = params.branching
        for i in (LEFT, RIGHT):
            out[i] = comp_last[i] + params.mu[i] * dt + g[i, 0] * int_chi[0] + g[i, 1] * int_chi[1]
    return out
