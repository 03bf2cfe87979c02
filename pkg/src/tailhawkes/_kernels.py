"""Compiled inner loops for the intensity recursion and path simulation.

The Markov recursion over an event history is inherently sequential because
each event's impact depends on the pre-event intensity through the
conditional GPD scale, so these loops are jitted rather than vectorised.
All kernels take plain float/int arrays and return arrays plus a status
code: 0 ok, 1 GPD support violation, 2 tail/sign mismatch.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


def status_message(status: int, bad: int, t: np.ndarray) -> str:
    where = f"event {bad} (t = {t[bad]:g})" if 0 <= bad < t.size else "event history"
    if status == 1:
        return f"excess magnitude outside GPD support at {where}"
    if status == 2:
        return f"excess magnitude sign inconsistent with tail at {where}"
    return f"intensity evaluation failed at {where}"


@njit(cache=True)
def _mark_terms(absm, sigma, xi, alpha):
    """Log GPD density, exponential residual and impact for one event.

    Returns (logf, resid, kappa, ok); ``resid`` is the unit-exponential
    residual of the excess magnitude, which also drives the impact:
    ``kappa = (1 + alpha * resid) / (1 + alpha)``.
    """
    z = absm / sigma
    if xi == 0.0:
        resid = z
        logf = -math.log(sigma) - z
    else:
        arg = 1.0 + xi * z
        if arg <= 0.0:
            return 0.0, 0.0, 0.0, False
        resid = math.log1p(xi * z) / xi
        logf = -math.log(sigma) - (1.0 / xi + 1.0) * math.log1p(xi * z)
    kappa = (1.0 + alpha * resid) / (1.0 + alpha)
    return logf, resid, kappa, True


@njit(cache=True)
def scan_common(t, tail, m, mu, g0, g1, b0, b1, xi0, xi1, vs0, vs1,
                eta0, eta1, a0, a1, w):
    n = t.shape[0]
    lam_pre = np.empty(n)
    sigma = np.empty(n)
    kappa = np.empty(n)
    logf = np.empty(n)
    resid = np.empty(n)
    comp = np.empty(n)
    chi_post = np.empty((2, n))
    chi0 = 0.0
    chi1 = 0.0
    t_prev = 0.0
    acc = 0.0
    for k in range(n):
        dt = t[k] - t_prev
        d0 = math.exp(-b0 * dt)
        d1 = math.exp(-b1 * dt)
        acc += mu * dt + g0 * chi0 * (-math.expm1(-b0 * dt)) / b0 \
                       + g1 * chi1 * (-math.expm1(-b1 * dt)) / b1
        chi0 *= d0
        chi1 *= d1
        lam = mu + g0 * chi0 + g1 * chi1
        lam_pre[k] = lam
        comp[k] = acc
        if tail[k] == 0:
            if m[k] >= 0.0:
                return lam_pre, sigma, kappa, logf, resid, comp, chi_post, 2, k
            sig = vs0 + eta0 * (lam - mu)
            lf, rs, kp, ok = _mark_terms(-m[k], sig, xi0, a0)
            if not ok:
                return lam_pre, sigma, kappa, logf, resid, comp, chi_post, 1, k
            chi0 += b0 * kp
        else:
            if m[k] <= 0.0:
                return lam_pre, sigma, kappa, logf, resid, comp, chi_post, 2, k
            sig = vs1 + eta1 * (lam - mu)
            lf, rs, kp, ok = _mark_terms(m[k], sig, xi1, a1)
            if not ok:
                return lam_pre, sigma, kappa, logf, resid, comp, chi_post, 1, k
            chi1 += b1 * kp
        sigma[k] = sig
        kappa[k] = kp
        logf[k] = lf
        resid[k] = rs
        chi_post[0, k] = chi0
        chi_post[1, k] = chi1
        t_prev = t[k]
    return lam_pre, sigma, kappa, logf, resid, comp, chi_post, 0, -1


@njit(cache=True)
def scan_bivariate(t, tail, m, mu0, mu1, g00, g01, g10, g11, b0, b1,
                   xi0, xi1, vs0, vs1, eta0, eta1, a0, a1):
    n = t.shape[0]
    lam_pre = np.empty((2, n))
    sigma = np.empty(n)
    kappa = np.empty(n)
    logf = np.empty(n)
    resid = np.empty(n)
    comp = np.empty((2, n))
    chi_post = np.empty((2, n))
    chi0 = 0.0
    chi1 = 0.0
    t_prev = 0.0
    acc0 = 0.0
    acc1 = 0.0
    for k in range(n):
        dt = t[k] - t_prev
        i0 = chi0 * (-math.expm1(-b0 * dt)) / b0
        i1 = chi1 * (-math.expm1(-b1 * dt)) / b1
        acc0 += mu0 * dt + g00 * i0 + g01 * i1
        acc1 += mu1 * dt + g10 * i0 + g11 * i1
        chi0 *= math.exp(-b0 * dt)
        chi1 *= math.exp(-b1 * dt)
        lam0 = mu0 + g00 * chi0 + g01 * chi1
        lam1 = mu1 + g10 * chi0 + g11 * chi1
        lam_pre[0, k] = lam0
        lam_pre[1, k] = lam1
        comp[0, k] = acc0
        comp[1, k] = acc1
        if tail[k] == 0:
            if m[k] >= 0.0:
                return lam_pre, sigma, kappa, logf, resid, comp, chi_post, 2, k
            sig = vs0 + eta0 * (lam0 - mu0)
            lf, rs, kp, ok = _mark_terms(-m[k], sig, xi0, a0)
            if not ok:
                return lam_pre, sigma, kappa, logf, resid, comp, chi_post, 1, k
            chi0 += b0 * kp
        else:
            if m[k] <= 0.0:
                return lam_pre, sigma, kappa, logf, resid, comp, chi_post, 2, k
            sig = vs1 + eta1 * (lam1 - mu1)
            lf, rs, kp, ok = _mark_terms(m[k], sig, xi1, a1)
            if not ok:
                return lam_pre, sigma, kappa, logf, resid, comp, chi_post, 1, k
            chi1 += b1 * kp
        sigma[k] = sig
        kappa[k] = kp
        logf[k] = lf
        resid[k] = rs
        chi_post[0, k] = chi0
        chi_post[1, k] = chi1
        t_prev = t[k]
    return lam_pre, sigma, kappa, logf, resid, comp, chi_post, 0, -1


@njit(cache=True)
def _gpd_draw(u, sigma, xi):
    if xi == 0.0:
        return -sigma * math.log1p(-u)
    return sigma * math.expm1(-xi * math.log1p(-u)) / xi


@njit(cache=True)
def simulate_common(n_steps, mu, g0, g1, b0, b1, xi0, xi1, vs0, vs1,
                    eta0, eta1, a0, a1, w, u_event, u_tail, u_mag):
    """Step the common-intensity model over ``n_steps`` unit intervals.

    At most one event per step: the event probability over step ``s`` is
    ``1 - exp(-integral of lam over (s-1, s])`` and the event, when drawn,
    arrives at the integer time ``s`` with magnitude scaled by the
    pre-event (left-limit) intensity.
    """
    s_left = 1.0 / (1.0 + math.exp(w))
    t_out = np.empty(n_steps, dtype=np.int64)
    tail_out = np.empty(n_steps, dtype=np.int8)
    m_out = np.empty(n_steps)
    chi0 = 0.0
    chi1 = 0.0
    n = 0
    for s in range(n_steps):
        big_l = mu + g0 * chi0 * (-math.expm1(-b0)) / b0 \
                   + g1 * chi1 * (-math.expm1(-b1)) / b1
        chi0 *= math.exp(-b0)
        chi1 *= math.exp(-b1)
        if u_event[s] < -math.expm1(-big_l):
            lam = mu + g0 * chi0 + g1 * chi1
            if u_tail[s] < s_left:
                sig = vs0 + eta0 * (lam - mu)
                absm = _gpd_draw(u_mag[s], sig, xi0)
                kp = (1.0 - a0 * math.log1p(-u_mag[s])) / (1.0 + a0)
                chi0 += b0 * kp
                t_out[n] = s
                tail_out[n] = 0
                m_out[n] = -absm
            else:
                sig = vs1 + eta1 * (lam - mu)
                absm = _gpd_draw(u_mag[s], sig, xi1)
                kp = (1.0 - a1 * math.log1p(-u_mag[s])) / (1.0 + a1)
                chi1 += b1 * kp
                t_out[n] = s
                tail_out[n] = 1
                m_out[n] = absm
            n += 1
    return t_out[:n], tail_out[:n], m_out[:n]


@njit(cache=True)
def simulate_bivariate(n_steps, mu0, mu1, g00, g01, g10, g11, b0, b1,
                       xi0, xi1, vs0, vs1, eta0, eta1, a0, a1,
                       u_event, u_tail, u_mag):
    """Step the bivariate model with at most one event per step.

    When both tails would fire within a step, a single event is kept and
    the tail is drawn proportionally to the per-tail step integrals (an
    O(lam * dt) approximation).
    """
    t_out = np.empty(n_steps, dtype=np.int64)
    tail_out = np.empty(n_steps, dtype=np.int8)
    m_out = np.empty(n_steps)
    chi0 = 0.0
    chi1 = 0.0
    n = 0
    for s in range(n_steps):
        i0 = chi0 * (-math.expm1(-b0)) / b0
        i1 = chi1 * (-math.expm1(-b1)) / b1
        big_l0 = mu0 + g00 * i0 + g01 * i1
        big_l1 = mu1 + g10 * i0 + g11 * i1
        chi0 *= math.exp(-b0)
        chi1 *= math.exp(-b1)
        if u_event[s] < -math.expm1(-(big_l0 + big_l1)):
            lam0 = mu0 + g00 * chi0 + g01 * chi1
            lam1 = mu1 + g10 * chi0 + g11 * chi1
            if u_tail[s] < big_l0 / (big_l0 + big_l1):
                sig = vs0 + eta0 * (lam0 - mu0)
                absm = _gpd_draw(u_mag[s], sig, xi0)
                kp = (1.0 - a0 * math.log1p(-u_mag[s])) / (1.0 + a0)
                chi0 += b0 * kp
                t_out[n] = s
                tail_out[n] = 0
                m_out[n] = -absm
            else:
                sig = vs1 + eta1 * (lam1 - mu1)
                absm = _gpd_draw(u_mag[s], sig, xi1)
                kp = (1.0 - a1 * math.log1p(-u_mag[s])) / (1.0 + a1)
                chi1 += b1 * kp
                t_out[n] = s
                tail_out[n] = 1
                m_out[n] = absm
            n += 1
    return t_out[:n], tail_out[:n], m_out[:n]


@njit(cache=True)
def garch_sigma2(x, mu, omega, alpha1, gamma1, beta1, s2_init):
    """Variance recursion of the GJR-GARCH(1, o, 1) model.

    The leverage indicator is 1 when the previous innovation is strictly
    negative (zero innovations take the non-leverage branch).
    """
    n = x.shape[0]
    s2 = np.empty(n)
    s2[0] = s2_init
    for i in range(1, n):
        a = x[i - 1] - mu
        lev = gamma1 * a * a if a < 0.0 else 0.0
        s2[i] = omega + alpha1 * a * a + lev + beta1 * s2[i - 1]
    return s2
