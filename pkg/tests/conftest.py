"""Shared fixtures: canonical parameter sets, simulated series, data paths."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from tailhawkes import HawkesParams, simulate_hawkes
from tailhawkes.garch import GarchParams
from tailhawkes.sim import SimConfig

FIXTURES = Path(__file__).parent / "fixtures"

# Published S&P 500 estimates for the common-intensity and bivariate variants;
# used as realistic generating parameters and as reproduction targets.
COMMON_SP = dict(mu=0.0077, branching=(1.2, 0.54), beta=(0.076, 0.016),
                 xi=(0.22, -0.032), varsigma=(0.0037, 0.0034),
                 eta=(0.032, 0.053), alpha=(0.36, 1.5))
COMMON_SP_SE = dict(mu=0.0014, gamma_left=0.1, gamma_right=0.10,
                    beta_left=0.010, beta_right=0.004, xi_left=0.06, xi_right=0.061,
                    varsigma_left=0.0005, varsigma_right=0.0006,
                    eta_left=0.009, eta_right=0.008, alpha_left=0.19, alpha_right=2.4)
BIVARIATE_SP = dict(mu=(0.0049, 0.0031), branching=[[0.58, 0.22], [0.60, 0.28]],
                    beta=(0.074, 0.017), xi=(0.22, -0.031),
                    varsigma=(0.0038, 0.0034), eta=(0.032, 0.052), alpha=(0.36, 2.2))


@pytest.fixture(scope="session")
def common_params() -> HawkesParams:
    return HawkesParams(kind="common", **COMMON_SP)


@pytest.fixture(scope="session")
def bivariate_params() -> HawkesParams:
    return HawkesParams(kind="bivariate", **BIVARIATE_SP)


@pytest.fixture(scope="session")
def low_rate_common() -> HawkesParams:
    return HawkesParams(kind="common", mu=0.004, branching=(0.6, 0.3),
                        beta=(0.08, 0.03), xi=(0.15, -0.05),
                        varsigma=(0.004, 0.004), eta=(0.02, 0.03), alpha=(0.5, 0.5))


@pytest.fixture(scope="session")
def low_rate_bivariate() -> HawkesParams:
    return HawkesParams(kind="bivariate", mu=(0.003, 0.003),
                        branching=[[0.45, 0.15], [0.2, 0.35]], beta=(0.07, 0.025),
                        xi=(0.2, -0.05), varsigma=(0.004, 0.004), eta=(0.02, 0.03),
                        alpha=(0.4, 0.8))


@pytest.fixture(scope="session")
def sim_common(common_params):
    """One realistic simulated history, shared by the fitting tests."""
    return simulate_hawkes(common_params, SimConfig(T=12311, seed=42),
                           thresholds=(-0.0184, 0.0187))


@pytest.fixture(scope="session")
def garch_normal() -> GarchParams:
    return GarchParams(mu=4.5e-4, omega=6.1e-5, alpha1=0.08, beta1=0.82, dist="normal")


@pytest.fixture(scope="session")
def garch_gjr_t() -> GarchParams:
    return GarchParams(mu=3.7e-4, omega=5.5e-5, alpha1=0.027, beta1=0.93,
                       gamma1=0.082, dist="student-t", nu=8.0)


def random_exceedances(rng: np.random.Generator, n_events: int, T: int,
                       m_scale: float = 0.004):
    """Arbitrary (non-model) event fixture for evaluation-path tests."""
    from tailhawkes.ingest import ExceedanceSeries

    t = np.sort(rng.choice(np.arange(T), size=n_events, replace=False)).astype(np.int64)
    tail = rng.integers(0, 2, size=n_events).astype(np.int8)
    m = np.where(tail == 0, -1.0, 1.0) * rng.exponential(m_scale, size=n_events)
    return ExceedanceSeries(u_left=-0.0184, u_right=0.0187, t=t, tail=tail, m=m,
                            T=T, train_end=T)


def sp500_path() -> Path | None:
    env = os.environ.get("TAILHAWKES_SP500")
    candidates = [Path(env)] if env else []
    candidates += [FIXTURES / "sp500.csv"]
    for path in candidates:
        if path.exists():
            return path
    return None


@pytest.fixture(scope="session")
def sp500_file():
    path = sp500_path()
    if path is None:
        pytest.skip("S&P 500 daily close fixture not bundled "
                    "(place it at tests/fixtures/sp500.csv or set TAILHAWKES_SP500)")
    return path
