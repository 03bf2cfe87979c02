"""Two-tailed peaks-over-threshold Hawkes models for clustered extreme events.

The package extracts left- and right-tail threshold exceedances from a
univariate series, fits self-exciting (Hawkes) arrival models to them by
maximum likelihood, and provides residual-time diagnostics, information
criteria, path simulation, and a GJR-GARCH volatility baseline for control
experiments.  A FastAPI service wraps the library; the CLI is a thin client
of the same service layer.
"""

from tailhawkes.core import (
    LEFT,
    RIGHT,
    KINDS,
    HawkesParams,
    IntensityPath,
    IntensityState,
    conditional_scale,
    evolve_intensity,
    gpd_cdf,
    gpd_pdf,
    impact_kappa,
    mixture_density,
    spectral_radius,
    tail_weight,
)
from tailhawkes.ingest import (
    ExceedanceSeries,
    ReturnSeries,
    extract_exceedances,
    load_series,
    select_thresholds,
)
from tailhawkes.fit import FitOptions, FitResult, fit_ml, log_likelihood, standard_errors
from tailhawkes.diag import (
    ResidualSeries,
    TestReport,
    acf,
    aic,
    bic,
    ks_test,
    lr_test,
    normal_transform,
    residual_magnitudes,
    residual_time,
    rolling_acf1,
    split_interarrivals,
)
from tailhawkes.sim import SimConfig, simulate_garch, simulate_hawkes
from tailhawkes.garch import (
    GarchFit,
    GarchParams,
    ResidualHawkesResult,
    garch_filter,
    garch_fit,
    hawkes_on_residuals,
)

__version__ = "0.1.0"
