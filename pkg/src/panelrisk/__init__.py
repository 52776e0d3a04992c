"""Panel econometrics for country-risk data.

Fixed/random-effects and cross-section SUR estimation, panel unit-root
tests, residual diagnostics, risk analytics and a seeded Monte Carlo
engine for null distributions.
"""

from .descriptive import pearson_corr_matrix, rank_entities, std_dev, subperiod_compare, volatility
from .diagnostics import (
    cross_section_dependence,
    durbin_watson,
    hausman,
    jarque_bera,
    klein_criterion,
    redundant_fe_lr,
    white_paper_variant,
)
from .errors import DataError, NumericalError, PanelRiskError, ValidationError
from .estimation import (
    Effects,
    FitResult,
    ModelSpec,
    Weighting,
    egls_cross_section_sur,
    fit,
    fixed_effects,
    pooled_ols,
    random_effects,
)
from .outcome import TestOutcome
from .panel import PanelDataset, balance, lag, load_csv, pct_change, write_csv
from .pipeline import PipelineConfig, risk_report, run_pipeline
from .simulation import DGPSpec, generate_panel, simulate_critical_values, size_power
from .unitroot import DeterministicSpec, adf_test, panel_unit_root, pp_test, summary_battery

__version__ = "0.1.0"
