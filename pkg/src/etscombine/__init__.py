"""Exponential-smoothing selection and combination toolkit.

Builds selected-vs-best contingency tables over a reference corpus and
uses them to weight or pick exponential-smoothing forecasts for new
series; ships the model family, criteria, metrics and a CLI.
"""

from .baserate import ContingencyTable, build_table, load_table, save_table, table_from_matrix
from .combine import (
    SCHEMES,
    WeightVector,
    aggregate_weights,
    combine_forecasts,
    criterion_weights,
    equal_weights,
    exclude_outlier_models,
    precision_weights,
    sensitivity_weights,
)
from .corpus import Frequency, SplitSeries, TimeSeries, filter_fittable, load_corpus, split
from .criteria import CriterionValue, EtsScorer, evaluation_mae, selection_bic, selection_validation
from .ets import (
    EtsFit,
    EtsSpec,
    ForecastResult,
    aic,
    aicc,
    bic,
    filter_states,
    fit,
    forecast,
    min_fit_length,
    model_pool,
    point_forecast,
)
from .metrics import (
    FriedmanNemenyiResult,
    ModelDiagnostics,
    ScoreRow,
    ThirdsFrequencies,
    friedman_nemenyi,
    mae_rank_matrix,
    mase,
    model_diagnostics,
    msis,
    rank_thirds,
    seasonal_naive_scale,
)
from .pipeline import ForecastConfig, SeriesForecasts, default_horizon, forecast_series

__version__ = "0.1.0"

__all__ = [
    "ContingencyTable", "build_table", "load_table", "save_table", "table_from_matrix",
    "SCHEMES", "WeightVector", "aggregate_weights", "combine_forecasts",
    "criterion_weights", "equal_weights", "exclude_outlier_models",
    "precision_weights", "sensitivity_weights",
    "Frequency", "SplitSeries", "TimeSeries", "filter_fittable", "load_corpus", "split",
    "CriterionValue", "EtsScorer", "evaluation_mae", "selection_bic", "selection_validation",
    "EtsFit", "EtsSpec", "ForecastResult", "aic", "aicc", "bic", "filter_states",
    "fit", "forecast", "min_fit_length", "model_pool", "point_forecast",
    "FriedmanNemenyiResult", "ModelDiagnostics", "ScoreRow", "ThirdsFrequencies",
    "friedman_nemenyi", "mae_rank_matrix", "mase", "model_diagnostics", "msis",
    "rank_thirds", "seasonal_naive_scale",
    "ForecastConfig", "SeriesForecasts", "default_horizon", "forecast_series",
    "__version__",
]
