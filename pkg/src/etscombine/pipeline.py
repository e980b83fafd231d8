"""One-pass scheme computation for a target series.

Fits every pool model once, forecasts, applies the interval-outlier
exclusion, computes each scheme's weight vector from the criterion values
and (where needed) the reference table, and emits the combined forecasts
for all requested schemes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import combine, criteria, ets
from .baserate import ContingencyTable
from .corpus import TimeSeries
from .errors import DegenerateTableError, NoCandidateModelsError

logger = logging.getLogger(__name__)

DEFAULT_SEED = 1729
DEFAULT_NUM_PATHS = 5000
DEFAULT_HORIZONS = {"yearly": 6, "quarterly": 8, "monthly": 12}


def default_horizon(frequency: str) -> int:
    return DEFAULT_HORIZONS[str(frequency)]


@dataclass(frozen=True)
class ForecastConfig:
    """Everything the per-series pass needs besides the series itself."""

    pool: tuple[ets.EtsSpec, ...]
    horizon: int
    criterion: str = "bic"
    schemes: tuple[str, ...] = combine.SCHEMES
    table: ContingencyTable | None = None
    level: float = 0.95
    num_paths: int = DEFAULT_NUM_PATHS
    seed: int = DEFAULT_SEED
    iqr_multiplier: float = 1.5
    exclude_outliers: bool = True
    simulate_intervals: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "pool", tuple(self.pool))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.criterion not in ("bic", "validation"):
            raise ValueError(f"unknown selection criterion {self.criterion!r}")
        unknown = set(self.schemes) - set(combine.SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")
        needs_table = set(self.schemes) & set(combine.TABLE_SCHEMES)
        if needs_table and self.table is None:
            raise ValueError(f"table required for schemes {sorted(needs_table)}")
        if self.table is not None:
            expected = tuple(spec.acronym for spec in self.pool)
            if self.table.models != expected:
                raise ValueError(
                    f"pool mismatch: table has {list(self.table.models)}, pool is {list(expected)}")

    @property
    def model_names(self) -> tuple[str, ...]:
        return tuple(spec.acronym for spec in self.pool)


@dataclass(frozen=True)
class SeriesForecasts:
    """Combined forecasts of every requested scheme for one series."""

    series_id: str
    schemes: dict[str, ets.ForecastResult]
    model_forecasts: dict[str, ets.ForecastResult] = field(repr=False)
    selections: dict[str, str]
    fallbacks: tuple[str, ...] = ()


def _selection_values(series: TimeSeries, cfg: ForecastConfig,
                      fits: Sequence[ets.EtsFit | None]) -> np.ndarray:
    if cfg.criterion == "bic":
        values = criteria.selection_bic(series, cfg.pool, fits=fits)
    else:
        values = criteria.selection_validation(series, cfg.pool, cfg.horizon)
    return np.array([v.value for v in values])


def forecast_series(series: TimeSeries, cfg: ForecastConfig,
                    series_index: int = 0) -> SeriesForecasts:
    """Run the full per-series pass; raises NoCandidateModelsError when
    nothing in the pool is usable for this series."""
    k = len(cfg.pool)
    fits = [criteria.fit_or_none(spec, series) for spec in cfg.pool]
    if not any(f is not None for f in fits):
        raise NoCandidateModelsError(f"no candidate models for series {series.id!r}")

    results: list[ets.ForecastResult | None] = []
    for idx, f in enumerate(fits):
        if f is None:
            results.append(None)
            continue
        if cfg.simulate_intervals:
            seed = (cfg.seed, series_index, idx)
            results.append(ets.forecast(f, cfg.horizon, level=cfg.level,
                                        num_paths=cfg.num_paths, seed=seed))
        else:
            point = ets.point_forecast(f, cfg.horizon)
            results.append(ets.ForecastResult(point=point, lower=point.copy(),
                                              upper=point.copy(), level=cfg.level))

    s_values = _selection_values(series, cfg, fits)
    available = np.array([f is not None for f in fits]) & np.isfinite(s_values)
    if cfg.exclude_outliers and cfg.simulate_intervals:
        available = combine.exclude_outlier_models(results, available, cfg.iqr_multiplier)
    if not available.any():
        raise NoCandidateModelsError(f"no candidate models for series {series.id!r}")
    s_masked = np.where(available, s_values, np.nan)

    weight_cache: dict[str, combine.WeightVector] = {}
    fallbacks: list[str] = []

    def weights_for(base: str) -> combine.WeightVector:
        if base in weight_cache:
            return weight_cache[base]
        if base == "criterion":
            wv = combine.criterion_weights(s_masked)
        elif base == "eqw":
            wv = combine.equal_weights(k, available)
        elif base == "aggregate":
            wv = combine.aggregate_weights(cfg.table, available)
        else:
            i_star = weights_for("criterion").selected_index
            try:
                if base == "precision":
                    wv = combine.precision_weights(cfg.table, i_star, available)
                else:
                    wv = combine.sensitivity_weights(cfg.table, i_star, available)
            except DegenerateTableError:
                logger.info("series %s: %s weights degenerate, using criterion weights",
                            series.id, base)
                fallbacks.append(base)
                wv = weights_for("criterion")
        weight_cache[base] = wv
        return wv

    scheme_results: dict[str, ets.ForecastResult] = {}
    selections: dict[str, str] = {}
    for scheme in cfg.schemes:
        base, mode = scheme.rsplit("-", 1)
        wv = weights_for(base)
        scheme_results[scheme] = combine.combine_forecasts(results, wv, mode)
        if mode == "select":
            selections[scheme] = cfg.model_names[wv.selected_index]

    model_forecasts = {
        cfg.model_names[idx]: res
        for idx, res in enumerate(results)
        if res is not None and available[idx]
    }
    return SeriesForecasts(
        series_id=series.id,
        schemes=scheme_results,
        model_forecasts=model_forecasts,
        selections=selections,
        fallbacks=tuple(fallbacks),
    )
