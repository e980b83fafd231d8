"""Per-series selection criteria and the out-of-sample evaluation criterion.

A selection criterion scores every model in the pool using in-sample
information only (information criterion, or a validation split carved out
of the training data). The evaluation criterion scores held-out point
forecasts; mean absolute error throughout. Lower is better for both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import ets
from .corpus import TimeSeries, split
from .errors import NoCandidateModelsError, SeriesTooShortError, UnfittableModelError


@dataclass(frozen=True)
class CriterionValue:
    """Criterion score of one model on one series; NaN marks 'unavailable'."""

    series_id: str
    model_index: int
    value: float

    @property
    def available(self) -> bool:
        return math.isfinite(self.value)


def evaluation_mae(test: Sequence[float], point: Sequence[float]) -> float:
    """Mean absolute error between actuals and point forecasts."""
    test = np.asarray(test, dtype=np.float64)
    point = np.asarray(point, dtype=np.float64)
    if test.shape != point.shape or test.ndim != 1 or test.size < 1:
        raise ValueError("test and point forecasts must be equal-length, non-empty")
    return float(np.mean(np.abs(test - point)))


def fit_or_none(spec: ets.EtsSpec, train: TimeSeries) -> ets.EtsFit | None:
    try:
        return ets.fit(spec, train)
    except UnfittableModelError:
        return None


def selection_bic(train: TimeSeries, pool: Sequence[ets.EtsSpec],
                  fits: Sequence[ets.EtsFit | None] | None = None) -> list[CriterionValue]:
    """BIC of each pool model fitted on the training data.

    Models that cannot be fitted are returned as unavailable. Pre-computed
    fits (aligned with the pool, None for failures) are reused when given.
    """
    if fits is None:
        fits = [fit_or_none(spec, train) for spec in pool]
    out = [
        CriterionValue(train.id, k, ets.bic(f) if f is not None else math.nan)
        for k, f in enumerate(fits)
    ]
    if not any(v.available for v in out):
        raise NoCandidateModelsError(f"no candidate models for series {train.id!r}")
    return out


def selection_validation(train: TimeSeries, pool: Sequence[ets.EtsSpec],
                         h: int) -> list[CriterionValue]:
    """Hold-out validation score of each pool model.

    Each model is fitted on all but the last h training observations and
    scored by the MAE of its forecasts over those h observations.
    """
    try:
        inner = split(train, h)
    except SeriesTooShortError:
        raise NoCandidateModelsError(
            f"series {train.id!r} too short for validation selection") from None
    values: list[CriterionValue] = []
    for k, spec in enumerate(pool):
        f = fit_or_none(spec, inner.train)
        if f is None:
            values.append(CriterionValue(train.id, k, math.nan))
        else:
            point = ets.point_forecast(f, h)
            values.append(CriterionValue(train.id, k, evaluation_mae(inner.test, point)))
    if not any(v.available for v in values):
        raise NoCandidateModelsError(f"no candidate models for series {train.id!r}")
    return values


class EtsScorer:
    """Selection and evaluation scores of an ETS pool, one series at a time.

    For a series of length T, the last h observations are the test part.
    The evaluation score of model k is the MAE of its point forecasts from
    a fit on the first T-h observations. The selection score is either the
    BIC of that same fit or the validation MAE from a further internal
    split. Unavailable models are NaN in both vectors.
    """

    def __init__(self, pool: Sequence[ets.EtsSpec], criterion: str, h: int):
        if criterion not in ("bic", "validation"):
            raise ValueError(f"unknown selection criterion {criterion!r}")
        if h < 1:
            raise ValueError("horizon must be positive")
        self.pool = list(pool)
        self.criterion = criterion
        self.h = h
        self.model_names = tuple(spec.acronym for spec in self.pool)

    def scores(self, series: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
        """Return (selection values, evaluation values); all-NaN if unusable."""
        k = len(self.pool)
        nan = np.full(k, np.nan)
        try:
            parts = split(series, self.h)
        except SeriesTooShortError:
            return nan, nan.copy()
        fits = [fit_or_none(spec, parts.train) for spec in self.pool]
        evals = np.array([
            evaluation_mae(parts.test, ets.point_forecast(f, self.h)) if f is not None else np.nan
            for f in fits
        ])
        try:
            if self.criterion == "bic":
                sel_values = selection_bic(parts.train, self.pool, fits=fits)
            else:
                sel_values = selection_validation(parts.train, self.pool, self.h)
        except NoCandidateModelsError:
            return nan, nan.copy()
        sels = np.array([v.value for v in sel_values])
        return sels, evals
