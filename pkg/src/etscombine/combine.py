"""Combination weights and forecast pooling.

Three weighting schemes use the per-series criterion values and, for two
of them, a reference contingency table: criterion weights exp(-S/2),
precision weights (the selected model's table row, i.e. how often each
model is best when this one is selected), and sensitivity weights (that
row divided by the column totals). Two benchmark schemes: equal weights
and the global best-model one-hot. Each weight vector can drive either
selection (argmax) or averaging.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .baserate import ContingencyTable
from .errors import DegenerateTableError, NoCandidateModelsError
from .ets import ForecastResult

SCHEMES = (
    "criterion-select", "criterion-average",
    "precision-select", "precision-average",
    "sensitivity-select", "sensitivity-average",
    "aggregate-select", "eqw-average",
)
TABLE_SCHEMES = ("precision-select", "precision-average",
                 "sensitivity-select", "sensitivity-average", "aggregate-select")


@dataclass(frozen=True)
class WeightVector:
    """Normalised per-model weights for one scheme.

    selected_index is the argmax of the weights (ties to the lowest
    index) and is what select-mode combination uses.
    """

    scheme: str
    weights: np.ndarray = field(repr=False)
    selected_index: int

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(weights < 0.0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)


def _normalize(scheme: str, raw: np.ndarray) -> WeightVector:
    weights = raw / raw.sum()
    return WeightVector(scheme=scheme, weights=weights, selected_index=int(np.argmax(weights)))


def _availability(k: int, available: Sequence[bool] | None) -> np.ndarray:
    if available is None:
        return np.ones(k, dtype=bool)
    mask = np.asarray(available, dtype=bool)
    if mask.shape != (k,):
        raise ValueError(f"availability mask must have length {k}")
    return mask


def criterion_weights(s_values: Sequence[float]) -> WeightVector:
    """Weights proportional to exp(-S/2); NaN values get weight zero.

    Computed with the minimum subtracted inside the exponent, which
    leaves the normalised weights unchanged but avoids overflow.
    """
    s = np.asarray(s_values, dtype=np.float64)
    available = np.isfinite(s)
    if not available.any():
        raise NoCandidateModelsError("no candidate models: all criterion values unavailable")
    shift = s[available].min()
    raw = np.zeros(s.size)
    raw[available] = np.exp(-(s[available] - shift) / 2.0)
    weights = raw / raw.sum()
    selected = int(np.argmin(np.where(available, s, np.inf)))
    return WeightVector(scheme="criterion", weights=weights, selected_index=selected)


def precision_weights(table: ContingencyTable, selected_index: int,
                      available: Sequence[bool] | None = None) -> WeightVector:
    """Row selected_index of the table, normalised: p(best = k | selected).

    Raises DegenerateTableError when the row carries no mass over the
    available models (callers fall back to criterion weights).
    """
    mask = _availability(table.k, available)
    raw = table.matrix[selected_index].copy()
    raw[~mask] = 0.0
    if raw.sum() <= 0.0:
        raise DegenerateTableError(
            f"model {table.models[selected_index]} was never selected in the reference corpus")
    return _normalize("precision", raw)


def sensitivity_weights(table: ContingencyTable, selected_index: int,
                        available: Sequence[bool] | None = None) -> WeightVector:
    """Selected row divided by column totals, normalised: p(selected | best = k).

    Columns with zero total contribute weight zero. Raises
    DegenerateTableError when nothing contributes.
    """
    mask = _availability(table.k, available)
    row = table.matrix[selected_index]
    col_totals = table.matrix.sum(axis=0)
    raw = np.divide(row, col_totals, out=np.zeros(table.k), where=col_totals > 0.0)
    raw[~mask] = 0.0
    if raw.sum() <= 0.0:
        raise DegenerateTableError(
            f"no sensitivity mass for selected model {table.models[selected_index]}")
    return _normalize("sensitivity", raw)


def aggregate_weights(table: ContingencyTable,
                      available: Sequence[bool] | None = None) -> WeightVector:
    """One-hot on the model most often best out of sample (column totals)."""
    mask = _availability(table.k, available)
    if not mask.any():
        raise NoCandidateModelsError("no candidate models available")
    totals = np.where(mask, table.matrix.sum(axis=0), -np.inf)
    best = int(np.argmax(totals))
    weights = np.zeros(table.k)
    weights[best] = 1.0
    return WeightVector(scheme="aggregate", weights=weights, selected_index=best)


def equal_weights(k: int, available: Sequence[bool] | None = None) -> WeightVector:
    """Uniform weights over the available models."""
    mask = _availability(k, available)
    if not mask.any():
        raise NoCandidateModelsError("no candidate models available")
    weights = np.where(mask, 1.0 / mask.sum(), 0.0)
    return WeightVector(scheme="equal", weights=weights,
                        selected_index=int(np.argmax(weights)))


def combine_forecasts(results: Sequence[ForecastResult | None], weights: WeightVector,
                      mode: str) -> ForecastResult:
    """Select one model's forecasts or average them with the given weights.

    Averaging takes element-wise weighted means of the points and of both
    interval bounds. Missing results are allowed only at zero weight.
    """
    if mode not in ("select", "average"):
        raise ValueError(f"mode must be 'select' or 'average', got {mode!r}")
    w = weights.weights
    if len(results) != w.size:
        raise ValueError(f"got {len(results)} forecasts for {w.size} weights")
    for k, res in enumerate(results):
        if res is None and w[k] != 0.0:
            raise ValueError(f"model index {k} has weight {w[k]} but no forecast")
    present = [r for r in results if r is not None]
    if not present:
        raise ValueError("no forecasts to combine")
    h = present[0].horizon
    level = present[0].level
    if any(r.horizon != h or r.level != level for r in present):
        raise ValueError("forecasts must share horizon and interval level")

    if mode == "select":
        chosen = results[weights.selected_index]
        if chosen is None:
            raise ValueError("selected model has no forecast")
        return chosen

    point = np.zeros(h)
    lower = np.zeros(h)
    upper = np.zeros(h)
    for k, res in enumerate(results):
        if res is None or w[k] == 0.0:
            continue
        point += w[k] * res.point
        lower += w[k] * res.lower
        upper += w[k] * res.upper
    return ForecastResult(point=point, lower=lower, upper=upper, level=level)


def exclude_outlier_models(results: Sequence[ForecastResult | None],
                           available: Sequence[bool],
                           iqr_multiplier: float = 1.5) -> np.ndarray:
    """Drop models whose furthest-horizon interval bound is an IQR outlier.

    Fences are quartiles +/- multiplier * IQR (linear-interpolation
    quartiles) over the available models' last lower bounds and, separately,
    last upper bounds; a model outside either fence is marked unavailable.
    Requires at least four available models to act, and never excludes
    everything: if the rule would, the mask is returned unchanged.
    """
    mask = np.asarray(available, dtype=bool).copy()
    idx = [k for k in np.flatnonzero(mask) if results[k] is not None]
    if len(idx) < 4:
        return mask
    lows = np.array([results[k].lower[-1] for k in idx])
    ups = np.array([results[k].upper[-1] for k in idx])
    keep = np.ones(len(idx), dtype=bool)
    for values in (lows, ups):
        q1, q3 = np.percentile(values, [25.0, 75.0])
        iqr = q3 - q1
        keep &= (values >= q1 - iqr_multiplier * iqr) & (values <= q3 + iqr_multiplier * iqr)
    if not keep.any():
        return mask
    new_mask = mask.copy()
    for pos, k in enumerate(idx):
        if not keep[pos]:
            new_mask[k] = False
    return new_mask
