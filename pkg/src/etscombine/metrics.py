"""Forecast scoring and scheme comparison.

Point accuracy is the mean absolute scaled error (MASE); interval quality
is the mean scaled interval score (MSIS). Both divide by the same
seasonal-naive in-sample scale. Scheme comparisons use Friedman mean
ranks with Nemenyi critical differences; table diagnostics report
per-model precision, sensitivity and F-score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .baserate import ContingencyTable
from .errors import UndefinedScaleError

DIAGNOSTIC_SCHEMES = ("criterion", "precision", "sensitivity")

# Studentized-range quantiles / sqrt(2) at infinite degrees of freedom,
# for 2..20 compared schemes. Frozen from scipy.stats.studentized_range.
_NEMENYI_Q = {
    0.01: (
        2.575829, 2.913494, 3.113250, 3.254686, 3.363740,
        3.452213, 3.526471, 3.590339, 3.646292, 3.696021,
        3.740733, 3.781318, 3.818451, 3.852654, 3.884343,
        3.913850, 3.941446, 3.967357, 3.991770,
    ),
    0.05: (
        1.959964, 2.343701, 2.569032, 2.727774, 2.849705,
        2.948320, 3.030878, 3.101730, 3.163684, 3.218654,
        3.268004, 3.312739, 3.353618, 3.391230, 3.426041,
        3.458425, 3.488685, 3.517073, 3.543799,
    ),
    0.10: (
        1.644854, 2.052293, 2.291341, 2.459516, 2.588521,
        2.692732, 2.779884, 2.854606, 2.919889, 2.977768,
        3.029694, 3.076733, 3.119693, 3.159199, 3.195743,
        3.229723, 3.261461, 3.291224, 3.319233,
    ),
}


@dataclass(frozen=True)
class ScoreRow:
    """Out-of-sample scores of one scheme on one series."""

    series_id: str
    scheme: str
    mase: float
    msis: float


def seasonal_naive_scale(in_sample: Sequence[float], s: int) -> float:
    """Mean absolute s-step in-sample difference, the MASE/MSIS denominator."""
    y = np.asarray(in_sample, dtype=np.float64)
    if s < 1:
        raise ValueError("seasonal period must be positive")
    if y.ndim != 1 or y.size <= s:
        raise ValueError(f"need more than {s} in-sample observations")
    scale = float(np.mean(np.abs(y[s:] - y[:-s])))
    if scale <= 0.0:
        raise UndefinedScaleError("undefined MASE: zero seasonal-naive scale")
    return scale


def mase(in_sample: Sequence[float], s: int, test: Sequence[float],
         point: Sequence[float]) -> float:
    """Mean absolute error of the forecasts over the seasonal-naive scale."""
    test = np.asarray(test, dtype=np.float64)
    point = np.asarray(point, dtype=np.float64)
    if test.shape != point.shape or test.ndim != 1 or test.size < 1:
        raise ValueError("test and point forecasts must be equal-length, non-empty")
    return float(np.mean(np.abs(test - point))) / seasonal_naive_scale(in_sample, s)


def msis(in_sample: Sequence[float], s: int, test: Sequence[float],
         lower: Sequence[float], upper: Sequence[float], alpha: float = 0.05) -> float:
    """Mean scaled interval score at nominal coverage 1 - alpha.

    Interval width plus 2/alpha times the amount by which the actual
    escapes the interval (strict inequalities), averaged over the horizon
    and divided by the seasonal-naive scale.
    """
    test = np.asarray(test, dtype=np.float64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if not (test.shape == lower.shape == upper.shape) or test.ndim != 1 or test.size < 1:
        raise ValueError("test/lower/upper must be equal-length, non-empty")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if np.any(lower > upper):
        raise ValueError("invalid interval: lower exceeds upper")
    width = upper - lower
    below = np.where(test < lower, lower - test, 0.0)
    above = np.where(test > upper, test - upper, 0.0)
    score = float(np.mean(width + (2.0 / alpha) * (below + above)))
    return score / seasonal_naive_scale(in_sample, s)


@dataclass(frozen=True)
class ModelDiagnostics:
    """Per-model confusion metrics of a selection scheme on a table."""

    models: tuple[str, ...]
    scheme: str
    precision: np.ndarray = field(repr=False)
    sensitivity: np.ndarray = field(repr=False)
    f_score: np.ndarray = field(repr=False)
    macro_precision: float
    macro_sensitivity: float
    macro_f: float


def _remap_selection(table: ContingencyTable, scheme: str) -> np.ndarray:
    """Model each row's selection event lands on under a scheme's argmax."""
    matrix = table.matrix
    if scheme == "criterion":
        return np.arange(table.k)
    if scheme == "precision":
        return np.argmax(matrix, axis=1)
    if scheme == "sensitivity":
        col_totals = matrix.sum(axis=0)
        ratios = np.divide(matrix, col_totals, out=np.zeros_like(matrix),
                           where=col_totals > 0.0)
        return np.argmax(ratios, axis=1)
    raise ValueError(f"unknown diagnostic scheme {scheme!r}; use one of {DIAGNOSTIC_SCHEMES}")


def model_diagnostics(table: ContingencyTable, scheme: str = "criterion") -> ModelDiagnostics:
    """Precision, sensitivity and F-score per model, plus unweighted macros.

    Each table row's mass counts as a selection of the model the scheme's
    argmax maps that row to ("criterion" maps rows to themselves). Per
    model: precision TP/(TP+FP), sensitivity TP/(TP+FN), and
    F = TP / (TP + (FP+FN)/2); zero denominators yield zero. The macro
    values are plain means over models, not F of the macro precision and
    sensitivity.
    """
    matrix = table.matrix
    k = table.k
    mapped = _remap_selection(table, scheme)
    tp = np.zeros(k)
    fp = np.zeros(k)
    fn = np.zeros(k)
    for i in range(k):
        sel = mapped[i]
        tp[sel] += matrix[i, sel]
        fp[sel] += matrix[i].sum() - matrix[i, sel]
    for j in range(k):
        fn[j] = matrix[:, j].sum() - tp[j]
    with np.errstate(invalid="ignore"):
        precision = np.where(tp + fp > 0.0, tp / (tp + fp), 0.0)
        sensitivity = np.where(tp + fn > 0.0, tp / (tp + fn), 0.0)
        f_score = np.where(tp + 0.5 * (fp + fn) > 0.0, tp / (tp + 0.5 * (fp + fn)), 0.0)
    return ModelDiagnostics(
        models=table.models,
        scheme=scheme,
        precision=precision,
        sensitivity=sensitivity,
        f_score=f_score,
        macro_precision=float(precision.mean()),
        macro_sensitivity=float(sensitivity.mean()),
        macro_f=float(f_score.mean()),
    )


@dataclass(frozen=True)
class ThirdsFrequencies:
    """How often a scheme's pick ranks in each third of the pool."""

    top: float
    middle: float
    bottom: float


def mae_rank_matrix(mae_values: np.ndarray) -> np.ndarray:
    """Rank models per series by MAE, average ranks on ties (1 = best)."""
    mae_values = np.asarray(mae_values, dtype=np.float64)
    if mae_values.ndim != 2:
        raise ValueError("expected a series x models matrix")
    return np.vstack([stats.rankdata(row, method="average") for row in mae_values])


def rank_thirds(ranks: np.ndarray, selections: Sequence[int]) -> ThirdsFrequencies:
    """Fractions of series whose selected model ranks in the top, middle,
    or bottom third of the pool (top third is ranks 1..ceil(K/3))."""
    ranks = np.asarray(ranks, dtype=np.float64)
    selections = np.asarray(selections, dtype=np.int64)
    n, k = ranks.shape
    if k < 3:
        raise ValueError("need at least three models for a thirds split")
    if selections.shape != (n,):
        raise ValueError("one selection per series required")
    upper_top = math.ceil(k / 3)
    upper_middle = math.ceil(2 * k / 3)
    picked = ranks[np.arange(n), selections]
    top = float(np.mean(picked <= upper_top))
    middle = float(np.mean((picked > upper_top) & (picked <= upper_middle)))
    bottom = float(np.mean(picked > upper_middle))
    return ThirdsFrequencies(top=top, middle=middle, bottom=bottom)


@dataclass(frozen=True)
class FriedmanNemenyiResult:
    """Mean ranks with pairwise Nemenyi significance.

    order lists scheme indices best (lowest mean rank) first; mean_ranks
    and significant stay in the caller's column order.
    """

    mean_ranks: np.ndarray
    critical_difference: float
    significant: np.ndarray = field(repr=False)
    order: tuple[int, ...]
    friedman_statistic: float
    friedman_pvalue: float


def friedman_nemenyi(scores: np.ndarray, alpha: float = 0.05) -> FriedmanNemenyiResult:
    """Compare schemes on per-series scores (rows = series, lower = better).

    Scores are ranked within each series with average ranks on ties. Two
    schemes differ significantly when their mean ranks are more than the
    critical difference q_alpha * sqrt(M(M+1)/(6N)) apart.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError("expected a series x schemes matrix")
    n, m = scores.shape
    if n < 2 or m < 2:
        raise ValueError("need at least two series and two schemes")
    if alpha not in _NEMENYI_Q:
        raise ValueError(f"alpha must be one of {sorted(_NEMENYI_Q)}")
    if m > len(_NEMENYI_Q[alpha]) + 1:
        raise ValueError("critical values embedded for at most 20 schemes")

    ranks = np.vstack([stats.rankdata(row, method="average") for row in scores])
    mean_ranks = ranks.mean(axis=0)
    q = _NEMENYI_Q[alpha][m - 2]
    cd = q * math.sqrt(m * (m + 1) / (6.0 * n))
    diffs = np.abs(mean_ranks[:, None] - mean_ranks[None, :])
    significant = diffs > cd
    np.fill_diagonal(significant, False)

    chi2 = 12.0 * n / (m * (m + 1)) * float(np.sum((mean_ranks - (m + 1) / 2.0) ** 2))
    pvalue = float(stats.chi2.sf(chi2, m - 1))
    order = tuple(int(i) for i in np.argsort(mean_ranks, kind="mergesort"))
    return FriedmanNemenyiResult(
        mean_ranks=mean_ranks,
        critical_difference=float(cd),
        significant=significant,
        order=order,
        friedman_statistic=float(chi2),
        friedman_pvalue=pvalue,
    )
