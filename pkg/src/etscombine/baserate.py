"""Selected-vs-best contingency tables over a reference corpus.

For each reference series, the model chosen by the selection criterion
and the model that actually forecast the test part best define one joint
event; the table collects those events over the corpus and normalises by
the number of tallied series. Tables are stored as exact integer counts
plus the series count; joint probabilities are derived on read.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .corpus import TimeSeries
from .errors import NoUsableSeriesError, TableInvariantError, TablePoolMismatchError

SCHEMA_VERSION = 1

logger = logging.getLogger(__name__)


class SeriesScorer(Protocol):
    """Anything that can score one series against a fixed model list."""

    model_names: tuple[str, ...]

    def scores(self, series: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
        """Return (selection values, evaluation values), NaN = unavailable."""
        ...


@dataclass(frozen=True)
class ContingencyTable:
    """K x K joint distribution of (selected model, best model).

    Row i holds the mass of series where model i was selected; column j
    the mass where model j was best out of sample. `counts` are integral
    for tables built from a corpus; tables entered from rounded published
    probabilities carry `rounded_source=True` and relaxed invariants.
    """

    models: tuple[str, ...]
    counts: np.ndarray = field(repr=False)
    n_series: int
    frequency: str
    selection_criterion: str
    evaluation_criterion: str
    horizon: int
    rounded_source: bool = False

    def __post_init__(self) -> None:
        models = tuple(str(m) for m in self.models)
        counts = np.asarray(self.counts, dtype=np.float64)
        k = len(models)
        if k < 1 or len(set(models)) != k:
            raise TableInvariantError("invalid table: models must be non-empty and unique")
        if counts.shape != (k, k):
            raise TableInvariantError(f"invalid table: counts must be {k}x{k}")
        if self.n_series < 1:
            raise TableInvariantError("invalid table: n_series must be positive")
        if np.any(counts < 0.0):
            raise TableInvariantError("invalid table: negative entry")
        total = float(counts.sum())
        if self.rounded_source:
            if abs(total / self.n_series - 1.0) > 5e-3:
                raise TableInvariantError(
                    f"invalid table: grand sum {total / self.n_series:.6f} deviates from 1 beyond 5e-3")
        else:
            if abs(total - self.n_series) > 1e-9 * max(1, self.n_series):
                raise TableInvariantError("invalid table: counts do not sum to n_series")
            if np.any(np.abs(counts - np.round(counts)) > 1e-9):
                raise TableInvariantError("invalid table: non-integer counts")
        counts.setflags(write=False)
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "counts", counts)

    @property
    def k(self) -> int:
        return len(self.models)

    @property
    def matrix(self) -> np.ndarray:
        """Joint probabilities w[i][j] = p(select i and j best)."""
        return self.counts / self.n_series

    @property
    def selected_marginals(self) -> np.ndarray:
        """Row sums p(S_i)."""
        return self.matrix.sum(axis=1)

    @property
    def best_marginals(self) -> np.ndarray:
        """Column sums p(C_j)."""
        return self.matrix.sum(axis=0)

    def model_index(self, acronym: str) -> int:
        return self.models.index(acronym)


def build_table(corpus: Iterable[TimeSeries], scorer: SeriesScorer, h: int, *,
                frequency: str, selection_criterion: str,
                evaluation_criterion: str = "mae") -> ContingencyTable:
    """Tally (selected, best) events over a corpus into a table.

    Per series: score all models, restrict to the models available for
    both criteria, take the argmin of each vector (ties to the lowest
    index), and increment that cell. Series with no available model are
    skipped with a log line and do not count toward the total.
    """
    names = tuple(scorer.model_names)
    k = len(names)
    if k < 2:
        raise ValueError("model pool must contain at least two models")
    counts = np.zeros((k, k), dtype=np.int64)
    tallied = 0
    for series in corpus:
        sels, evals = scorer.scores(series)
        sels = np.asarray(sels, dtype=np.float64)
        evals = np.asarray(evals, dtype=np.float64)
        if sels.shape != (k,) or evals.shape != (k,):
            raise ValueError(f"scorer returned wrong-length vectors for series {series.id!r}")
        available = np.isfinite(sels) & np.isfinite(evals)
        if not available.any():
            logger.info("skipping series %s: no available models", series.id)
            continue
        i_star = int(np.argmin(np.where(available, sels, np.inf)))
        j_star = int(np.argmin(np.where(available, evals, np.inf)))
        counts[i_star, j_star] += 1
        tallied += 1
    if tallied == 0:
        raise NoUsableSeriesError("no usable series")
    return ContingencyTable(
        models=names,
        counts=counts.astype(np.float64),
        n_series=tallied,
        frequency=str(frequency),
        selection_criterion=selection_criterion,
        evaluation_criterion=evaluation_criterion,
        horizon=h,
    )


def table_from_matrix(models: Sequence[str], matrix: Sequence[Sequence[float]],
                      n_series: int, *, frequency: str, selection_criterion: str,
                      evaluation_criterion: str = "mae", horizon: int) -> ContingencyTable:
    """Build a table from published joint probabilities (rounded to ~3 dp).

    The grand sum must be within 5e-3 of one; the integral-counts
    invariant is waived and the table is flagged as a rounded source.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    return ContingencyTable(
        models=tuple(models),
        counts=matrix * n_series,
        n_series=n_series,
        frequency=str(frequency),
        selection_criterion=selection_criterion,
        evaluation_criterion=evaluation_criterion,
        horizon=horizon,
        rounded_source=True,
    )


def save_table(table: ContingencyTable, path: str | Path) -> None:
    """Write a count-backed table as canonical JSON."""
    if table.rounded_source:
        raise ValueError("tables entered from rounded probabilities cannot be saved")
    payload = {
        "schema_version": SCHEMA_VERSION,
        "models": list(table.models),
        "counts": [[int(round(c)) for c in row] for row in table.counts],
        "n_series": table.n_series,
        "frequency": table.frequency,
        "selection_criterion": table.selection_criterion,
        "evaluation_criterion": table.evaluation_criterion,
        "horizon": table.horizon,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_table(path: str | Path,
               expected_models: Sequence[str] | None = None) -> ContingencyTable:
    """Read a table back, re-checking every invariant.

    Raises TableInvariantError on schema or invariant violations and
    TablePoolMismatchError when expected_models is given and differs.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TableInvariantError(f"invalid table: not valid JSON ({exc})") from None
    if not isinstance(payload, dict) or payload.get("schema_version") != SCHEMA_VERSION:
        raise TableInvariantError(
            f"invalid table: expected schema_version {SCHEMA_VERSION}, "
            f"got {payload.get('schema_version')!r}")
    try:
        table = ContingencyTable(
            models=tuple(payload["models"]),
            counts=np.asarray(payload["counts"], dtype=np.float64),
            n_series=int(payload["n_series"]),
            frequency=str(payload["frequency"]),
            selection_criterion=str(payload["selection_criterion"]),
            evaluation_criterion=str(payload["evaluation_criterion"]),
            horizon=int(payload["horizon"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TableInvariantError(f"invalid table: {exc}") from None
    if expected_models is not None and tuple(expected_models) != table.models:
        raise TablePoolMismatchError(
            f"pool mismatch: table has {list(table.models)}, expected {list(expected_models)}")
    return table
