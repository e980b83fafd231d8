"""Time-series data model and corpus ingestion.

A corpus file is UTF-8 CSV with one series per row: the series id followed
by the observations, oldest first. Rows may have different lengths
(competition-style layout). An optional header row is detected by a
non-numeric second field. Blank fields are rejected.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CorpusFormatError, SeriesTooShortError


class Frequency(str, Enum):
    YEARLY = "yearly"
    QUARTERLY = "quarterly"
    MONTHLY = "monthly"

    @property
    def period(self) -> int:
        """Seasonal period implied by the sampling frequency."""
        return {"yearly": 1, "quarterly": 4, "monthly": 12}[self.value]


@dataclass(frozen=True)
class TimeSeries:
    """One observed series, immutable after construction."""

    id: str
    frequency: Frequency
    values: np.ndarray
    period_of_first_obs: int | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"series {self.id!r}: values must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise CorpusFormatError(f"non-finite value in series {self.id!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frequency", Frequency(self.frequency))

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def period(self) -> int:
        return self.frequency.period


@dataclass(frozen=True)
class SplitSeries:
    """A series split into a training head and a test tail of length h."""

    train: TimeSeries
    test: np.ndarray = field(repr=False)

    @property
    def horizon(self) -> int:
        return int(self.test.size)


def _looks_numeric(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_corpus(path: str | Path, frequency: Frequency | str) -> list[TimeSeries]:
    """Read a corpus CSV into a list of series, input order preserved.

    Raises CorpusFormatError for an empty corpus, a malformed row (too few
    or blank fields, unparseable numbers; named by 1-based line number), or
    a non-finite observation (named by series id).
    """
    frequency = Frequency(frequency)
    out: list[TimeSeries] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if lineno == 1 and len(row) >= 2 and not _looks_numeric(row[1]):
                continue  # header row
            if len(row) < 2:
                raise CorpusFormatError(f"malformed row {lineno}")
            sid = row[0].strip()
            if not sid:
                raise CorpusFormatError(f"malformed row {lineno}")
            try:
                values = [float(tok) for tok in row[1:]]
            except ValueError:
                raise CorpusFormatError(f"malformed row {lineno}") from None
            if not all(math.isfinite(v) for v in values):
                raise CorpusFormatError(f"non-finite value in series {sid!r}")
            if sid in seen:
                raise CorpusFormatError(f"duplicate series id {sid!r} at row {lineno}")
            seen.add(sid)
            out.append(TimeSeries(id=sid, frequency=frequency, values=np.array(values)))
    if not out:
        raise CorpusFormatError("empty corpus")
    return out


def split(series: TimeSeries, h: int) -> SplitSeries:
    """Split off the final h observations as the test sample."""
    if h < 1:
        raise ValueError("horizon must be positive")
    n = len(series)
    if n <= h:
        raise SeriesTooShortError(f"series {series.id!r} too short to split (length {n}, horizon {h})")
    train = TimeSeries(
        id=series.id,
        frequency=series.frequency,
        values=series.values[: n - h].copy(),
        period_of_first_obs=series.period_of_first_obs,
    )
    return SplitSeries(train=train, test=series.values[n - h :].copy())


def filter_fittable(
    corpus: Iterable[TimeSeries],
    pool: Sequence,
    h: int,
    needs_double_split: bool,
) -> list[TimeSeries]:
    """Keep only series whose training part supports every model in the pool.

    The training part has T-h observations (T-2h when the selection criterion
    needs its own internal validation split). Its length must strictly exceed
    the largest minimum-fit length in the pool, and it must be strictly
    positive when the pool contains multiplicative-error or
    multiplicative-seasonal models.
    """
    from .ets import min_fit_length  # local import to avoid a cycle

    pool = list(pool)
    if not pool:
        raise ValueError("model pool is empty")
    reserved = 2 * h if needs_double_split else h
    kept: list[TimeSeries] = []
    for series in corpus:
        period = series.period
        max_min_len = max(min_fit_length(spec, period) for spec in pool)
        needs_positive = any(spec.error == "M" or spec.seasonal == "M" for spec in pool)
        train_len = len(series) - reserved
        if train_len <= max_min_len:
            continue
        if needs_positive and not np.all(series.values[: len(series) - h] > 0.0):
            continue
        kept.append(series)
    return kept
