"""Command-line entry points.

Three subcommands cover the offline and online phases:

    build-table   score a reference corpus and write the contingency table
    forecast      combined forecasts for a target corpus under the schemes
    evaluate      MASE/MSIS, rank-thirds and significance reports

Data goes to files; logs go to standard error. Exit codes: 0 success,
1 user error (bad inputs or data), 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import baserate, combine, corpus, ets, metrics, pipeline
from .errors import EtsCombineError, NoCandidateModelsError

logger = logging.getLogger(__name__)

_FREQ_CHOICES = [f.value for f in corpus.Frequency]


def _parallel_map(fn: Callable, items: Sequence, workers: int) -> list:
    """Order-preserving map, optionally over a process pool."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(items) // (4 * workers))
        return list(pool.map(fn, items, chunksize=chunk))


def _write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


class _TableTask:
    """Picklable per-series scoring task for build-table workers."""

    def __init__(self, scorer: "object"):
        self.scorer = scorer

    def __call__(self, series: corpus.TimeSeries):
        return self.scorer.scores(series)


class _PrecomputedScorer:
    """Adapter feeding already-computed score vectors to build_table."""

    def __init__(self, model_names: tuple[str, ...], scored: dict[str, tuple]):
        self.model_names = model_names
        self._scored = scored

    def scores(self, series: corpus.TimeSeries):
        return self._scored[series.id]


def cmd_build_table(args: argparse.Namespace) -> int:
    from .criteria import EtsScorer

    frequency = corpus.Frequency(args.frequency)
    h = args.horizon or pipeline.default_horizon(frequency.value)
    pool = ets.model_pool(frequency)
    series_list = corpus.load_corpus(args.corpus, frequency)
    filtered = corpus.filter_fittable(series_list, pool, h,
                                      needs_double_split=(args.criterion == "validation"))
    logger.info("retained %d of %d series after fit-length/positivity filtering",
                len(filtered), len(series_list))
    scorer = EtsScorer(pool, args.criterion, h)
    if args.workers > 1:
        score_vectors = _parallel_map(_TableTask(scorer), filtered, args.workers)
        scorer = _PrecomputedScorer(scorer.model_names,
                                    {s.id: sc for s, sc in zip(filtered, score_vectors)})
    table = baserate.build_table(
        filtered, scorer, h,
        frequency=frequency.value,
        selection_criterion=args.criterion,
    )
    baserate.save_table(table, args.output)
    logger.info("table over %d series written to %s (skipped %d)",
                table.n_series, args.output, len(filtered) - table.n_series)
    return 0


class _ForecastTask:
    """Picklable per-series forecast task."""

    def __init__(self, cfg: pipeline.ForecastConfig, index_by_id: dict[str, int]):
        self.cfg = cfg
        self.index_by_id = index_by_id

    def __call__(self, series: corpus.TimeSeries):
        try:
            return pipeline.forecast_series(series, self.cfg, self.index_by_id[series.id])
        except NoCandidateModelsError:
            return None


def cmd_forecast(args: argparse.Namespace) -> int:
    frequency = corpus.Frequency(args.frequency)
    h = args.horizon or pipeline.default_horizon(frequency.value)
    pool = tuple(ets.model_pool(frequency))
    schemes = tuple(combine.SCHEMES) if args.schemes == ["all"] else tuple(args.schemes)

    table = None
    if set(schemes) & set(combine.TABLE_SCHEMES):
        if not args.table:
            raise EtsCombineError(
                f"table required for schemes {sorted(set(schemes) & set(combine.TABLE_SCHEMES))}; "
                "pass --table")
        table = baserate.load_table(args.table, expected_models=[s.acronym for s in pool])

    cfg = pipeline.ForecastConfig(
        pool=pool, horizon=h, criterion=args.criterion, schemes=schemes, table=table,
        level=args.level, num_paths=args.num_paths, seed=args.seed,
        iqr_multiplier=args.iqr_multiplier, exclude_outliers=not args.no_exclusion,
    )
    series_list = corpus.load_corpus(args.corpus, frequency)
    index_by_id = {s.id: i for i, s in enumerate(series_list)}
    outputs = _parallel_map(_ForecastTask(cfg, index_by_id), series_list, args.workers)

    scheme_rows = []
    model_rows = []
    selection_rows = []
    skipped = 0
    for series, result in zip(series_list, outputs):
        if result is None:
            logger.warning("skipping series %s: no candidate models", series.id)
            skipped += 1
            continue
        for scheme in schemes:
            fc = result.schemes[scheme]
            for step in range(h):
                scheme_rows.append((series.id, scheme, step + 1,
                                    fc.point[step], fc.lower[step], fc.upper[step]))
        for model, fc in result.model_forecasts.items():
            for step in range(h):
                model_rows.append((series.id, model, step + 1, fc.point[step]))
        for scheme, model in result.selections.items():
            selection_rows.append((series.id, scheme, model))

    _write_csv(args.output, ("series_id", "scheme", "step", "point", "lower", "upper"),
               scheme_rows)
    if args.model_forecasts:
        _write_csv(args.model_forecasts, ("series_id", "model", "step", "point"), model_rows)
    if args.selections:
        _write_csv(args.selections, ("series_id", "scheme", "model"), selection_rows)
    logger.info("forecast %d series (%d skipped) -> %s", len(series_list) - skipped,
                skipped, args.output)
    return 0


def _read_forecasts(path: str | Path):
    """Forecast CSV -> ({(sid, scheme): (point, lower, upper)}, sids, schemes)."""
    cells: dict[tuple[str, str], list[tuple[int, float, float, float]]] = {}
    sids: list[str] = []
    schemes: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"series_id", "scheme", "step", "point", "lower", "upper"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise EtsCombineError(f"forecast file {path} must have columns {sorted(required)}")
        for row in reader:
            key = (row["series_id"], row["scheme"])
            cells.setdefault(key, []).append(
                (int(row["step"]), float(row["point"]), float(row["lower"]), float(row["upper"])))
            if row["series_id"] not in sids:
                sids.append(row["series_id"])
            if row["scheme"] not in schemes:
                schemes.append(row["scheme"])
    out = {}
    for key, entries in cells.items():
        entries.sort()
        out[key] = (np.array([e[1] for e in entries]),
                    np.array([e[2] for e in entries]),
                    np.array([e[3] for e in entries]))
    return out, sids, schemes


def _read_model_points(path: str | Path):
    """Per-model forecast CSV -> {(sid, model): point array}, model order."""
    cells: dict[tuple[str, str], list[tuple[int, float]]] = {}
    models: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            cells.setdefault((row["series_id"], row["model"]), []).append(
                (int(row["step"]), float(row["point"])))
            if row["model"] not in models:
                models.append(row["model"])
    out = {}
    for key, entries in cells.items():
        entries.sort()
        out[key] = np.array([e[1] for e in entries])
    return out, models


def cmd_evaluate(args: argparse.Namespace) -> int:
    frequency = corpus.Frequency(args.frequency)
    s = frequency.period
    forecasts, sids, schemes = _read_forecasts(args.forecasts)
    train_by_id = {t.id: t.values for t in corpus.load_corpus(args.train_corpus, frequency)}
    actual_series = corpus.load_corpus(args.actuals, frequency)
    actual_by_id = {t.id: t.values for t in actual_series}

    for sid in sids:
        if sid not in actual_by_id:
            raise EtsCombineError(f"series id mismatch: {sid!r} has forecasts but no actuals")
        if sid not in train_by_id:
            raise EtsCombineError(f"series id mismatch: {sid!r} has forecasts but no training data")
    for t in actual_series:
        if t.id not in set(sids):
            raise EtsCombineError(f"series id mismatch: {t.id!r} has actuals but no forecasts")

    scores: list[metrics.ScoreRow] = []
    kept_sids: list[str] = []
    for sid in sids:
        try:
            scale = metrics.seasonal_naive_scale(train_by_id[sid], s)
        except Exception as exc:
            logger.warning("excluding series %s from all schemes: %s", sid, exc)
            continue
        actual = actual_by_id[sid]
        usable = True
        series_scores = []
        for scheme in schemes:
            if (sid, scheme) not in forecasts:
                logger.warning("excluding series %s: scheme %s missing", sid, scheme)
                usable = False
                break
            point, lower, upper = forecasts[(sid, scheme)]
            if point.size != actual.size:
                raise EtsCombineError(
                    f"series {sid!r}: forecast horizon {point.size} != actuals {actual.size}")
            row = metrics.ScoreRow(
                series_id=sid, scheme=scheme,
                mase=float(np.mean(np.abs(actual - point))) / scale,
                msis=metrics.msis(train_by_id[sid], s, actual, lower, upper, args.alpha),
            )
            series_scores.append(row)
        if usable:
            scores.extend(series_scores)
            kept_sids.append(sid)

    if not kept_sids:
        raise EtsCombineError("no usable series")

    by_scheme: dict[str, list[metrics.ScoreRow]] = {sch: [] for sch in schemes}
    for row in scores:
        by_scheme[row.scheme].append(row)
    _write_csv(args.metrics, ("scheme", "frequency", "criterion", "mean_mase", "mean_msis", "n"), [
        (sch, frequency.value, args.criterion,
         float(np.mean([r.mase for r in rows])), float(np.mean([r.msis for r in rows])), len(rows))
        for sch, rows in by_scheme.items()
    ])

    mase_matrix = np.array([[by_scheme[sch][i].mase for sch in schemes]
                            for i in range(len(kept_sids))])
    msis_matrix = np.array([[by_scheme[sch][i].msis for sch in schemes]
                            for i in range(len(kept_sids))])
    for matrix, path in ((mase_matrix, args.significance_mase),
                         (msis_matrix, args.significance_msis)):
        if path is None:
            continue
        if len(kept_sids) < 2 or len(schemes) < 2:
            raise EtsCombineError("significance tests need at least 2 series and 2 schemes")
        result = metrics.friedman_nemenyi(matrix, alpha=args.significance_alpha)
        rows = []
        for a in result.order:
            for b in result.order:
                if a >= b:
                    continue
                rows.append((schemes[a], schemes[b],
                             result.mean_ranks[a], result.mean_ranks[b],
                             result.critical_difference, result.significant[a, b]))
        _write_csv(path, ("scheme_a", "scheme_b", "meanrank_a", "meanrank_b",
                          "cd", "significant"), rows)

    if args.rank_thirds:
        if not (args.model_forecasts and args.selections):
            raise EtsCombineError("--rank-thirds needs --model-forecasts and --selections")
        model_points, models = _read_model_points(args.model_forecasts)
        with open(args.selections, newline="", encoding="utf-8") as fh:
            selection_rows = list(csv.DictReader(fh))
        select_schemes = []
        for row in selection_rows:
            if row["scheme"] not in select_schemes:
                select_schemes.append(row["scheme"])
        selected = {(r["series_id"], r["scheme"]): r["model"] for r in selection_rows}

        rows = []
        for scheme in select_schemes:
            per_series_ranks = []
            picks = []
            for sid in kept_sids:
                if (sid, scheme) not in selected:
                    continue
                avail = [m for m in models if (sid, m) in model_points]
                if len(avail) < 3 or selected[(sid, scheme)] not in avail:
                    continue
                maes = [float(np.mean(np.abs(actual_by_id[sid] - model_points[(sid, m)])))
                        for m in avail]
                per_series_ranks.append(metrics.mae_rank_matrix(np.array([maes]))[0])
                picks.append(avail.index(selected[(sid, scheme)]))
            if not per_series_ranks:
                continue
            thirds = _thirds_over_ragged(per_series_ranks, picks)
            rows.append((scheme, thirds.top, thirds.middle, thirds.bottom))
        _write_csv(args.rank_thirds, ("scheme", "top_third", "middle_third", "bottom_third"), rows)

    logger.info("evaluated %d series x %d schemes -> %s", len(kept_sids), len(schemes),
                args.metrics)
    return 0


def _thirds_over_ragged(rank_rows: list[np.ndarray], picks: list[int]) -> metrics.ThirdsFrequencies:
    """rank_thirds over per-series pools of possibly different sizes."""
    import math as _math

    top = middle = bottom = 0
    for ranks, pick in zip(rank_rows, picks):
        k = len(ranks)
        r = ranks[pick]
        if r <= _math.ceil(k / 3):
            top += 1
        elif r <= _math.ceil(2 * k / 3):
            middle += 1
        else:
            bottom += 1
    n = len(rank_rows)
    return metrics.ThirdsFrequencies(top=top / n, middle=middle / n, bottom=bottom / n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etscombine",
        description="Exponential-smoothing selection and combination with "
                    "reference-corpus contingency tables.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-table", help="score a reference corpus into a contingency table")
    p.add_argument("--corpus", required=True, help="reference corpus CSV (id,v1,v2,...)")
    p.add_argument("--frequency", required=True, choices=_FREQ_CHOICES)
    p.add_argument("--criterion", default="bic", choices=["bic", "validation"],
                   help="selection criterion (default: bic)")
    p.add_argument("--horizon", type=int, default=None,
                   help="forecast horizon (default: 6/8/12 by frequency)")
    p.add_argument("--output", required=True, help="table JSON path")
    p.add_argument("--workers", type=int, default=1, help="series-level worker processes")
    p.set_defaults(func=cmd_build_table)

    p = sub.add_parser("forecast", help="combined forecasts for a target corpus")
    p.add_argument("--corpus", required=True, help="target corpus CSV (in-sample data)")
    p.add_argument("--frequency", required=True, choices=_FREQ_CHOICES)
    p.add_argument("--criterion", default="bic", choices=["bic", "validation"])
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--schemes", nargs="+", default=["all"],
                   choices=list(combine.SCHEMES) + ["all"],
                   help="schemes to emit (default: all)")
    p.add_argument("--table", default=None, help="contingency table JSON "
                   "(required for precision/sensitivity/aggregate schemes)")
    p.add_argument("--level", type=float, default=0.95, help="interval level (default 0.95)")
    p.add_argument("--num-paths", type=int, default=pipeline.DEFAULT_NUM_PATHS,
                   help="simulation paths for intervals (default 5000)")
    p.add_argument("--seed", type=int, default=pipeline.DEFAULT_SEED,
                   help=f"simulation seed (default {pipeline.DEFAULT_SEED})")
    p.add_argument("--iqr-multiplier", type=float, default=1.5,
                   help="fence multiplier for the interval-outlier exclusion (default 1.5)")
    p.add_argument("--no-exclusion", action="store_true",
                   help="disable the interval-outlier exclusion")
    p.add_argument("--output", required=True, help="scheme forecasts CSV")
    p.add_argument("--model-forecasts", default=None,
                   help="optional per-model point forecast CSV (for rank analysis)")
    p.add_argument("--selections", default=None,
                   help="optional CSV of each select scheme's chosen model")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("evaluate", help="score forecasts against held-out actuals")
    p.add_argument("--forecasts", required=True, help="scheme forecasts CSV")
    p.add_argument("--train-corpus", required=True,
                   help="in-sample corpus CSV (for the MASE/MSIS scale)")
    p.add_argument("--actuals", required=True, help="held-out actuals CSV (id,v1..vh)")
    p.add_argument("--frequency", required=True, choices=_FREQ_CHOICES)
    p.add_argument("--criterion", default="unspecified",
                   help="criterion label written to the metrics CSV")
    p.add_argument("--alpha", type=float, default=0.05,
                   help="MSIS interval tail probability (default 0.05)")
    p.add_argument("--significance-alpha", type=float, default=0.05,
                   choices=[0.01, 0.05, 0.10], help="rank-test level (default 0.05)")
    p.add_argument("--metrics", required=True, help="mean MASE/MSIS per scheme CSV")
    p.add_argument("--significance-mase", default=None, help="Nemenyi pairs CSV for MASE")
    p.add_argument("--significance-msis", default=None, help="Nemenyi pairs CSV for MSIS")
    p.add_argument("--rank-thirds", default=None, help="rank-thirds CSV "
                   "(needs --model-forecasts and --selections)")
    p.add_argument("--model-forecasts", default=None, help="per-model forecasts CSV")
    p.add_argument("--selections", default=None, help="selections CSV")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EtsCombineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
