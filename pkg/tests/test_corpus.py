import numpy as np
import pytest

from etscombine.corpus import Frequency, TimeSeries, filter_fittable, load_corpus, split
from etscombine.errors import CorpusFormatError, SeriesTooShortError
from etscombine.ets import min_fit_length, model_pool

from conftest import make_series


def write(tmp_path, text, name="corpus.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCorpus:
    def test_basic_row(self, tmp_path):
        series = load_corpus(write(tmp_path, "Y1,5,10,15\n"), "yearly")
        assert len(series) == 1
        assert series[0].id == "Y1"
        assert series[0].period == 1
        np.testing.assert_array_equal(series[0].values, [5.0, 10.0, 15.0])

    def test_header_detected(self, tmp_path):
        series = load_corpus(write(tmp_path, "id,values\nY1,1,2,3\n"), "yearly")
        assert [s.id for s in series] == ["Y1"]

    def test_order_preserved(self, tmp_path):
        series = load_corpus(write(tmp_path, "B,1,2\nA,3,4\nC,5,6\n"), "monthly")
        assert [s.id for s in series] == ["B", "A", "C"]
        assert series[0].period == 12

    def test_empty_file(self, tmp_path):
        with pytest.raises(CorpusFormatError, match="empty corpus"):
            load_corpus(write(tmp_path, ""), "yearly")

    def test_blank_field_is_malformed(self, tmp_path):
        with pytest.raises(CorpusFormatError, match="malformed row 2"):
            load_corpus(write(tmp_path, "Y1,1,2,3\nY2,1,,3\n"), "yearly")

    def test_non_numeric_field(self, tmp_path):
        with pytest.raises(CorpusFormatError, match="malformed row 1"):
            load_corpus(write(tmp_path, "Y1,1,oops,3\n"), "yearly")

    def test_non_finite_names_series(self, tmp_path):
        with pytest.raises(CorpusFormatError, match="Y9"):
            load_corpus(write(tmp_path, "Y9,1,inf,3\n"), "yearly")

    def test_duplicate_id_rejected(self, tmp_path):
        with pytest.raises(CorpusFormatError, match="duplicate"):
            load_corpus(write(tmp_path, "Y1,1,2\nY1,3,4\n"), "yearly")


class TestSplit:
    def test_definition(self):
        parts = split(make_series(range(1, 11)), h=3)
        np.testing.assert_array_equal(parts.train.values, np.arange(1, 8))
        np.testing.assert_array_equal(parts.test, [8.0, 9.0, 10.0])
        assert parts.horizon == 3

    def test_too_short(self):
        with pytest.raises(SeriesTooShortError, match="too short to split"):
            split(make_series(range(6)), h=6)

    def test_train_length(self):
        assert len(split(make_series(range(1, 21)), h=6).train) == 14

    def test_roundtrip_property(self, rng):
        for _ in range(20):
            n = int(rng.integers(5, 60))
            h = int(rng.integers(1, n))
            values = rng.normal(size=n)
            parts = split(make_series(values), h=h)
            np.testing.assert_array_equal(
                np.concatenate([parts.train.values, parts.test]), values)


class TestFilterFittable:
    def test_monthly_double_split_threshold(self):
        pool = model_pool("monthly")
        needed = max(min_fit_length(spec, 12) for spec in pool)
        corpus = [make_series(np.arange(50) + 1.0, sid=f"m{i}", frequency=Frequency.MONTHLY)
                  for i in range(3)]
        kept = filter_fittable(corpus, pool, h=12, needs_double_split=True)
        # training part has 50 - 24 = 26 observations
        assert (len(kept) == 3) == (50 - 24 > needed)

    def test_positivity_excludes_with_multiplicative_models(self):
        pool = model_pool("yearly")
        values = np.arange(1.0, 31.0)
        values[4] = 0.0
        corpus = [make_series(values, sid="z")]
        assert filter_fittable(corpus, pool, h=6, needs_double_split=False) == []

    def test_zero_in_test_part_is_fine(self):
        pool = model_pool("yearly")
        values = np.arange(1.0, 31.0)
        values[-1] = 0.0  # held-out part only
        corpus = [make_series(values, sid="z")]
        assert len(filter_fittable(corpus, pool, h=6, needs_double_split=False)) == 1

    def test_additive_only_pool_allows_nonpositive(self):
        from etscombine.ets import EtsSpec
        pool = [EtsSpec("A"), EtsSpec("A", "A")]
        values = np.arange(-5.0, 25.0)
        corpus = [make_series(values, sid="neg")]
        assert len(filter_fittable(corpus, pool, h=6, needs_double_split=False)) == 1

    def test_empty_corpus(self):
        assert filter_fittable([], model_pool("yearly"), 6, False) == []

    def test_subsequence_order_preserved(self, rng):
        pool = model_pool("yearly")
        corpus = [make_series(np.abs(rng.normal(50, 5, int(n))) + 1.0, sid=f"s{i}")
                  for i, n in enumerate(rng.integers(8, 40, size=30))]
        kept = filter_fittable(corpus, pool, h=6, needs_double_split=False)
        ids = [s.id for s in corpus]
        kept_ids = [s.id for s in kept]
        assert kept_ids == [i for i in ids if i in set(kept_ids)]

    def test_validation_set_never_larger_than_bic_set(self, rng):
        pool = model_pool("yearly")
        corpus = [make_series(np.abs(rng.normal(50, 5, int(n))) + 1.0, sid=f"s{i}")
                  for i, n in enumerate(rng.integers(10, 40, size=40))]
        bic_set = filter_fittable(corpus, pool, h=6, needs_double_split=False)
        val_set = filter_fittable(corpus, pool, h=6, needs_double_split=True)
        assert len(val_set) <= len(bic_set)
        assert {s.id for s in val_set} <= {s.id for s in bic_set}


class TestTimeSeries:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            TimeSeries(id="e", frequency=Frequency.YEARLY, values=np.array([]))

    def test_rejects_nan(self):
        with pytest.raises(CorpusFormatError):
            make_series([1.0, np.nan, 2.0])

    def test_values_read_only(self):
        series = make_series([1.0, 2.0])
        with pytest.raises(ValueError):
            series.values[0] = 9.0

    def test_periods(self):
        assert Frequency.YEARLY.period == 1
        assert Frequency.QUARTERLY.period == 4
        assert Frequency.MONTHLY.period == 12
