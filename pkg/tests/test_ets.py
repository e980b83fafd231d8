import json
import math

import numpy as np
import pytest

from etscombine import ets
from etscombine.corpus import Frequency, TimeSeries
from etscombine.errors import UnfittableModelError
from etscombine.ets import EtsFit, EtsSpec, ForecastResult

from conftest import make_series, random_walk_series

YEARLY_ACRONYMS = ["ANN", "MNN", "AAN", "MAN", "AAdN", "MAdN"]


class TestSpecAndPool:
    def test_yearly_pool(self):
        assert [s.acronym for s in ets.model_pool("yearly")] == YEARLY_ACRONYMS

    def test_monthly_pool(self):
        acronyms = [s.acronym for s in ets.model_pool("monthly")]
        assert len(acronyms) == 15
        assert "MAM" in acronyms and "MAdM" in acronyms
        assert "AAM" not in acronyms and "ANM" not in acronyms

    def test_quarterly_equals_monthly(self):
        assert ets.model_pool("quarterly") == ets.model_pool("monthly")

    def test_acronym_rendering(self):
        assert EtsSpec("M", "A", damped=True, seasonal="N").acronym == "MAdN"
        assert EtsSpec("A", "N").acronym == "ANN"

    def test_acronym_roundtrip(self):
        for spec in ets.model_pool("monthly"):
            assert EtsSpec.from_acronym(spec.acronym) == spec

    def test_damped_requires_trend(self):
        with pytest.raises(ValueError):
            EtsSpec("A", "N", damped=True)

    def test_additive_error_multiplicative_seasonal_forbidden(self):
        with pytest.raises(ValueError):
            EtsSpec("A", "A", seasonal="M")

    def test_num_params(self):
        # smoothing + free states + variance
        assert ets.num_params(EtsSpec("A"), 1) == 1 + 1 + 1
        assert ets.num_params(EtsSpec("A", "A"), 1) == 2 + 2 + 1
        assert ets.num_params(EtsSpec("M", "A", damped=True), 1) == 3 + 2 + 1
        assert ets.num_params(EtsSpec("M", "A", seasonal="M"), 12) == 3 + (2 + 11) + 1


class TestFit:
    def test_constant_series(self):
        fit = ets.fit(EtsSpec("A"), make_series(np.full(30, 5.0)))
        assert fit.sigma2 <= 1e-10
        np.testing.assert_allclose(ets.point_forecast(fit, 8), 5.0, atol=1e-6)

    def test_ses_recursion_oracle(self):
        # ANN with fixed alpha must reproduce l_t = a*y_t + (1-a)*l_{t-1}
        series = random_walk_series(7, n=40)
        fit = ets.fit(EtsSpec("A"), series, fixed={"alpha": 0.3})
        states = ets.filter_states(fit, series)
        level = fit.initial_level
        for t, y in enumerate(series.values):
            level = 0.3 * y + 0.7 * level
            assert abs(states.levels[t + 1] - level) < 1e-10

    def test_linear_series_extends_line(self):
        t = np.arange(1, 31, dtype=float)
        fit = ets.fit(EtsSpec("A", "A"), make_series(2.0 + 3.0 * t))
        expected = 2.0 + 3.0 * np.arange(31, 37)
        np.testing.assert_allclose(ets.point_forecast(fit, 6), expected, rtol=1e-3)

    def test_deterministic(self):
        series = random_walk_series(11)
        a = ets.fit(EtsSpec("M", "A", damped=True), series)
        b = ets.fit(EtsSpec("M", "A", damped=True), series)
        assert a == b

    def test_too_short_raises(self):
        with pytest.raises(UnfittableModelError, match="too short"):
            ets.fit(EtsSpec("M", "A", damped=True), make_series([1.0, 2.0, 3.0]))

    def test_nonpositive_raises_for_multiplicative(self):
        values = np.arange(-2.0, 28.0)
        with pytest.raises(UnfittableModelError, match="positive"):
            ets.fit(EtsSpec("M"), make_series(values))
        ets.fit(EtsSpec("A"), make_series(values))  # additive is fine

    def test_admissible_bounds(self):
        for seed in range(8):
            series = random_walk_series(seed, n=25)
            for spec in ets.model_pool("yearly"):
                fit = ets.fit(spec, series)
                assert 0.0 < fit.alpha < 1.0
                if fit.beta is not None:
                    assert 0.0 < fit.beta < fit.alpha
                if fit.phi is not None:
                    assert 0.8 <= fit.phi <= 0.98

    def test_seasonal_state_normalisation(self, rng):
        t = np.arange(48, dtype=float)
        base = 100.0 + t + 10.0 * np.sin(2.0 * np.pi * t / 4.0) + rng.normal(0, 1, 48)
        series = make_series(np.abs(base) + 5.0, frequency=Frequency.QUARTERLY)
        add = ets.fit(EtsSpec("A", "A", seasonal="A"), series)
        assert abs(sum(add.initial_seasonal)) < 1e-8
        assert 0.0 < add.gamma < 1.0 - add.alpha
        mul = ets.fit(EtsSpec("M", "A", seasonal="M"), series)
        assert abs(np.mean(mul.initial_seasonal) - 1.0) < 1e-8
        assert all(v > 0.0 for v in mul.initial_seasonal)

    def test_sigma2_is_mean_squared_innovation(self):
        for spec in (EtsSpec("A", "A"), EtsSpec("M", "A")):
            series = random_walk_series(3, n=30)
            fit = ets.fit(spec, series)
            states = ets.filter_states(fit, series)
            assert fit.sigma2 == pytest.approx(np.mean(states.residuals ** 2), rel=1e-9)

    def test_nested_likelihood_spot(self):
        series = random_walk_series(5, n=30)
        small = ets.fit(EtsSpec("A"), series)
        large = ets.fit(EtsSpec("A", "A"), series)
        assert large.log_likelihood >= small.log_likelihood - 1e-6

    def test_fit_roundtrip_json(self):
        series = random_walk_series(9)
        fit = ets.fit(EtsSpec("M", "A", damped=True), series)
        restored = EtsFit.from_dict(json.loads(json.dumps(fit.to_dict())))
        assert restored == fit


def _random_params(rng, spec, m):
    alpha = rng.uniform(0.2, 0.8)
    beta = rng.uniform(0.01, alpha / 2) if spec.trend == "A" else 0.0
    gamma = rng.uniform(0.01, (1 - alpha) / 2) if spec.seasonal != "N" else 0.0
    phi = rng.uniform(0.8, 0.98) if spec.damped else 1.0
    level = rng.uniform(50, 150)
    trend = rng.uniform(-0.5, 1.5) if spec.trend == "A" else 0.0
    if spec.seasonal == "A":
        seasonal = rng.normal(0, 3, m)
        seasonal -= seasonal.mean()
    elif spec.seasonal == "M":
        seasonal = np.abs(rng.normal(1, 0.1, m)) + 0.2
        seasonal *= m / seasonal.sum()
    else:
        seasonal = np.zeros(m)
    return alpha, beta, gamma, phi, level, trend, seasonal


class TestFilterInvertsSimulation:
    """The filter must recover the exact innovations of a simulated path."""

    @pytest.mark.parametrize("acronym", [s.acronym for s in ets.model_pool("monthly")])
    def test_all_forms(self, acronym, rng):
        from etscombine._kernels import _filter_traces
        from etscombine.ets import _codes, _propagate

        spec = EtsSpec.from_acronym(acronym)
        m = 4 if spec.seasonal != "N" else 1
        ec, tc, damped, sc = _codes(spec)
        alpha, beta, gamma, phi, level, trend, seasonal = _random_params(rng, spec, m)
        n = 40
        eps = rng.normal(0, 0.02, (1, n))
        y = _propagate(ec, tc, damped, sc, m, alpha, beta, gamma, phi,
                       np.array([level]), np.array([trend]),
                       seasonal.reshape(1, -1), eps)[0]
        assert np.all(np.isfinite(y))
        sse, slogr, ok, lev, tre, shist, fitted, resid = _filter_traces(
            y, m, ec, tc, damped, sc, alpha, beta, gamma, phi, level, trend, seasonal)
        assert ok
        np.testing.assert_allclose(resid, eps[0], atol=1e-9)
        assert sse == pytest.approx(float(np.sum(eps ** 2)), rel=1e-9)


class TestForecast:
    def test_constant_fit_degenerate_intervals(self):
        fit = ets.fit(EtsSpec("A"), make_series(np.full(30, 5.0)))
        result = ets.forecast(fit, 6, level=0.95, num_paths=500, seed=1)
        assert np.all(result.upper - result.lower <= 1e-4)

    def test_same_seed_identical(self):
        fit = ets.fit(EtsSpec("A", "A"), random_walk_series(2))
        a = ets.forecast(fit, 6, num_paths=300, seed=99)
        b = ets.forecast(fit, 6, num_paths=300, seed=99)
        assert np.array_equal(a.point, b.point)
        assert np.array_equal(a.lower, b.lower)
        assert np.array_equal(a.upper, b.upper)
        c = ets.forecast(fit, 6, num_paths=300, seed=100)
        assert not np.array_equal(c.lower, b.lower)

    def test_one_step_gaussian_interval(self):
        # ANN with sigma2 = 1: the 95% one-step interval half-width is 1.96
        fit = EtsFit(
            spec=EtsSpec("A"), period=1, alpha=0.3, beta=None, gamma=None, phi=None,
            initial_level=10.0, initial_trend=None, initial_seasonal=None,
            final_level=10.0, final_trend=None, final_seasonal=None,
            log_likelihood=-10.0, num_params=3, sigma2=1.0, train_length=30)
        result = ets.forecast(fit, 1, level=0.95, num_paths=20000, seed=5)
        half_width = (result.upper[0] - result.lower[0]) / 2.0
        assert half_width == pytest.approx(1.96, rel=0.02)
        assert result.point[0] == pytest.approx(10.0)

    def test_bad_horizon(self):
        fit = ets.fit(EtsSpec("A"), make_series(np.full(10, 3.0)))
        with pytest.raises(ValueError):
            ets.forecast(fit, 0)
        with pytest.raises(ValueError):
            ets.point_forecast(fit, -1)

    def test_bounds_ordered(self):
        fit = ets.fit(EtsSpec("M", "A"), random_walk_series(4))
        result = ets.forecast(fit, 8, num_paths=400, seed=0)
        assert np.all(result.lower <= result.upper)

    def test_result_validation(self):
        with pytest.raises(ValueError, match="lower bound exceeds"):
            ForecastResult(point=np.array([1.0]), lower=np.array([2.0]),
                           upper=np.array([1.0]), level=0.95)
        with pytest.raises(ValueError, match="level"):
            ForecastResult(point=np.array([1.0]), lower=np.array([0.0]),
                           upper=np.array([2.0]), level=1.5)


def _hand_fit(loglik, k, t):
    return EtsFit(
        spec=EtsSpec("A"), period=1, alpha=0.5, beta=None, gamma=None, phi=None,
        initial_level=0.0, initial_trend=None, initial_seasonal=None,
        final_level=0.0, final_trend=None, final_seasonal=None,
        log_likelihood=loglik, num_params=k, sigma2=1.0, train_length=t)


class TestInformationCriteria:
    def test_aic_hand_value(self):
        assert ets.aic(_hand_fit(-100.0, 3, 30)) == 206.0

    def test_bic_formula(self):
        assert ets.bic(_hand_fit(-100.0, 3, 25)) == pytest.approx(200.0 + 3.0 * math.log(25), abs=1e-12)

    def test_zero_params_identity(self):
        fit = _hand_fit(-100.0, 0, 30)
        assert ets.aic(fit) == ets.bic(fit) == 200.0

    def test_aicc(self):
        assert ets.aicc(_hand_fit(-100.0, 3, 10)) == pytest.approx(206.0 + 24.0 / 6.0)
        with pytest.raises(ValueError):
            ets.aicc(_hand_fit(-100.0, 3, 4))

    def test_bic_penalty_monotone_in_k(self):
        # identical likelihoods: the smaller model wins on BIC
        small = _hand_fit(-50.0, 3, 40)
        large = _hand_fit(-50.0, 5, 40)
        assert ets.bic(small) < ets.bic(large)


class TestMinFitLength:
    def test_values(self):
        assert ets.min_fit_length(EtsSpec("A"), 1) == 1 + 1 + 3
        assert ets.min_fit_length(EtsSpec("M", "A", damped=True), 1) == 3 + 2 + 3
        assert ets.min_fit_length(EtsSpec("M", "A", damped=True, seasonal="M"), 12) == 4 + 13 + 3

    def test_boundary(self):
        # strictly-exceeds rule: a series of exactly min length is unfittable
        spec = EtsSpec("A")
        n = ets.min_fit_length(spec, 1)
        with pytest.raises(UnfittableModelError):
            ets.fit(spec, make_series(np.arange(1.0, n + 1.0)))
        ets.fit(spec, make_series(np.arange(1.0, n + 2.0)))
