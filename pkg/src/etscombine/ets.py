"""Exponential-smoothing state-space models.

Covers the standard innovations formulation of the error/trend/seasonal
taxonomy: additive or multiplicative error, optional (damped) additive
trend, and none/additive/multiplicative seasonality. Additive error
combined with multiplicative seasonality is rejected, multiplicative
trends are not implemented. Fitting maximises the Gaussian innovations
likelihood with Nelder-Mead on transformed parameters; see
docs/derivations.md for the recursions and the likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._kernels import BIG, _decode, _filter_traces, _nelder_mead
from .corpus import Frequency, TimeSeries
from .errors import UnfittableModelError

_ERROR_CODES = {"A": 0, "M": 1}
_TREND_CODES = {"N": 0, "A": 1}
_SEASONAL_CODES = {"N": 0, "A": 1, "M": 2}

# Deterministic optimizer configuration: three starting values for alpha,
# companions beta = alpha/2, gamma = (1-alpha)/2, phi ~ 0.89.
_ALPHA_STARTS = (0.1, 0.5, 0.9)
_MAXITER_PER_DIM = 200
_FATOL = 1e-10
_XATOL = 1e-8
_POLISH_ROUNDS = 3
_POLISH_MIN_GAIN = 1e-9


@dataclass(frozen=True)
class EtsSpec:
    """A model form: error, trend, damping, seasonality (letter codes)."""

    error: str
    trend: str = "N"
    damped: bool = False
    seasonal: str = "N"

    def __post_init__(self) -> None:
        if self.error not in _ERROR_CODES:
            raise ValueError(f"error must be A or M, got {self.error!r}")
        if self.trend not in _TREND_CODES:
            raise ValueError(f"trend must be N or A, got {self.trend!r}")
        if self.seasonal not in _SEASONAL_CODES:
            raise ValueError(f"seasonal must be N, A or M, got {self.seasonal!r}")
        if self.damped and self.trend != "A":
            raise ValueError("damped requires an additive trend")
        if self.error == "A" and self.seasonal == "M":
            raise ValueError("additive error with multiplicative seasonality is not supported")

    @property
    def acronym(self) -> str:
        trend = self.trend + "d" if self.damped else self.trend
        return f"{self.error}{trend}{self.seasonal}"

    @classmethod
    def from_acronym(cls, text: str) -> "EtsSpec":
        text = text.strip()
        if len(text) == 4 and text[2] == "d":
            return cls(error=text[0], trend=text[1], damped=True, seasonal=text[3])
        if len(text) == 3:
            return cls(error=text[0], trend=text[1], damped=False, seasonal=text[2])
        raise ValueError(f"unrecognised model acronym {text!r}")

    def __str__(self) -> str:
        return self.acronym


def model_pool(frequency: Frequency | str) -> list[EtsSpec]:
    """Candidate model forms for a sampling frequency.

    Seasonal frequencies get 15 forms, yearly the 6 non-seasonal ones.
    Order is fixed: seasonality none/additive/multiplicative outermost,
    then trend none/additive/damped, then error additive/multiplicative,
    skipping additive error with multiplicative seasonality. The yearly
    order is therefore ANN, MNN, AAN, MAN, AAdN, MAdN.
    """
    frequency = Frequency(frequency)
    seasonal_options = ["N"] if frequency == Frequency.YEARLY else ["N", "A", "M"]
    pool: list[EtsSpec] = []
    for seasonal in seasonal_options:
        for trend, damped in (("N", False), ("A", False), ("A", True)):
            for error in ("A", "M"):
                if error == "A" and seasonal == "M":
                    continue
                pool.append(EtsSpec(error=error, trend=trend, damped=damped, seasonal=seasonal))
    return pool


def num_params(spec: EtsSpec, period: int) -> int:
    """Estimated-parameter count: smoothing + free initial states + variance."""
    n_smooth = 1 + (spec.trend == "A") + (spec.seasonal != "N") + spec.damped
    n_states = 1 + (spec.trend == "A") + ((period - 1) if spec.seasonal != "N" else 0)
    return n_smooth + n_states + 1


def min_fit_length(spec: EtsSpec, period: int) -> int:
    """Smallest training length NOT sufficient to fit the model.

    A series is fittable when its training length strictly exceeds this:
    free initial states + smoothing parameters + 3.
    """
    n_smooth = 1 + (spec.trend == "A") + (spec.seasonal != "N") + spec.damped
    n_states = 1 + (spec.trend == "A") + ((period - 1) if spec.seasonal != "N" else 0)
    return n_states + n_smooth + 3


@dataclass(frozen=True)
class EtsFit:
    """Maximum-likelihood parameters and states for one model on one series."""

    spec: EtsSpec
    period: int
    alpha: float
    beta: float | None
    gamma: float | None
    phi: float | None
    initial_level: float
    initial_trend: float | None
    initial_seasonal: tuple[float, ...] | None
    final_level: float
    final_trend: float | None
    final_seasonal: tuple[float, ...] | None
    log_likelihood: float
    num_params: int
    sigma2: float
    train_length: int

    def to_dict(self) -> dict:
        return {
            "model": self.spec.acronym,
            "period": self.period,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "phi": self.phi,
            "initial_level": self.initial_level,
            "initial_trend": self.initial_trend,
            "initial_seasonal": list(self.initial_seasonal) if self.initial_seasonal else None,
            "final_level": self.final_level,
            "final_trend": self.final_trend,
            "final_seasonal": list(self.final_seasonal) if self.final_seasonal else None,
            "log_likelihood": self.log_likelihood,
            "num_params": self.num_params,
            "sigma2": self.sigma2,
            "train_length": self.train_length,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EtsFit":
        return cls(
            spec=EtsSpec.from_acronym(data["model"]),
            period=int(data["period"]),
            alpha=float(data["alpha"]),
            beta=None if data["beta"] is None else float(data["beta"]),
            gamma=None if data["gamma"] is None else float(data["gamma"]),
            phi=None if data["phi"] is None else float(data["phi"]),
            initial_level=float(data["initial_level"]),
            initial_trend=None if data["initial_trend"] is None else float(data["initial_trend"]),
            initial_seasonal=None if data["initial_seasonal"] is None
            else tuple(float(v) for v in data["initial_seasonal"]),
            final_level=float(data["final_level"]),
            final_trend=None if data["final_trend"] is None else float(data["final_trend"]),
            final_seasonal=None if data["final_seasonal"] is None
            else tuple(float(v) for v in data["final_seasonal"]),
            log_likelihood=float(data["log_likelihood"]),
            num_params=int(data["num_params"]),
            sigma2=float(data["sigma2"]),
            train_length=int(data["train_length"]),
        )


@dataclass(frozen=True)
class FilteredStates:
    """State trajectories from running a fit's recursion over a series."""

    levels: np.ndarray      # length T+1, levels[0] is the initial level
    trends: np.ndarray      # length T+1, zeros when the model has no trend
    seasonals: np.ndarray   # length T+m, seasonals[:m] are the initial indices
    fitted: np.ndarray      # one-step-ahead conditional means
    residuals: np.ndarray   # innovations (relative for multiplicative error)


@dataclass(frozen=True, eq=False)
class ForecastResult:
    """Point forecasts with lower/upper interval bounds at one level."""

    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float

    def __post_init__(self) -> None:
        point = np.asarray(self.point, dtype=np.float64)
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if not (point.shape == lower.shape == upper.shape) or point.ndim != 1:
            raise ValueError("point/lower/upper must be 1-d arrays of equal length")
        if not 0.0 < self.level < 1.0:
            raise ValueError("interval level must lie in (0, 1)")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def horizon(self) -> int:
        return int(self.point.size)


def _codes(spec: EtsSpec) -> tuple[int, int, bool, int]:
    return (
        _ERROR_CODES[spec.error],
        _TREND_CODES[spec.trend],
        bool(spec.damped),
        _SEASONAL_CODES[spec.seasonal],
    )


def _heuristic_states(y: np.ndarray, m: int, sc: int) -> tuple[float, float, np.ndarray | None]:
    """Decomposition-style starting values, refined jointly by the optimizer."""
    n = y.size
    level = float(np.mean(y[:m])) if m > 1 else float(y[0])
    span = min(n, max(2 * m, 10))
    trend = float(np.mean(np.diff(y[:span]))) if span >= 2 else 0.0
    seasonal = None
    if sc > 0:
        t = np.arange(n, dtype=np.float64)
        base = level + trend * t
        if sc == 1:
            detrended = y - base
            seasonal = np.array([detrended[pos::m].mean() for pos in range(m)])
            seasonal -= seasonal.mean()
        else:
            ratio = y / np.maximum(base, 1e-8)
            seasonal = np.array([ratio[pos::m].mean() for pos in range(m)])
            seasonal = np.maximum(seasonal, 0.05)
            seasonal *= m / seasonal.sum()
    return level, trend, seasonal


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def fit(spec: EtsSpec, series: TimeSeries,
        fixed: Mapping[str, float] | None = None) -> EtsFit:
    """Fit a model form to a series by maximum likelihood.

    Deterministic: three fixed optimizer starts, best final likelihood
    wins, earlier start wins ties. `fixed` pins smoothing parameters
    (keys among alpha/beta/gamma/phi) instead of estimating them.
    Raises UnfittableModelError when the series is too short, violates
    the positivity requirement of multiplicative components, or no start
    reaches a finite likelihood.
    """
    y = np.asarray(series.values, dtype=np.float64)
    n = y.size
    ec, tc, damped, sc = _codes(spec)
    m = series.period if sc > 0 else 1

    if sc > 0 and series.period == 1:
        raise ValueError(f"seasonal model {spec.acronym} on non-seasonal series {series.id!r}")
    if n <= min_fit_length(spec, m):
        raise UnfittableModelError(
            f"series {series.id!r} too short for {spec.acronym} ({n} obs)")
    if (ec == 1 or sc == 2) and not np.all(y > 0.0):
        raise UnfittableModelError(
            f"series {series.id!r} has non-positive values; {spec.acronym} needs positive data")

    scale = float(np.mean(np.abs(y)))
    if scale <= 0.0:
        scale = 1.0
    ys = y / scale

    fixed = dict(fixed or {})
    unknown = set(fixed) - {"alpha", "beta", "gamma", "phi"}
    if unknown:
        raise ValueError(f"cannot fix parameters {sorted(unknown)}")
    fixed_arr = np.array([
        fixed.get("alpha", np.nan),
        fixed.get("beta", np.nan),
        fixed.get("gamma", np.nan),
        fixed.get("phi", np.nan),
    ])

    level0, trend0, seasonal0 = _heuristic_states(ys, m, sc)

    theta_states: list[float] = [level0]
    step_states: list[float] = [0.1 * (abs(level0) + 0.1)]
    if tc == 1:
        theta_states.append(trend0)
        step_states.append(0.1 * (abs(trend0) + 0.05))
    if sc > 0:
        theta_states.extend(seasonal0[: m - 1])
        step_states.extend(0.1 * (np.abs(seasonal0[: m - 1]) + 0.1))

    free_smooth: list[int] = [0]
    if tc == 1:
        free_smooth.append(1)
    if sc > 0:
        free_smooth.append(2)
    if damped:
        free_smooth.append(3)
    free_smooth = [i for i in free_smooth if np.isnan(fixed_arr[i])]

    best_theta = None
    best_obj = np.inf
    for alpha_start in _ALPHA_STARTS:
        start_smooth = {0: _logit(alpha_start), 1: 0.0, 2: 0.0, 3: 0.0}
        theta0 = np.array([start_smooth[i] for i in free_smooth] + theta_states)
        steps = np.array([1.0] * len(free_smooth) + step_states)
        maxiter = _MAXITER_PER_DIM * theta0.size
        theta, obj = _nelder_mead(theta0, steps, ys, m, ec, tc, damped, sc,
                                  fixed_arr, maxiter, _FATOL, _XATOL)
        for _ in range(_POLISH_ROUNDS):
            theta2, obj2 = _nelder_mead(theta, steps, ys, m, ec, tc, damped, sc,
                                        fixed_arr, maxiter, _FATOL, _XATOL)
            if obj - obj2 < _POLISH_MIN_GAIN:
                if obj2 < obj:
                    theta, obj = theta2, obj2
                break
            theta, obj = theta2, obj2
        if obj < best_obj:
            best_theta, best_obj = theta, obj

    if best_theta is None or not np.isfinite(best_obj) or best_obj >= BIG:
        raise UnfittableModelError(f"no finite likelihood for {spec.acronym} on series {series.id!r}")

    alpha, beta, gamma, phi, l0, b0, s0 = _decode(best_theta, m, tc, damped, sc, fixed_arr)
    sse, slogr, ok, lev, tre, shist, _, _ = _filter_traces(
        ys, m, ec, tc, damped, sc, alpha, beta, gamma, phi, l0, b0, s0)
    if not ok:
        raise UnfittableModelError(f"degenerate optimum for {spec.acronym} on series {series.id!r}")

    sigma2 = sse / n
    loglik = -0.5 * (n * math.log(2.0 * math.pi * max(sse, 1e-300) / n) + n) - slogr
    loglik -= n * math.log(scale)

    state_scale = scale  # additive components live in data units
    return EtsFit(
        spec=spec,
        period=m,
        alpha=float(alpha),
        beta=float(beta) if tc == 1 else None,
        gamma=float(gamma) if sc > 0 else None,
        phi=float(phi) if damped else None,
        initial_level=float(l0 * state_scale),
        initial_trend=float(b0 * state_scale) if tc == 1 else None,
        initial_seasonal=tuple(
            float(v) for v in (s0 * state_scale if sc == 1 else s0)) if sc > 0 else None,
        final_level=float(lev[n] * state_scale),
        final_trend=float(tre[n] * state_scale) if tc == 1 else None,
        final_seasonal=tuple(
            float(v) for v in (shist[n: n + m] * state_scale if sc == 1 else shist[n: n + m]))
        if sc > 0 else None,
        log_likelihood=float(loglik),
        num_params=num_params(spec, m),
        sigma2=float(sigma2 * scale * scale) if ec == 0 else float(sigma2),
        train_length=n,
    )


def filter_states(fit_result: EtsFit, series: TimeSeries) -> FilteredStates:
    """Re-run the fitted recursion over a series, returning trajectories."""
    y = np.asarray(series.values, dtype=np.float64)
    ec, tc, damped, sc = _codes(fit_result.spec)
    m = fit_result.period
    s0 = np.array(fit_result.initial_seasonal) if sc > 0 else np.zeros(m)
    sse, slogr, ok, lev, tre, shist, fitted, resid = _filter_traces(
        y, m, ec, tc, damped, sc,
        fit_result.alpha,
        fit_result.beta or 0.0,
        fit_result.gamma or 0.0,
        fit_result.phi if fit_result.phi is not None else 1.0,
        fit_result.initial_level,
        fit_result.initial_trend or 0.0,
        s0,
    )
    if not ok:
        raise ValueError("recursion failed for the given parameters and data")
    return FilteredStates(levels=lev, trends=tre, seasonals=shist, fitted=fitted, residuals=resid)


def _propagate(ec: int, tc: int, damped: bool, sc: int, m: int,
               alpha: float, beta: float, gamma: float, phi: float,
               level: np.ndarray, trend: np.ndarray, seasonal: np.ndarray,
               eps: np.ndarray) -> np.ndarray:
    """Propagate the recursion horizon steps forward for a batch of paths.

    level/trend have shape (paths,), seasonal (paths, m) oldest index
    first, eps (paths, h). With eps = 0 this yields the point forecasts.
    """
    paths, horizon = eps.shape
    out = np.empty((paths, horizon))
    level = level.copy()
    trend = trend.copy()
    seasonal = seasonal.copy()
    for j in range(horizon):
        if tc == 1:
            damped_trend = phi * trend if damped else trend
            base = level + damped_trend
        else:
            damped_trend = 0.0
            base = level
        if sc == 0:
            mu = base
        else:
            s = seasonal[:, j % m]
            mu = base + s if sc == 1 else base * s
        e = eps[:, j]
        out[:, j] = mu + e if ec == 0 else mu * (1.0 + e)

        if ec == 0:
            level = base + alpha * e
            if tc == 1:
                trend = damped_trend + beta * e
            if sc == 1:
                seasonal[:, j % m] = s + gamma * e
        else:
            if sc == 0:
                level = base * (1.0 + alpha * e)
                if tc == 1:
                    trend = damped_trend + beta * base * e
            elif sc == 1:
                level = base + alpha * mu * e
                if tc == 1:
                    trend = damped_trend + beta * mu * e
                seasonal[:, j % m] = s + gamma * mu * e
            else:
                level = base * (1.0 + alpha * e)
                if tc == 1:
                    trend = damped_trend + beta * base * e
                seasonal[:, j % m] = s * (1.0 + gamma * e)
    return out


def _final_state_arrays(fit_result: EtsFit, paths: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m = fit_result.period
    level = np.full(paths, fit_result.final_level)
    trend = np.full(paths, fit_result.final_trend or 0.0)
    if fit_result.final_seasonal is not None:
        seasonal = np.tile(np.array(fit_result.final_seasonal), (paths, 1))
    else:
        seasonal = np.ones((paths, m))
    return level, trend, seasonal


def point_forecast(fit_result: EtsFit, h: int) -> np.ndarray:
    """Deterministic forecasts: the recursion iterated with zero innovations."""
    if h < 1:
        raise ValueError("horizon must be positive")
    ec, tc, damped, sc = _codes(fit_result.spec)
    level, trend, seasonal = _final_state_arrays(fit_result, 1)
    eps = np.zeros((1, h))
    return _propagate(ec, tc, damped, sc, fit_result.period,
                      fit_result.alpha, fit_result.beta or 0.0, fit_result.gamma or 0.0,
                      fit_result.phi if fit_result.phi is not None else 1.0,
                      level, trend, seasonal, eps)[0]


def forecast(fit_result: EtsFit, h: int, level: float = 0.95,
             num_paths: int = 5000, seed: int | Sequence[int] = 0) -> ForecastResult:
    """Point forecasts plus simulated prediction intervals.

    Intervals are empirical quantiles, tail probability (1-level)/2 per
    side, over num_paths sample paths with Gaussian innovations drawn
    from a generator seeded with `seed`; identical inputs give identical
    output bits.
    """
    if h < 1:
        raise ValueError("horizon must be positive")
    if not 0.0 < level < 1.0:
        raise ValueError("interval level must lie in (0, 1)")
    if num_paths < 1:
        raise ValueError("num_paths must be positive")
    ec, tc, damped, sc = _codes(fit_result.spec)
    m = fit_result.period
    args = (fit_result.alpha, fit_result.beta or 0.0, fit_result.gamma or 0.0,
            fit_result.phi if fit_result.phi is not None else 1.0)

    point = point_forecast(fit_result, h)

    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((num_paths, h)) * math.sqrt(max(fit_result.sigma2, 0.0))
    lvl, trd, sea = _final_state_arrays(fit_result, num_paths)
    paths = _propagate(ec, tc, damped, sc, m, *args, lvl, trd, sea, eps)
    tail = (1.0 - level) / 2.0
    lower = np.quantile(paths, tail, axis=0)
    upper = np.quantile(paths, 1.0 - tail, axis=0)
    return ForecastResult(point=point, lower=np.minimum(lower, upper),
                          upper=np.maximum(lower, upper), level=level)


def bic(fit_result: EtsFit) -> float:
    """Schwarz criterion: -2 logL + k ln(T)."""
    return -2.0 * fit_result.log_likelihood + fit_result.num_params * math.log(fit_result.train_length)


def aic(fit_result: EtsFit) -> float:
    """Akaike criterion: -2 logL + 2k."""
    return -2.0 * fit_result.log_likelihood + 2.0 * fit_result.num_params


def aicc(fit_result: EtsFit) -> float:
    """Small-sample corrected AIC; requires T > k + 1."""
    k = fit_result.num_params
    t = fit_result.train_length
    if t <= k + 1:
        raise ValueError(f"aicc undefined for T={t}, k={k}")
    return aic(fit_result) + 2.0 * k * (k + 1) / (t - k - 1)
