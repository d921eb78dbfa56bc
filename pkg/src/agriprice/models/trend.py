"""Decomposable forecaster: piecewise-linear trend + Fourier yearly seasonality.

The regression is

    y(t) = b0 + b1*t + sum_j delta_j * max(0, t - cp_j) + seasonal(t) [+ exog]

with changepoints spaced one per month across the first `changepoint_range`
fraction of the training span and only the slope-delta columns ridge-penalized
(weight 1 / prior_scale^2), which is the MAP version of the usual Laplace
changepoint prior.  Everything is deterministic linear algebra: normal
equations solved by Cholesky.

Time enters the normal equations scaled to [0, 1] over the training span for
conditioning; stored slopes are converted back to per-day units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import EXOGENOUS_COLUMNS, PRICE_COLUMN, FeatureFrame
from ..errors import SingularSystemError, TooShortError

DAYS_PER_MONTH = 365.25 / 12


@dataclass(frozen=True)
class TrendParams:
    growth: str = "linear"
    changepoint_range: float = 0.8
    prior_scale: float = 0.05
    fourier_order: int = 10
    season_period: float = 365.25  # days

    def __post_init__(self):
        if self.growth != "linear":
            raise ValueError("only linear growth is supported")
        if not 0 < self.changepoint_range <= 1:
            raise ValueError("changepoint_range must be in (0, 1]")
        if self.prior_scale <= 0 or self.fourier_order < 1:
            raise ValueError("need prior_scale > 0 and fourier_order >= 1")


@dataclass(frozen=True, eq=False)
class TrendModel:
    base_intercept: float
    base_slope: float                # MYR per day
    changepoint_times: np.ndarray    # day offsets from training start
    slope_deltas: np.ndarray         # MYR per day each
    seasonal_coeffs: np.ndarray      # sin/cos pairs, 2 * fourier_order
    exog_coeffs: np.ndarray          # empty in univariate mode
    exog_names: tuple[str, ...]
    exog_last: np.ndarray            # last observed exogenous row
    params: TrendParams
    train_span_days: float
    last_t_days: float               # day offset of the final training week

    def __post_init__(self):
        for name in ("changepoint_times", "slope_deltas", "seasonal_coeffs",
                     "exog_coeffs", "exog_last"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        cps = self.changepoint_times
        if len(cps) != len(self.slope_deltas):
            raise ValueError("one slope delta per changepoint")
        if len(cps) and (np.any(np.diff(cps) <= 0)
                         or cps[-1] > self.params.changepoint_range * self.train_span_days + 1e-9):
            raise ValueError("changepoints must increase within the changepoint range")


def monthly_changepoints(span_days: float, changepoint_range: float) -> np.ndarray:
    """One changepoint per month of span, evenly spread over the first
    changepoint_range fraction, excluding t = 0."""
    count = int(math.floor(span_days / DAYS_PER_MONTH))
    if count < 1:
        return np.empty(0)
    return np.linspace(0.0, changepoint_range * span_days, count + 1)[1:]


def build_design_matrix(t_days: np.ndarray, changepoints: np.ndarray,
                        fourier_order: int, period: float = 365.25) -> np.ndarray:
    """Columns: [1, t, hinge per changepoint, sin/cos pairs k = 1..order]."""
    t = np.asarray(t_days, dtype=float)
    cols = [np.ones(len(t)), t]
    for cp in changepoints:
        cols.append(np.maximum(0.0, t - cp))
    for k in range(1, fourier_order + 1):
        w = 2.0 * np.pi * k * t / period
        cols.append(np.sin(w))
        cols.append(np.cos(w))
    return np.column_stack(cols)


def fit(frame: FeatureFrame, params: TrendParams = TrendParams(),
        multivariate: bool = False) -> TrendModel:
    """Penalized least squares on day offsets; missing price rows are skipped."""
    if len(frame) < 104:
        raise TooShortError("need at least 104 weekly points (two seasonal cycles)")
    t_all = np.array([(ts - frame.timestamps[0]).days for ts in frame.timestamps], dtype=float)
    y_all = frame.column(PRICE_COLUMN)
    keep = ~np.isnan(y_all)
    exog_names = tuple(c for c in EXOGENOUS_COLUMNS if c in frame.exogenous) if multivariate else ()
    for name in exog_names:
        keep &= ~np.isnan(frame.column(name))
    t, y = t_all[keep], y_all[keep]
    if len(t) < 104:
        raise TooShortError("fewer than 104 usable rows after skipping gaps")

    span = float(t_all[-1])
    cps = monthly_changepoints(span, params.changepoint_range)
    X = build_design_matrix(t, cps, params.fourier_order, params.season_period)
    # rescale the trend block to [0, 1] time for conditioning
    n_trend = 1 + len(cps)
    X[:, 1:1 + n_trend] /= span
    if exog_names:
        X = np.hstack([X, np.column_stack([frame.column(c)[keep] for c in exog_names])])

    penalty = np.zeros(X.shape[1])
    penalty[2:2 + len(cps)] = 1.0 / params.prior_scale**2
    A = X.T @ X + np.diag(penalty)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise SingularSystemError("normal equations are not positive definite") from None
    beta = np.linalg.solve(L.T, np.linalg.solve(L, X.T @ y))

    k = 2 + len(cps)
    return TrendModel(
        base_intercept=float(beta[0]),
        base_slope=float(beta[1] / span),
        changepoint_times=cps,
        slope_deltas=beta[2:k] / span,
        seasonal_coeffs=beta[k:k + 2 * params.fourier_order],
        exog_coeffs=beta[k + 2 * params.fourier_order:],
        exog_names=exog_names,
        exog_last=np.array([frame.column(c)[keep][-1] for c in exog_names]),
        params=params,
        train_span_days=span,
        last_t_days=float(t_all[-1]),
    )


def predict_at(model: TrendModel, t_days: np.ndarray) -> np.ndarray:
    """Model curve at arbitrary day offsets; exogenous held at the last row."""
    X = build_design_matrix(np.asarray(t_days, float), model.changepoint_times,
                            model.params.fourier_order, model.params.season_period)
    coeffs = np.concatenate([
        [model.base_intercept],
        [model.base_slope],
        model.slope_deltas,
        model.seasonal_coeffs,
    ])
    out = X @ coeffs
    if len(model.exog_coeffs):
        out = out + model.exog_coeffs @ model.exog_last
    return out


def forecast(model: TrendModel, horizon: int) -> np.ndarray:
    """Weekly steps past the end of training; the final slope extrapolates."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    t_future = model.last_t_days + 7.0 * np.arange(1, horizon + 1)
    return predict_at(model, t_future)
