"""Uniform fit/forecast adapters over the five model families.

Every adapter fits from a FeatureFrame, forecasts any horizon in MYR, and
round-trips through a JSON-safe payload dict, so the engine can treat the
families interchangeably and artifacts can be restored without the
training data.  Adapters that forecast recursively (SVR, GBT) or from a
lookback window (LSTM) keep the raw history tail they need inside the
payload.
"""

from __future__ import annotations

from datetime import date

import numpy as np

from ..core import (
    EXOGENOUS_COLUMNS,
    PRICE_COLUMN,
    WEEK,
    FeatureFrame,
    MinMaxScaler,
    Series,
    scale_fit_transform,
    weekly_timestamps,
)
from ..models import arima, gbt, lstm, svr, trend

FAMILY_ORDER = ("arima", "trend", "svr", "gbt", "lstm")
MODES = ("univariate", "multivariate")

UNIVARIATE = "univariate"
MULTIVARIATE = "multivariate"


def _tail_frame(last_timestamp: str, prices: list[float],
                exog_tail: dict[str, list[float]]) -> FeatureFrame:
    """Rebuild the minimal history frame a recursive forecaster needs."""
    n = len(prices)
    last = date.fromisoformat(last_timestamp)
    start = last - (n - 1) * WEEK
    base = Series(weekly_timestamps(start, n), np.array(prices))
    exo = {name: np.array(values) for name, values in exog_tail.items()}
    return FeatureFrame(base, exo)


def _frame_tail_payload(frame: FeatureFrame, rows: int, with_exog: bool) -> dict:
    tail = frame.slice(len(frame) - rows, len(frame))
    exog = {}
    if with_exog:
        exog = {c: tail.column(c).tolist() for c in EXOGENOUS_COLUMNS}
    return {
        "last_timestamp": tail.timestamps[-1].isoformat(),
        "prices": tail.column(PRICE_COLUMN).tolist(),
        "exog": exog,
    }


class ArimaForecaster:
    family = "arima"
    DEFAULT_HYPER = {"order": (1, 1, 0)}

    def __init__(self, hyper: dict | None = None, mode: str = UNIVARIATE):
        if mode != UNIVARIATE:
            raise ValueError("arima supports univariate mode only")
        self.hyper = {**self.DEFAULT_HYPER, **(hyper or {})}
        self.mode = mode
        self.model: arima.ArimaModel | None = None

    def fit(self, frame: FeatureFrame) -> "ArimaForecaster":
        order = arima.ArimaOrder(*self.hyper["order"])
        self.model = arima.fit(frame.base, order)
        return self

    def forecast(self, horizon: int) -> np.ndarray:
        return arima.forecast(self.model, horizon)

    def payload(self) -> dict:
        m = self.model
        return {
            "order": list(m.order.as_tuple()),
            "intercept": m.intercept,
            "ar_coeffs": m.ar_coeffs.tolist(),
            "ma_coeffs": m.ma_coeffs.tolist(),
            "sigma2": m.sigma2,
            "w_tail": m.w_tail.tolist(),
            "resid_tail": m.resid_tail.tolist(),
            "level_tails": m.level_tails.tolist(),
            "aic": m.aic,
            "nobs": m.nobs,
        }

    @classmethod
    def restore(cls, hyper: dict, mode: str, payload: dict) -> "ArimaForecaster":
        self = cls(hyper, mode)
        self.model = arima.ArimaModel(
            order=arima.ArimaOrder(*payload["order"]),
            intercept=payload["intercept"],
            ar_coeffs=np.array(payload["ar_coeffs"]),
            ma_coeffs=np.array(payload["ma_coeffs"]),
            sigma2=payload["sigma2"],
            w_tail=np.array(payload["w_tail"]),
            resid_tail=np.array(payload["resid_tail"]),
            level_tails=np.array(payload["level_tails"]),
            aic=payload["aic"],
            nobs=payload["nobs"],
        )
        return self


class TrendForecaster:
    family = "trend"
    DEFAULT_HYPER = {"prior_scale": 0.05, "fourier_order": 10}

    def __init__(self, hyper: dict | None = None, mode: str = UNIVARIATE):
        self.hyper = {**self.DEFAULT_HYPER, **(hyper or {})}
        self.mode = mode
        self.model: trend.TrendModel | None = None

    def fit(self, frame: FeatureFrame) -> "TrendForecaster":
        params = trend.TrendParams(prior_scale=self.hyper["prior_scale"],
                                   fourier_order=self.hyper["fourier_order"])
        self.model = trend.fit(frame, params, multivariate=self.mode == MULTIVARIATE)
        return self

    def forecast(self, horizon: int) -> np.ndarray:
        return trend.forecast(self.model, horizon)

    def payload(self) -> dict:
        m = self.model
        return {
            "base_intercept": m.base_intercept,
            "base_slope": m.base_slope,
            "changepoint_times": m.changepoint_times.tolist(),
            "slope_deltas": m.slope_deltas.tolist(),
            "seasonal_coeffs": m.seasonal_coeffs.tolist(),
            "exog_coeffs": m.exog_coeffs.tolist(),
            "exog_names": list(m.exog_names),
            "exog_last": m.exog_last.tolist(),
            "prior_scale": m.params.prior_scale,
            "fourier_order": m.params.fourier_order,
            "season_period": m.params.season_period,
            "changepoint_range": m.params.changepoint_range,
            "train_span_days": m.train_span_days,
            "last_t_days": m.last_t_days,
        }

    @classmethod
    def restore(cls, hyper: dict, mode: str, payload: dict) -> "TrendForecaster":
        self = cls(hyper, mode)
        params = trend.TrendParams(
            prior_scale=payload["prior_scale"],
            fourier_order=payload["fourier_order"],
            season_period=payload["season_period"],
            changepoint_range=payload["changepoint_range"],
        )
        self.model = trend.TrendModel(
            base_intercept=payload["base_intercept"],
            base_slope=payload["base_slope"],
            changepoint_times=np.array(payload["changepoint_times"]),
            slope_deltas=np.array(payload["slope_deltas"]),
            seasonal_coeffs=np.array(payload["seasonal_coeffs"]),
            exog_coeffs=np.array(payload["exog_coeffs"]),
            exog_names=tuple(payload["exog_names"]),
            exog_last=np.array(payload["exog_last"]),
            params=params,
            train_span_days=payload["train_span_days"],
            last_t_days=payload["last_t_days"],
        )
        return self


class SvrForecaster:
    family = "svr"
    DEFAULT_HYPER = {"c": 1.0, "epsilon": 0.1, "window": 8, "gamma": None}

    def __init__(self, hyper: dict | None = None, mode: str = UNIVARIATE):
        self.hyper = {**self.DEFAULT_HYPER, **(hyper or {})}
        self.mode = mode
        self.model: svr.SvrModel | None = None
        self._tail: dict | None = None

    def fit(self, frame: FeatureFrame) -> "SvrForecaster":
        multivariate = self.mode == MULTIVARIATE
        scaled, scaler = scale_fit_transform(frame)
        params = svr.SvrParams(c=self.hyper["c"], epsilon=self.hyper["epsilon"],
                               gamma=self.hyper["gamma"], window=self.hyper["window"])
        X, y = svr.make_supervised(scaled, params.window, multivariate)
        self.model = svr.fit(X, y, params, scaler=scaler)
        self._tail = _frame_tail_payload(frame, params.window, multivariate)
        return self

    def forecast(self, horizon: int) -> np.ndarray:
        tail = _tail_frame(self._tail["last_timestamp"], self._tail["prices"],
                           self._tail["exog"])
        return svr.forecast(self.model, tail, horizon)

    def payload(self) -> dict:
        m = self.model
        return {
            "support_vectors": m.support_vectors.tolist(),
            "dual_coeffs": m.dual_coeffs.tolist(),
            "bias": m.bias,
            "c": m.params.c,
            "epsilon": m.params.epsilon,
            "gamma": m.params.gamma,
            "window": m.params.window,
            "n_features": m.n_features,
            "scaler": {k: list(v) for k, v in m.scaler.bounds.items()},
            "tail": self._tail,
        }

    @classmethod
    def restore(cls, hyper: dict, mode: str, payload: dict) -> "SvrForecaster":
        self = cls(hyper, mode)
        sv = np.array(payload["support_vectors"], dtype=float)
        if sv.size == 0:
            sv = sv.reshape(0, payload["n_features"])
        self.model = svr.SvrModel(
            support_vectors=sv,
            dual_coeffs=np.array(payload["dual_coeffs"]),
            bias=payload["bias"],
            params=svr.SvrParams(c=payload["c"], epsilon=payload["epsilon"],
                                 gamma=payload["gamma"], window=payload["window"]),
            n_features=payload["n_features"],
            scaler=MinMaxScaler({k: tuple(v) for k, v in payload["scaler"].items()}),
        )
        self._tail = payload["tail"]
        return self


def _tree_to_list(node: gbt.TreeNode) -> list:
    """Preorder flattening: [feature, threshold, weight] per node, -1 = leaf."""
    out = []

    def walk(n):
        out.append([n.feature, n.threshold, n.weight])
        if not n.is_leaf:
            walk(n.left)
            walk(n.right)

    walk(node)
    return out


def _tree_from_list(items: list) -> gbt.TreeNode:
    pos = 0

    def build():
        nonlocal pos
        feature, threshold, weight = items[pos]
        pos += 1
        if feature < 0:
            return gbt.TreeNode(weight=weight)
        left = build()
        right = build()
        return gbt.TreeNode(feature=int(feature), threshold=threshold,
                            left=left, right=right)

    return build()


class GbtForecaster:
    family = "gbt"
    DEFAULT_HYPER = {"learning_rate": 0.1, "max_depth": 8, "n_estimators": 1000,
                     "window": 8, "seed": 27}

    def __init__(self, hyper: dict | None = None, mode: str = UNIVARIATE):
        self.hyper = {**self.DEFAULT_HYPER, **(hyper or {})}
        self.mode = mode
        self.model: gbt.GbtModel | None = None
        self._tail: dict | None = None

    def fit(self, frame: FeatureFrame) -> "GbtForecaster":
        multivariate = self.mode == MULTIVARIATE
        params = gbt.GbtParams(learning_rate=self.hyper["learning_rate"],
                               max_depth=self.hyper["max_depth"],
                               n_estimators=self.hyper["n_estimators"],
                               seed=self.hyper["seed"],
                               window=self.hyper["window"])
        X, y = svr.make_supervised(frame, params.window, multivariate)
        # a chronological tail of the supervised rows drives early stopping
        split_at = max(int(len(y) * 0.9), 10)
        validation = (X[split_at:], y[split_at:]) if split_at < len(y) else None
        self.model = gbt.fit(X[:split_at], y[:split_at], params, validation=validation)
        self._tail = _frame_tail_payload(frame, params.window, multivariate)
        return self

    def forecast(self, horizon: int) -> np.ndarray:
        tail = _tail_frame(self._tail["last_timestamp"], self._tail["prices"],
                           self._tail["exog"])
        return gbt.forecast(self.model, tail, horizon)

    def payload(self) -> dict:
        m = self.model
        return {
            "trees": [_tree_to_list(t) for t in m.trees],
            "base_score": m.base_score,
            "best_iteration": m.best_iteration,
            "n_features": m.n_features,
            "learning_rate": m.params.learning_rate,
            "max_depth": m.params.max_depth,
            "n_estimators": m.params.n_estimators,
            "seed": m.params.seed,
            "window": m.params.window,
            "tail": self._tail,
        }

    @classmethod
    def restore(cls, hyper: dict, mode: str, payload: dict) -> "GbtForecaster":
        self = cls(hyper, mode)
        params = gbt.GbtParams(learning_rate=payload["learning_rate"],
                               max_depth=payload["max_depth"],
                               n_estimators=payload["n_estimators"],
                               seed=payload["seed"], window=payload["window"])
        self.model = gbt.GbtModel(
            trees=tuple(_tree_from_list(t) for t in payload["trees"]),
            base_score=payload["base_score"],
            params=params,
            best_iteration=payload["best_iteration"],
            n_features=payload["n_features"],
        )
        self._tail = payload["tail"]
        return self


class LstmForecaster:
    family = "lstm"
    DEFAULT_HYPER = {"layers": 4, "hidden_size": 50, "dropout_rate": 0.2,
                     "epochs": 100, "batch_size": 10, "lookback_window": 52,
                     "output_size": 52, "learning_rate": 0.001, "seed": 0}

    def __init__(self, hyper: dict | None = None, mode: str = UNIVARIATE):
        self.hyper = {**self.DEFAULT_HYPER, **(hyper or {})}
        self.mode = mode
        self.model: lstm.LstmModel | None = None
        self._tail: dict | None = None

    def _params(self) -> lstm.LstmParams:
        return lstm.LstmParams(
            layers=self.hyper["layers"], hidden_size=self.hyper["hidden_size"],
            dropout_rate=self.hyper["dropout_rate"], epochs=self.hyper["epochs"],
            batch_size=self.hyper["batch_size"],
            lookback_window=self.hyper["lookback_window"],
            output_size=self.hyper["output_size"],
            learning_rate=self.hyper["learning_rate"], seed=self.hyper["seed"],
        )

    def fit(self, frame: FeatureFrame) -> "LstmForecaster":
        multivariate = self.mode == MULTIVARIATE
        params = self._params()
        scaled, scaler = scale_fit_transform(frame)
        windows = lstm.make_windows(scaled, params.lookback_window,
                                    params.output_size, multivariate)
        self.model, _ = lstm.train(windows, params, scaler)
        self._tail = _frame_tail_payload(frame, params.lookback_window, multivariate)
        return self

    def forecast(self, horizon: int) -> np.ndarray:
        tail = _tail_frame(self._tail["last_timestamp"], self._tail["prices"],
                           self._tail["exog"])
        return lstm.forecast(self.model, tail, horizon)

    def payload(self) -> dict:
        m = self.model
        return {
            "layers": [{k: v.tolist() for k, v in layer.items()} for layer in m.weights],
            "dense_w": m.dense_w.tolist(),
            "dense_b": m.dense_b.tolist(),
            "input_width": m.input_width,
            "hyper": dict(self.hyper),
            "scaler": {k: list(v) for k, v in m.scaler.bounds.items()},
            "tail": self._tail,
        }

    @classmethod
    def restore(cls, hyper: dict, mode: str, payload: dict) -> "LstmForecaster":
        self = cls(payload.get("hyper", hyper), mode)
        self.model = lstm.LstmModel(
            weights=tuple({k: np.array(v) for k, v in layer.items()}
                          for layer in payload["layers"]),
            dense_w=np.array(payload["dense_w"]),
            dense_b=np.array(payload["dense_b"]),
            params=self._params(),
            input_width=payload["input_width"],
            scaler=MinMaxScaler({k: tuple(v) for k, v in payload["scaler"].items()}),
        )
        self._tail = payload["tail"]
        return self


_CLASSES = {
    "arima": ArimaForecaster,
    "trend": TrendForecaster,
    "svr": SvrForecaster,
    "gbt": GbtForecaster,
    "lstm": LstmForecaster,
}


def make_forecaster(family: str, hyper: dict | None = None, mode: str = UNIVARIATE):
    if family not in _CLASSES:
        raise ValueError(f"unknown family {family!r}")
    if family == "arima" and mode != UNIVARIATE:
        raise ValueError("arima supports univariate mode only")
    return _CLASSES[family](hyper, mode)


def restore_forecaster(family: str, hyper: dict, mode: str, payload: dict):
    if family not in _CLASSES:
        raise ValueError(f"unknown family {family!r}")
    return _CLASSES[family].restore(hyper, mode, payload)
