"""Epsilon-insensitive support vector regression with an RBF kernel.

The dual is solved in the collapsed variable beta_i = alpha_i - alpha*_i,
which lives in the box [-C, C] under sum(beta) = 0:

    maximize  -1/2 beta' K beta + y' beta - eps * sum |beta_i|

Training is sequential minimal optimization: each pass picks the pair with
the largest KKT violation (read off per-point admissible-bias intervals)
and solves that two-variable subproblem exactly, kinks included.  Feature
rows are expected minmax-scaled; predictions are mapped back to MYR when a
scaler is attached.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..core import EXOGENOUS_COLUMNS, PRICE_COLUMN, FeatureFrame, MinMaxScaler
from ..errors import (
    DegenerateInputError,
    DimensionMismatchError,
    NonConvergenceError,
    TooShortError,
)

KKT_TOL = 1e-3
_MAX_PASSES = 10_000
_SV_EPS = 1e-10


@dataclass(frozen=True)
class SvrParams:
    c: float = 1.0
    epsilon: float = 0.1
    gamma: float | None = None  # None -> 1 / feature count
    window: int = 8

    def __post_init__(self):
        if self.c <= 0 or self.epsilon < 0 or self.window < 1:
            raise ValueError("need c > 0, epsilon >= 0, window >= 1")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True, eq=False)
class SvrModel:
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray
    bias: float
    params: SvrParams
    n_features: int
    scaler: MinMaxScaler | None = None

    def __post_init__(self):
        for name in ("support_vectors", "dual_coeffs"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if np.any(np.abs(self.dual_coeffs) > self.params.c * (1 + 1e-9)):
            raise ValueError("dual coefficient outside the box")

    @property
    def multivariate(self) -> bool:
        return self.n_features > self.params.window


def make_supervised(frame: FeatureFrame, window: int, multivariate: bool):
    """Lagged-window design: row t carries prices t-window..t-1 (plus the
    exogenous reading at t-1 in multivariate mode), target is price at t."""
    n = len(frame)
    if n <= window:
        raise TooShortError(f"frame of {n} rows cannot support window {window}")
    prices = frame.column(PRICE_COLUMN)
    rows = []
    for t in range(window, n):
        feats = list(prices[t - window:t])
        if multivariate:
            feats.extend(frame.column(c)[t - 1] for c in EXOGENOUS_COLUMNS)
        rows.append(feats)
    return np.asarray(rows, dtype=float), prices[window:].copy()


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"{x.shape} vs {y.shape}")
    d = x - y
    return float(np.exp(-gamma * (d @ d)))


def _kernel_matrix(X: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    return np.exp(-gamma * np.maximum(d2, 0.0))


def dual_objective(K: np.ndarray, y: np.ndarray, beta: np.ndarray, epsilon: float) -> float:
    return float(-0.5 * beta @ K @ beta + y @ beta - epsilon * np.sum(np.abs(beta)))


def fit(features: np.ndarray, targets: np.ndarray, params: SvrParams,
        scaler: MinMaxScaler | None = None) -> SvrModel:
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise DegenerateInputError("features must be 2-D and aligned with targets")
    if len(X) < 2:
        raise DegenerateInputError("need at least 2 rows")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise DegenerateInputError("non-finite training data")

    gamma = params.gamma if params.gamma is not None else 1.0 / X.shape[1]
    params = replace(params, gamma=gamma)
    K = _kernel_matrix(X, gamma)
    beta, bias = _smo(K, y, params.c, params.epsilon)

    keep = np.abs(beta) > _SV_EPS
    return SvrModel(
        support_vectors=X[keep],
        dual_coeffs=beta[keep],
        bias=bias,
        params=params,
        n_features=X.shape[1],
        scaler=scaler,
    )


def _bias_intervals(beta: np.ndarray, F: np.ndarray, c: float, epsilon: float):
    """Admissible-bias interval per point; KKT holds iff they all intersect."""
    atol = 1e-10 * max(1.0, c)
    lo = np.full(len(beta), -np.inf)
    hi = np.full(len(beta), np.inf)
    for i, b in enumerate(beta):
        if abs(b) <= atol:
            lo[i], hi[i] = F[i] - epsilon, F[i] + epsilon
        elif b >= c - atol:
            hi[i] = F[i] - epsilon
        elif b <= -c + atol:
            lo[i] = F[i] + epsilon
        elif b > 0:
            lo[i] = hi[i] = F[i] - epsilon
        else:
            lo[i] = hi[i] = F[i] + epsilon
    return lo, hi


def _smo(K: np.ndarray, y: np.ndarray, c: float, epsilon: float):
    n = len(y)
    beta = np.zeros(n)
    Kb = np.zeros(n)

    for _ in range(_MAX_PASSES):
        F = y - Kb
        lo, hi = _bias_intervals(beta, F, c, epsilon)
        i = int(np.argmax(lo))
        j = int(np.argmin(hi))
        if lo[i] - hi[j] <= KKT_TOL:
            return beta, _bias_from(beta, F, c, epsilon, lo, hi)

        # joint move beta_i += t, beta_j -= t inside both boxes
        t_lo = max(-c - beta[i], beta[j] - c)
        t_hi = min(c - beta[i], beta[j] + c)
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]

        def gain(t):
            return (
                -0.5 * eta * t * t
                + t * (F[i] - F[j])
                - epsilon * (abs(beta[i] + t) - abs(beta[i]))
                - epsilon * (abs(beta[j] - t) - abs(beta[j]))
            )

        candidates = {t_lo, t_hi}
        kinks = sorted({t_lo, t_hi, min(max(-beta[i], t_lo), t_hi), min(max(beta[j], t_lo), t_hi)})
        candidates.update(kinks)
        if eta > 0:
            for a, b in zip(kinks, kinks[1:]):
                if b - a <= 0:
                    continue
                m = 0.5 * (a + b)
                s_i = 1.0 if beta[i] + m >= 0 else -1.0
                s_j = 1.0 if beta[j] - m >= 0 else -1.0
                t_star = (F[i] - F[j] - epsilon * s_i + epsilon * s_j) / eta
                if a < t_star < b:
                    candidates.add(t_star)
        t = max(candidates, key=gain)
        if gain(t) <= 0.0:
            # numerically stuck pair; the remaining violation is below any
            # achievable improvement, treat as converged
            return beta, _bias_from(beta, F, c, epsilon, lo, hi)
        beta[i] += t
        beta[j] -= t
        Kb += t * (K[:, i] - K[:, j])
    raise NonConvergenceError(f"SMO did not satisfy KKT within {_MAX_PASSES} passes")


def _bias_from(beta, F, c, epsilon, lo, hi) -> float:
    atol = 1e-10 * max(1.0, c)
    interior = (np.abs(beta) > atol) & (np.abs(beta) < c - atol)
    if interior.any():
        return float(np.mean(np.where(beta[interior] > 0, F[interior] - epsilon,
                                      F[interior] + epsilon)))
    top, bottom = np.max(lo), np.min(hi)
    if not np.isfinite(top):
        top = bottom
    if not np.isfinite(bottom):
        bottom = top
    return float(0.5 * (top + bottom))


def _predict_scaled(model: SvrModel, row: np.ndarray) -> float:
    row = np.asarray(row, dtype=float)
    if row.shape != (model.n_features,):
        raise DimensionMismatchError(f"expected {model.n_features} features, got {row.shape}")
    if len(model.support_vectors) == 0:
        return float(model.bias)
    d2 = np.sum((model.support_vectors - row) ** 2, axis=1)
    return float(model.bias + model.dual_coeffs @ np.exp(-model.params.gamma * d2))


def predict(model: SvrModel, row: np.ndarray) -> float:
    """Kernel expansion plus bias; reported in MYR when a scaler is attached."""
    value = _predict_scaled(model, row)
    if model.scaler is None:
        return value
    return float(model.scaler.inverse_column(PRICE_COLUMN, np.array([value]))[0])


def forecast(model: SvrModel, frame: FeatureFrame, horizon: int) -> np.ndarray:
    """Recursive one-step forecast: each prediction is appended to the lag
    window; exogenous features are held at their last observed value."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if model.scaler is None:
        raise ValueError("forecast needs a scaler-equipped model")
    from ..core import scale_transform

    window = model.params.window
    if model.n_features not in (window, window + len(EXOGENOUS_COLUMNS)):
        raise DimensionMismatchError(
            f"model trained on {model.n_features} features does not match window {window}"
        )
    if len(frame) < window:
        raise TooShortError(f"need at least {window} rows of history")
    scaled = scale_transform(frame, model.scaler)
    prices = list(scaled.column(PRICE_COLUMN)[-window:])
    exo_tail = (
        [scaled.column(c)[-1] for c in EXOGENOUS_COLUMNS] if model.multivariate else []
    )
    preds = []
    for _ in range(horizon):
        row = np.array(prices[-window:] + exo_tail)
        preds.append(_predict_scaled(model, row))
        prices.append(preds[-1])
    return model.scaler.inverse_column(PRICE_COLUMN, np.array(preds))
