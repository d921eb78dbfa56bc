"""ARIMA(p,d,q) by conditional sum of squares, with multi-step forecasting.

Estimation minimizes the sum of squared one-step innovations on the
d-differenced series, with pre-sample innovations pinned at zero
(conditional likelihood).  The optimizer is Gauss-Newton with analytic
innovation derivatives, damped Levenberg-style, started from a
Hannan-Rissanen two-stage regression.  After every accepted step the AR
and MA polynomials are forced stationary/invertible by reflecting any
root inside the unit circle to its reciprocal.

The whole path is deterministic: same series + order always gives the
same model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Series
from ..errors import (
    DegenerateSeriesError,
    NonConvergenceError,
    TooShortError,
)

_MAX_ITER = 500
_ROOT_MARGIN = 1.001  # reflected roots are pushed at least this far outside the circle


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if not (0 <= self.p <= 5 and 0 <= self.d <= 2 and 0 <= self.q <= 5):
            raise ValueError(f"order out of range: ({self.p},{self.d},{self.q})")
        if self.p + self.q == 0 and self.d == 0:
            raise ValueError("(0,0,0) is not a model")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.p, self.d, self.q)


@dataclass(frozen=True, eq=False)
class ArimaModel:
    order: ArimaOrder
    intercept: float
    ar_coeffs: np.ndarray
    ma_coeffs: np.ndarray
    sigma2: float
    w_tail: np.ndarray       # last p values of the differenced series
    resid_tail: np.ndarray   # last q fitted innovations
    level_tails: np.ndarray  # last value of difference level j, j = 0..d-1
    aic: float
    nobs: int

    def __post_init__(self):
        for name in ("ar_coeffs", "ma_coeffs", "w_tail", "resid_tail", "level_tails"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if len(self.ar_coeffs) != self.order.p or len(self.ma_coeffs) != self.order.q:
            raise ValueError("coefficient lengths disagree with the order")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if not _roots_outside(_ar_poly(self.ar_coeffs)):
            raise ValueError("AR polynomial is not stationary")
        if not _roots_outside(_ma_poly(self.ma_coeffs)):
            raise ValueError("MA polynomial is not invertible")


def _ar_poly(phi: np.ndarray) -> np.ndarray:
    # 1 - phi_1 z - ... - phi_p z^p, descending powers for numpy
    return np.concatenate([-phi[::-1], [1.0]])


def _ma_poly(theta: np.ndarray) -> np.ndarray:
    # 1 + theta_1 z + ... + theta_q z^q
    return np.concatenate([theta[::-1], [1.0]])


def _roots_outside(poly_desc: np.ndarray, margin: float = 1.0 - 1e-9) -> bool:
    if len(poly_desc) < 2:
        return True
    return bool(np.all(np.abs(np.roots(poly_desc)) > margin))


def _reflect(coeffs: np.ndarray, sign: float) -> np.ndarray:
    """Force all roots of the (AR or MA) polynomial outside the unit circle.

    sign is -1 for AR (coeffs enter negated) and +1 for MA.  Roots inside
    the circle are replaced by their conjugate reciprocals, which leaves
    the polynomial real; roots hugging the circle are nudged outward.
    """
    k = len(coeffs)
    if k == 0:
        return coeffs
    poly = np.concatenate([sign * coeffs[::-1], [1.0]])
    roots = np.roots(poly)
    moduli = np.abs(roots)
    if np.all(moduli > _ROOT_MARGIN):
        return coeffs
    for i in range(len(roots)):
        if moduli[i] < 1.0:
            roots[i] = 1.0 / np.conj(roots[i])
        m = abs(roots[i])
        if m < _ROOT_MARGIN:
            roots[i] *= _ROOT_MARGIN / m
    rebuilt = np.poly(roots)           # monic, descending
    rebuilt = rebuilt / rebuilt[-1]    # normalize constant term to 1
    new = np.real(rebuilt[:-1][::-1]) * sign
    return new


def _css_residuals(w: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """One-step innovations for t = p..n-1, zeros before the sample starts."""
    p, q = len(phi), len(theta)
    n = len(w)
    eps = np.zeros(n)
    for t in range(p, n):
        acc = w[t] - c
        for i in range(p):
            acc -= phi[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= p:
                acc -= theta[j] * eps[t - 1 - j]
        eps[t] = acc
    return eps[p:]


def _css_jacobian(w: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """d eps[t] / d (c, phi, theta) via the same recursion as the residuals."""
    p, q = len(phi), len(theta)
    n = len(w)
    k = 1 + p + q
    eps = np.zeros(n)
    grad = np.zeros((n, k))
    for t in range(p, n):
        acc = w[t] - c
        g = np.zeros(k)
        g[0] = -1.0
        for i in range(p):
            acc -= phi[i] * w[t - 1 - i]
            g[1 + i] = -w[t - 1 - i]
        for j in range(q):
            s = t - 1 - j
            if s >= p:
                acc -= theta[j] * eps[s]
                g[1 + p + j] -= eps[s]
                g -= theta[j] * grad[s]
        eps[t] = acc
        grad[t] = g
    return grad[p:]


def _hannan_rissanen(w: np.ndarray, p: int, q: int) -> np.ndarray:
    """Two-stage regression start values [c, phi..., theta...]."""
    n = len(w)
    start = np.zeros(1 + p + q)
    start[0] = float(w.mean())
    if p + q == 0:
        return start
    h = min(max(8, 2 * (p + q)), max(1, (n - 2) // 3))
    try:
        resid = _ols_ar_residuals(w, h)
        rows = np.arange(max(p, h + q), n)
        cols = [np.ones(len(rows))]
        for i in range(1, p + 1):
            cols.append(w[rows - i])
        for j in range(1, q + 1):
            cols.append(resid[rows - j])
        X = np.column_stack(cols)
        beta, *_ = np.linalg.lstsq(X, w[rows], rcond=None)
        start = beta
    except np.linalg.LinAlgError:
        pass
    start[1:1 + p] = _reflect(start[1:1 + p], -1.0)
    start[1 + p:] = _reflect(start[1 + p:], 1.0)
    return start


def _ols_ar_residuals(w: np.ndarray, h: int) -> np.ndarray:
    rows = np.arange(h, len(w))
    X = np.column_stack([np.ones(len(rows))] + [w[rows - i] for i in range(1, h + 1)])
    beta, *_ = np.linalg.lstsq(X, w[rows], rcond=None)
    resid = np.zeros(len(w))
    resid[h:] = w[rows] - X @ beta
    return resid


def fit(series: Series, order: ArimaOrder) -> ArimaModel:
    """Estimate by CSS; raises TooShort / DegenerateSeries / NonConvergence."""
    p, d, q = order.as_tuple()
    x = series.values
    if series.has_missing():
        raise ValueError("fit requires a missing-free series")
    if len(x) < 10 * (p + q + 1) + d:
        raise TooShortError(f"order {order.as_tuple()} needs length >= {10 * (p + q + 1) + d}")

    level_tails = []
    w = x
    for _ in range(d):
        level_tails.append(w[-1])
        w = np.diff(w)

    if p + q > 0 and float(np.std(w)) < 1e-10:
        raise DegenerateSeriesError("differenced series is constant; AR/MA terms unidentifiable")

    params = _hannan_rissanen(w, p, q)
    if p + q > 0:
        params = _gauss_newton(w, params, p, q)

    c, phi, theta = params[0], params[1:1 + p], params[1 + p:]
    eps = _css_residuals(w, c, phi, theta)
    n_eff = len(eps)
    sigma2 = max(float(eps @ eps) / n_eff, 1e-300)
    aic = n_eff * np.log(sigma2) + 2 * (p + q + 2)

    full_eps = np.concatenate([np.zeros(p), eps])
    return ArimaModel(
        order=order,
        intercept=float(c),
        ar_coeffs=phi,
        ma_coeffs=theta,
        sigma2=sigma2,
        w_tail=w[len(w) - p:] if p else np.empty(0),
        resid_tail=full_eps[len(full_eps) - q:] if q else np.empty(0),
        level_tails=np.array(level_tails, dtype=float),
        aic=float(aic),
        nobs=len(x),
    )


def _gauss_newton(w: np.ndarray, params: np.ndarray, p: int, q: int) -> np.ndarray:
    def loss(v):
        eps = _css_residuals(w, v[0], v[1:1 + p], v[1 + p:])
        return float(eps @ eps), eps

    current, eps = loss(params)
    damping = 1e-3
    for _ in range(_MAX_ITER):
        J = _css_jacobian(w, params[0], params[1:1 + p], params[1 + p:])
        g = J.T @ eps
        H = J.T @ J
        accepted = False
        for _ in range(25):
            try:
                step = np.linalg.solve(H + damping * np.eye(len(params)), -g)
            except np.linalg.LinAlgError:
                damping *= 10
                continue
            trial = params + step
            trial[1:1 + p] = _reflect(trial[1:1 + p], -1.0)
            trial[1 + p:] = _reflect(trial[1 + p:], 1.0)
            value, trial_eps = loss(trial)
            if value <= current * (1 + 1e-12):
                improved = current - value
                params, current, eps = trial, value, trial_eps
                damping = max(damping / 10, 1e-10)
                accepted = True
                if improved <= 1e-12 * max(current, 1e-12) or float(np.max(np.abs(step))) < 1e-9:
                    return params
                break
            damping *= 10
        if not accepted:
            # damping exhausted: current point is the constrained optimum
            return params
    raise NonConvergenceError(f"CSS optimizer did not settle in {_MAX_ITER} iterations")


def forecast(model: ArimaModel, horizon: int) -> np.ndarray:
    """h-step forecast on the price level; future innovations are zero."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    p, d, q = model.order.as_tuple()
    w_hist = list(model.w_tail)      # oldest..newest
    e_hist = list(model.resid_tail)
    out = np.empty(horizon)
    for k in range(horizon):
        value = model.intercept
        for i in range(p):
            value += model.ar_coeffs[i] * w_hist[-1 - i]
        for j in range(q):
            idx = len(e_hist) - 1 - j
            if idx >= 0:
                value += model.ma_coeffs[j] * e_hist[idx]
        out[k] = value
        if p:
            w_hist.append(value)
        e_hist.append(0.0)
    # integrate back up through the difference levels
    for j in range(d - 1, -1, -1):
        out = model.level_tails[j] + np.cumsum(out)
    return out


def evaluate(series: Series, order: ArimaOrder, split_spec=None) -> float:
    """Held-out MSE: fit on the train prefix, forecast the test suffix."""
    from ..core import FeatureFrame, SplitSpec, mse, split

    spec = split_spec or SplitSpec()
    train, test = split(FeatureFrame(series), spec)
    model = fit(train.base, order)
    return mse(test.prices, forecast(model, len(test)))
