"""Unit-root testing, correlograms, and ARIMA order suggestion.

The augmented Dickey-Fuller regression used throughout is the
constant-no-trend variant

    dx[t] = a + g * x[t-1] + sum_j b_j * dx[t-j] + e[t]

whose t-ratio on g is compared against critical values from the MacKinnon
response surface (embedded below).  The order-suggestion procedure walks
the classic recipe: difference until the ADF test passes at 5%, then read
the MA order off the ACF cutoff and the AR order off the PACF cutoff,
falling back to AIC arbitration when the PACF reading is ambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Series, difference
from .errors import (
    ConstantSeriesError,
    NoStationaryTransformError,
    NumericalBreakdownError,
    SingularRegressionError,
    TooShortError,
)

# Response-surface coefficients for the constant-only Dickey-Fuller
# distribution (MacKinnon 2010 update, single I(1) series).  The critical
# value at effective sample size T is b0 + b1/T + b2/T^2 + b3/T^3.
_CRIT_SURFACE = {
    "1%": (-3.43035, -6.5393, -16.786, -79.433),
    "5%": (-2.86154, -2.8903, -4.234, -40.040),
    "10%": (-2.56677, -1.5384, -2.809, 0.0),
}

#: factor of the confidence band below which a correlogram cutoff counts as clean
AMBIGUITY_FACTOR = 0.75


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lag_order: int
    critical_values: dict
    stationary_at_5pct: bool
    nobs: int


@dataclass(frozen=True)
class CorrelogramPoint:
    lag: int
    correlation: float
    confidence_band: float


@dataclass(frozen=True)
class OrderSuggestion:
    p: int
    d: int
    q: int
    p_candidates: tuple[int, ...]


def _ols(X: np.ndarray, y: np.ndarray):
    """Plain OLS returning (coeffs, ssr, XtX_inverse).  No intercept magic."""
    XtX = X.T @ X
    if np.linalg.cond(XtX) > 1e12:
        raise SingularRegressionError("Dickey-Fuller design matrix is near singular")
    XtX_inv = np.linalg.inv(XtX)
    beta = XtX_inv @ (X.T @ y)
    resid = y - X @ beta
    return beta, float(resid @ resid), XtX_inv


def _df_design(x: np.ndarray, k: int, t_start: int):
    """Rows t = t_start..n-1 of the ADF regression with k augmentation lags.

    Columns: [x[t-1], 1, dx[t-1], ..., dx[t-k]]; response dx[t].
    """
    dx = np.diff(x)
    n = len(x)
    rows = np.arange(t_start, n)
    cols = [x[rows - 1], np.ones(len(rows))]
    for j in range(1, k + 1):
        cols.append(dx[rows - 1 - j])
    return np.column_stack(cols), dx[rows - 1]


def adf_test(series: Series, max_lag: int | None = None) -> AdfResult:
    """Constant-no-trend ADF test; lag order picked by AIC over 0..max_lag."""
    x = series.values
    if series.has_missing():
        raise ValueError("adf_test requires a missing-free series")
    n = len(x)
    if max_lag is None:
        # Schwert's rule, clipped so the shortest regression keeps 20 rows
        max_lag = int(np.floor(12 * (n / 100.0) ** 0.25))
        max_lag = max(0, min(max_lag, n - 21))
    if n < 20 + max_lag:
        raise TooShortError(f"adf_test needs length >= {20 + max_lag}, got {n}")

    # lag selection on a common sample so AICs are comparable
    best = None
    for k in range(max_lag + 1):
        X, y = _df_design(x, k, t_start=max_lag + 1)
        _, ssr, _ = _ols(X, y)
        nobs = len(y)
        aic = nobs * np.log(ssr / nobs) + 2 * X.shape[1]
        if best is None or aic < best[0]:
            best = (aic, k)
    k = best[1]

    # final regression at the chosen lag uses every usable row
    X, y = _df_design(x, k, t_start=k + 1)
    beta, ssr, XtX_inv = _ols(X, y)
    nobs = len(y)
    dof = nobs - X.shape[1]
    if dof <= 0:
        raise SingularRegressionError("no degrees of freedom left")
    se = np.sqrt(ssr / dof * XtX_inv[0, 0])
    stat = float(beta[0] / se)

    crit = {
        pct: float(b0 + b1 / nobs + b2 / nobs**2 + b3 / nobs**3)
        for pct, (b0, b1, b2, b3) in _CRIT_SURFACE.items()
    }
    return AdfResult(
        statistic=stat,
        lag_order=k,
        critical_values=crit,
        stationary_at_5pct=stat < crit["5%"],
        nobs=nobs,
    )


def acf(series: Series, max_lag: int) -> list[CorrelogramPoint]:
    """Biased autocorrelation estimates (divide by n); acf(0) == 1."""
    x = series.values
    n = len(x)
    if n <= max_lag:
        raise TooShortError(f"need length > {max_lag}")
    dev = x - x.mean()
    denom = float(dev @ dev)
    if denom <= 0.0:
        raise ConstantSeriesError("zero variance series has no correlogram")
    band = 1.96 / np.sqrt(n)
    points = [CorrelogramPoint(0, 1.0, band)]
    for k in range(1, max_lag + 1):
        r = float(dev[:-k] @ dev[k:]) / denom
        points.append(CorrelogramPoint(k, r, band))
    return points


def pacf(series: Series, max_lag: int) -> list[CorrelogramPoint]:
    """Partial autocorrelations via the Durbin-Levinson recursion on the ACF."""
    rho = np.array([p.correlation for p in acf(series, max_lag)])
    band = 1.96 / np.sqrt(len(series))
    points = [CorrelogramPoint(0, 1.0, band)]
    if max_lag == 0:
        return points
    phi_prev = np.array([rho[1]])
    points.append(CorrelogramPoint(1, float(rho[1]), band))
    for k in range(2, max_lag + 1):
        num = rho[k] - phi_prev @ rho[k - 1:0:-1]
        den = 1.0 - phi_prev @ rho[1:k]
        if abs(den) < 1e-12:
            raise NumericalBreakdownError(f"Toeplitz system near singular at lag {k}")
        phi_kk = float(num / den)
        phi_prev = np.concatenate([phi_prev - phi_kk * phi_prev[::-1], [phi_kk]])
        points.append(CorrelogramPoint(k, phi_kk, band))
    return points


def read_cutoff(points: list[CorrelogramPoint]) -> tuple[int, bool]:
    """First lag whose correlation falls inside the band, minus one.

    Returns (cutoff, ambiguous): ambiguous means the value at the first
    inside-band lag still sits above AMBIGUITY_FACTOR of the band, i.e. the
    plot reading could defensibly be one lag higher.
    """
    for point in points[1:]:
        if abs(point.correlation) < point.confidence_band:
            ambiguous = abs(point.correlation) >= AMBIGUITY_FACTOR * point.confidence_band
            return point.lag - 1, ambiguous
    return points[-1].lag, False


def suggest_order(series: Series, max_lag: int = 20) -> OrderSuggestion:
    """Differencing depth from ADF, q from the ACF cutoff, p from the PACF.

    d is the smallest value in {0, 1, 2} whose d-differenced series passes
    the 5% ADF test.  Orders are floored at 0 and capped at 5.  When the
    PACF cutoff is ambiguous the candidate set widens by one and AIC over
    trial fits arbitrates.
    """
    if len(series) < 50:
        raise TooShortError("suggest_order needs at least 50 points")

    work = series
    for d in range(3):
        if adf_test(work).stationary_at_5pct:
            break
        if d < 2:
            work = difference(work, 1)
    else:
        raise NoStationaryTransformError("still non-stationary after differencing twice")

    lag = min(max_lag, len(work) - 1)
    q, _ = read_cutoff(acf(work, lag))
    q = min(max(q, 0), 5)
    p_base, ambiguous = read_cutoff(pacf(work, lag))
    p_base = min(max(p_base, 0), 5)
    candidates = (p_base,) if not ambiguous else tuple(sorted({p_base, min(p_base + 1, 5)}))

    p = candidates[0]
    if len(candidates) > 1:
        p = _arbitrate_by_aic(series, candidates, d, q)
    return OrderSuggestion(p=p, d=d, q=q, p_candidates=candidates)


def _arbitrate_by_aic(series: Series, candidates: tuple[int, ...], d: int, q: int) -> int:
    from .models import arima

    best = (np.inf, candidates[0])
    for p in candidates:
        if p == 0 and q == 0 and d == 0:
            continue
        try:
            model = arima.fit(series, arima.ArimaOrder(p, d, q))
        except Exception:
            continue
        if model.aic < best[0]:
            best = (model.aic, p)
    return best[1]
