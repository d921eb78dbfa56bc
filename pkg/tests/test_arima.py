import numpy as np
import pytest

from agriprice.core import SplitSpec
from agriprice.errors import DegenerateSeriesError, TooShortError
from agriprice.models import arima
from agriprice.models.arima import ArimaModel, ArimaOrder

from conftest import make_series


def simulate_arma(n, phi=(), theta=(), sigma=1.0, seed=0, const=0.0, burn=200):
    rng = np.random.default_rng(seed)
    e = rng.normal(scale=sigma, size=n + burn)
    x = np.zeros(n + burn)
    p, q = len(phi), len(theta)
    for t in range(max(p, q), n + burn):
        x[t] = const + e[t]
        for i in range(p):
            x[t] += phi[i] * x[t - 1 - i]
        for j in range(q):
            x[t] += theta[j] * e[t - 1 - j]
    return x[burn:]


def ols_ar1_slope(x):
    """Independent AR(1) oracle: straight least squares on lagged values."""
    X = np.column_stack([np.ones(len(x) - 1), x[:-1]])
    beta, *_ = np.linalg.lstsq(X, x[1:], rcond=None)
    return beta[1]


def innovations_ma1(x, steps=40):
    """Innovations-algorithm oracle for the MA(1) coefficient."""
    x = x - x.mean()
    n = len(x)
    gamma = [float(x[: n - k] @ x[k:]) / n for k in range(steps + 2)]
    v = [gamma[0]]
    theta = {}
    for m in range(1, steps + 1):
        for k in range(m):
            s = gamma[m - k]
            for j in range(k):
                s -= theta[(k, k - j)] * theta[(m, m - j)] * v[j]
            theta[(m, m - k)] = s / v[k]
        v.append(gamma[0] - sum(theta[(m, m - j)] ** 2 * v[j] for j in range(m)))
    return theta[(steps, 1)]


class TestOrder:
    def test_bounds(self):
        with pytest.raises(ValueError):
            ArimaOrder(6, 0, 0)
        with pytest.raises(ValueError):
            ArimaOrder(1, 3, 0)
        with pytest.raises(ValueError):
            ArimaOrder(0, 0, 0)
        assert ArimaOrder(0, 1, 0).as_tuple() == (0, 1, 0)


class TestFit:
    def test_ar1_recovery_matches_ols_oracle(self):
        x = simulate_arma(1000, phi=(0.6,), sigma=0.1, seed=1)
        model = arima.fit(make_series(x), ArimaOrder(1, 0, 0))
        assert 0.5 <= model.ar_coeffs[0] <= 0.7
        assert model.ar_coeffs[0] == pytest.approx(ols_ar1_slope(x), abs=0.02)

    def test_ma1_recovery_matches_innovations_oracle(self):
        x = simulate_arma(2000, theta=(0.4,), seed=2)
        model = arima.fit(make_series(x), ArimaOrder(0, 0, 1))
        oracle = innovations_ma1(x)
        assert 0.3 <= model.ma_coeffs[0] <= 0.5
        assert model.ma_coeffs[0] == pytest.approx(oracle, abs=0.1)

    def test_white_noise_ma_coefficient_near_zero(self):
        rng = np.random.default_rng(3)
        model = arima.fit(make_series(rng.normal(size=3000)), ArimaOrder(0, 0, 1))
        assert abs(model.ma_coeffs[0]) < 0.05

    def test_residual_mean_small_with_intercept(self):
        x = simulate_arma(800, phi=(0.5,), const=2.0, seed=4)
        model = arima.fit(make_series(x), ArimaOrder(1, 0, 0))
        eps = arima._css_residuals(x, model.intercept, model.ar_coeffs, model.ma_coeffs)
        assert abs(eps.mean()) < 0.05 * x.std()

    def test_deterministic(self):
        x = simulate_arma(400, phi=(0.4,), theta=(0.3,), seed=5)
        a = arima.fit(make_series(x), ArimaOrder(1, 0, 1))
        b = arima.fit(make_series(x), ArimaOrder(1, 0, 1))
        assert np.array_equal(a.ar_coeffs, b.ar_coeffs)
        assert np.array_equal(a.ma_coeffs, b.ma_coeffs)
        assert a.intercept == b.intercept

    def test_stationarity_enforced_on_explosive_input(self):
        # a near-unit-root walk pushes the optimizer at the boundary; the
        # fitted polynomial must still have roots outside the circle
        rng = np.random.default_rng(6)
        x = np.cumsum(rng.normal(size=400))
        model = arima.fit(make_series(x), ArimaOrder(1, 0, 0))
        assert abs(model.ar_coeffs[0]) < 1.0

    def test_too_short(self):
        with pytest.raises(TooShortError):
            arima.fit(make_series(np.arange(15.0)), ArimaOrder(1, 0, 1))

    def test_degenerate_series(self):
        with pytest.raises(DegenerateSeriesError):
            arima.fit(make_series([5.0] * 50), ArimaOrder(1, 0, 0))

    def test_jacobian_matches_finite_differences(self):
        w = simulate_arma(80, phi=(0.5,), theta=(0.3,), seed=7)
        params = np.array([0.1, 0.4, 0.2])
        J = arima._css_jacobian(w, params[0], params[1:2], params[2:])
        h = 1e-6
        for col in range(3):
            up, down = params.copy(), params.copy()
            up[col] += h
            down[col] -= h
            num = (
                arima._css_residuals(w, up[0], up[1:2], up[2:])
                - arima._css_residuals(w, down[0], down[1:2], down[2:])
            ) / (2 * h)
            assert np.allclose(J[:, col], num, atol=1e-5)


class TestForecast:
    def model(self, order, intercept=0.0, ar=(), ma=(), w_tail=(), level_tails=()):
        return ArimaModel(
            order=order,
            intercept=intercept,
            ar_coeffs=np.array(ar, float),
            ma_coeffs=np.array(ma, float),
            sigma2=1.0,
            w_tail=np.array(w_tail, float),
            resid_tail=np.zeros(order.q),
            level_tails=np.array(level_tails, float),
            aic=0.0,
            nobs=100,
        )

    def test_random_walk_forecast_is_flat(self):
        m = self.model(ArimaOrder(0, 1, 0), level_tails=[5.2])
        assert np.allclose(arima.forecast(m, 4), [5.2, 5.2, 5.2, 5.2])

    def test_ar1_geometric_decay(self):
        m = self.model(ArimaOrder(1, 0, 0), ar=[0.5], w_tail=[2.0])
        assert np.allclose(arima.forecast(m, 4), [1.0, 0.5, 0.25, 0.125])

    def test_ar1_converges_to_fixed_point(self):
        m = self.model(ArimaOrder(1, 0, 0), intercept=1.2, ar=[0.4], w_tail=[9.0])
        limit = 1.2 / (1 - 0.4)
        assert arima.forecast(m, 200)[-1] == pytest.approx(limit, rel=1e-9)

    def test_shift_equivariance_d1(self):
        x = simulate_arma(300, phi=(0.5,), seed=8).cumsum()
        base = arima.forecast(arima.fit(make_series(x), ArimaOrder(1, 1, 0)), 10)
        shifted = arima.forecast(arima.fit(make_series(x + 100.0), ArimaOrder(1, 1, 0)), 10)
        assert np.allclose(shifted, base + 100.0, atol=1e-7)

    def test_bad_horizon(self):
        m = self.model(ArimaOrder(0, 1, 0), level_tails=[1.0])
        with pytest.raises(ValueError):
            arima.forecast(m, 0)


class TestEvaluate:
    def test_ar1_mse_near_innovation_floor(self):
        # multi-step MSE approaches the process variance sigma^2/(1-phi^2),
        # well under twice the innovation variance for phi = 0.5
        sigma = 0.1
        x = simulate_arma(1000, phi=(0.5,), sigma=sigma, seed=9)
        got = arima.evaluate(make_series(x), ArimaOrder(1, 0, 0), SplitSpec())
        assert got < 2 * sigma**2

    def test_linear_trend_is_nailed_by_drift(self):
        x = 2.0 + 0.3 * np.arange(200.0)
        got = arima.evaluate(make_series(x), ArimaOrder(0, 1, 0), SplitSpec())
        assert got == pytest.approx(0.0, abs=1e-12)

    def test_low_volatility_mse_order_of_magnitude(self):
        # quiet series keep held-out MSE around the 1e-2 mark
        x = 5.0 + simulate_arma(600, phi=(0.6,), sigma=0.08, seed=10)
        got = arima.evaluate(make_series(x), ArimaOrder(1, 0, 0), SplitSpec())
        assert got < 0.1
