import numpy as np
import pytest

from agriprice.errors import ConstantSeriesError, TooShortError
from agriprice.stationarity import (
    CorrelogramPoint,
    acf,
    adf_test,
    pacf,
    read_cutoff,
    suggest_order,
)

from conftest import make_series


def random_walk(n, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return make_series(np.cumsum(rng.normal(scale=scale, size=n)))


def ar1(n, phi, seed, scale=1.0, burn=100):
    rng = np.random.default_rng(seed)
    e = rng.normal(scale=scale, size=n + burn)
    x = np.zeros(n + burn)
    for i in range(1, n + burn):
        x[i] = phi * x[i - 1] + e[i]
    return make_series(x[burn:])


def oracle_df_tstat(x: np.ndarray, k: int) -> float:
    """Independent least-squares computation of the ADF t-ratio.

    Built directly from the regression definition with numpy.lstsq — shares
    no code with the implementation under test.
    """
    dx = np.diff(x)
    rows = np.arange(k + 1, len(x))
    design = [x[rows - 1], np.ones(len(rows))]
    for j in range(1, k + 1):
        design.append(dx[rows - 1 - j])
    X = np.column_stack(design)
    y = dx[rows - 1]
    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    s2 = (resid @ resid) / (len(y) - X.shape[1])
    cov = s2 * np.linalg.inv(X.T @ X)
    return float(beta[0] / np.sqrt(cov[0, 0]))


class TestAdf:
    def test_statistic_matches_oracle(self):
        series = ar1(1000, 0.5, seed=7)
        result = adf_test(series)
        expected = oracle_df_tstat(series.values, result.lag_order)
        assert result.statistic == pytest.approx(expected, abs=1e-8)

    def test_random_walk_rarely_rejected(self):
        # unit-root null holds: expect about a 5% rejection rate
        rejections = sum(
            adf_test(random_walk(500, seed)).stationary_at_5pct for seed in range(20)
        )
        assert rejections <= 3

    def test_white_noise_usually_rejected(self):
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            s = make_series(rng.normal(size=500))
            hits += adf_test(s).stationary_at_5pct
        assert hits >= 17

    def test_shift_invariance(self):
        series = ar1(300, 0.4, seed=3)
        shifted = make_series(series.values + 250.0)
        a, b = adf_test(series), adf_test(shifted)
        assert a.statistic == pytest.approx(b.statistic, abs=1e-7)

    def test_flag_consistent_with_critical_value(self):
        for seed in (0, 1, 2):
            r = adf_test(random_walk(200, seed))
            assert r.stationary_at_5pct == (r.statistic < r.critical_values["5%"])

    def test_asymptotic_critical_values(self):
        r = adf_test(random_walk(5000, 0))
        assert r.critical_values["1%"] == pytest.approx(-3.4304, abs=0.01)
        assert r.critical_values["5%"] == pytest.approx(-2.8615, abs=0.01)
        assert r.critical_values["10%"] == pytest.approx(-2.5668, abs=0.01)

    def test_too_short(self):
        with pytest.raises(TooShortError):
            adf_test(make_series(np.arange(12.0)), max_lag=2)


class TestAcf:
    def test_lag_zero_is_one(self, rng):
        series = make_series(rng.normal(size=50))
        assert acf(series, 5)[0].correlation == 1.0

    def test_hand_computed_example(self):
        # deviations of [1..5] are [-2,-1,0,1,2]: lag-1 sum 4, lag-0 sum 10
        points = acf(make_series([1.0, 2.0, 3.0, 4.0, 5.0]), 1)
        assert points[1].correlation == pytest.approx(0.4)

    def test_iid_noise_within_bound(self):
        rng = np.random.default_rng(42)
        series = make_series(rng.normal(size=2000))
        for point in acf(series, 10)[1:]:
            assert abs(point.correlation) < 3 / np.sqrt(2000)

    def test_band_value(self):
        points = acf(make_series(np.arange(100.0)), 3)
        assert points[0].confidence_band == pytest.approx(1.96 / 10.0)

    def test_constant_series(self):
        with pytest.raises(ConstantSeriesError):
            acf(make_series([2.0, 2.0, 2.0, 2.0]), 2)

    def test_bounded_by_one(self, rng):
        series = make_series(rng.normal(size=300).cumsum())
        for point in acf(series, 20):
            assert abs(point.correlation) <= 1 + 1e-9


class TestPacf:
    def test_lag_one_equals_acf(self, rng):
        series = make_series(rng.normal(size=120))
        assert pacf(series, 3)[1].correlation == pytest.approx(
            acf(series, 3)[1].correlation
        )

    def test_ar1_cuts_off_after_lag_one(self):
        series = ar1(5000, 0.6, seed=12)
        points = pacf(series, 5)
        assert points[1].correlation == pytest.approx(0.6, abs=0.05)
        for point in points[2:]:
            assert abs(point.correlation) < 0.05

    def test_ar2_cuts_off_after_lag_two(self):
        rng = np.random.default_rng(99)
        n, burn = 5000, 200
        x = np.zeros(n + burn)
        e = rng.normal(size=n + burn)
        for i in range(2, n + burn):
            x[i] = 0.5 * x[i - 1] + 0.3 * x[i - 2] + e[i]
        points = pacf(make_series(x[burn:]), 6)
        assert abs(points[2].correlation) > 0.2
        for point in points[3:]:
            assert abs(point.correlation) < 0.05


class TestSuggestOrder:
    def test_random_walk_needs_one_difference(self):
        assert suggest_order(random_walk(400, seed=5)).d == 1

    def test_white_noise_suggests_nothing(self):
        rng = np.random.default_rng(17)
        suggestion = suggest_order(make_series(rng.normal(size=400)))
        assert (suggestion.p, suggestion.d, suggestion.q) == (0, 0, 0)

    def test_differenced_series_passes_adf(self):
        from agriprice.core import difference

        series = random_walk(400, seed=8)
        suggestion = suggest_order(series)
        work = series
        for _ in range(suggestion.d):
            work = difference(work, 1)
        assert adf_test(work).stationary_at_5pct

    def test_too_short(self):
        with pytest.raises(TooShortError):
            suggest_order(make_series(np.arange(30.0)))


class TestReadCutoff:
    def band_points(self, values, band=0.1):
        return [CorrelogramPoint(k, v, band) for k, v in enumerate(values)]

    def test_clean_cutoff(self):
        # significant at lag 1, clearly inside the band at lag 2 -> cutoff 1
        points = self.band_points([1.0, 0.6, 0.02, 0.01])
        assert read_cutoff(points) == (1, False)

    def test_paper_style_ambiguous_reading(self):
        # lag-2 value hugs the band from inside: defensible readings are 1 and 2
        points = self.band_points([1.0, 0.6, 0.09, 0.01])
        cutoff, ambiguous = read_cutoff(points)
        assert cutoff == 1 and ambiguous

    def test_no_cutoff_returns_last_lag(self):
        points = self.band_points([1.0, 0.9, 0.8, 0.7])
        assert read_cutoff(points) == (3, False)
