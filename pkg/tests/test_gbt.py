import numpy as np
import pytest

from agriprice.errors import DimensionMismatchError, EmptyDataError
from agriprice.models import gbt
from agriprice.models.gbt import GbtModel, GbtParams, TreeNode

from conftest import make_frame


def brute_force_first_split(x, y, reg_lambda=1.0):
    """Oracle: enumerate every midpoint and score the gain from scratch."""
    g = np.full(len(y), y.mean()) - y  # base score is the mean
    h = np.ones(len(y))
    G, H = g.sum(), h.sum()
    best = (-np.inf, None)
    xs = np.sort(np.unique(x))
    for a, b in zip(xs, xs[1:]):
        threshold = 0.5 * (a + b)
        left = x <= threshold
        GL, HL = g[left].sum(), h[left].sum()
        GR, HR = G - GL, H - HL
        gain = 0.5 * (GL**2 / (HL + reg_lambda) + GR**2 / (HR + reg_lambda)
                      - G**2 / (H + reg_lambda))
        if gain > best[0]:
            best = (gain, threshold)
    return best


def no_sampling(**kw):
    return GbtParams(subsample=1.0, colsample_bytree=1.0, **kw)


class TestFit:
    def test_constant_target_learned_in_one_round(self, rng):
        X = rng.uniform(0, 1, size=(20, 3))
        y = np.full(20, 7.5)
        model = gbt.fit(X, y, no_sampling(learning_rate=1.0, reg_lambda=0.0, n_estimators=1))
        for row in X:
            assert gbt.predict(model, row) == pytest.approx(7.5)

    def test_step_function_split_matches_oracle(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            x = rng.uniform(0, 1, size=40)
            y = (x > 0.5).astype(float)
            oracle_gain, oracle_threshold = brute_force_first_split(x, y)
            found = gbt.best_split(x, np.full(40, y.mean()) - y, np.ones(40), 1.0, 1.0)
            assert found is not None
            gain, threshold = found
            assert gain == pytest.approx(oracle_gain, rel=1e-12)
            assert threshold == pytest.approx(oracle_threshold)
            assert 0.25 < threshold < 0.75

    def test_first_tree_on_step_data_is_depth_one_split_near_half(self, rng):
        x = rng.uniform(0, 1, size=60)
        y = (x > 0.5).astype(float)
        model = gbt.fit(x[:, None], y, no_sampling(max_depth=1, n_estimators=1))
        tree = model.trees[0]
        assert not tree.is_leaf
        lo = x[x <= 0.5].max()
        hi = x[x > 0.5].min()
        assert lo < tree.threshold < hi

    def test_seeded_fits_identical(self, rng):
        X = rng.uniform(0, 1, size=(50, 4))
        y = rng.normal(size=50)
        a = gbt.fit(X, y, GbtParams(n_estimators=20, seed=27))
        b = gbt.fit(X, y, GbtParams(n_estimators=20, seed=27))
        assert a.trees == b.trees
        c = gbt.fit(X, y, GbtParams(n_estimators=20, seed=28))
        assert a.trees != c.trees

    def test_training_mse_monotone_without_sampling(self, rng):
        X = rng.uniform(0, 1, size=(80, 3))
        y = np.sin(X[:, 0] * 5) + 0.3 * X[:, 1]
        params = no_sampling(n_estimators=30, max_depth=3)
        model = gbt.fit(X, y, params)
        pred = np.full(len(y), model.base_score)
        last = np.mean((pred - y) ** 2)
        for tree in model.trees:
            pred += gbt._tree_predict(tree, X)
            current = np.mean((pred - y) ** 2)
            assert current <= last + 1e-12
            last = current

    def test_early_stopping_bounds_best_iteration(self, rng):
        X = rng.uniform(0, 1, size=(120, 3))
        y = np.sin(X[:, 0] * 4) + rng.normal(0, 0.2, 120)
        params = no_sampling(n_estimators=400, max_depth=2, early_stopping_rounds=10)
        model = gbt.fit(X[:90], y[:90], params, validation=(X[90:], y[90:]))
        assert model.best_iteration <= len(model.trees)
        assert len(model.trees) < 400  # stopped early on noisy data

    def test_depth_capped(self, rng):
        X = rng.uniform(0, 1, size=(200, 2))
        y = rng.normal(size=200)
        model = gbt.fit(X, y, no_sampling(max_depth=3, n_estimators=5))
        assert all(t.depth() <= 3 for t in model.trees)

    def test_all_constant_features_degenerates_with_warning(self, rng, caplog):
        X = np.ones((30, 2))
        y = rng.normal(2.0, 0.1, 30)
        with caplog.at_level("WARNING"):
            model = gbt.fit(X, y, GbtParams())
        assert "constant" in caplog.text
        assert model.trees == ()
        assert gbt.predict(model, X[0]) == pytest.approx(y.mean())

    def test_too_few_rows(self, rng):
        with pytest.raises(EmptyDataError):
            gbt.fit(rng.uniform(size=(5, 2)), rng.normal(size=5), GbtParams())


class TestPredict:
    def test_empty_model_returns_base_score(self):
        model = GbtModel(trees=(), base_score=3.3, params=GbtParams(),
                         best_iteration=0, n_features=2)
        assert gbt.predict(model, np.zeros(2)) == 3.3

    def test_single_leaf_tree_adds_weight(self):
        model = GbtModel(trees=(TreeNode(weight=0.7),), base_score=1.0,
                         params=GbtParams(), best_iteration=1, n_features=2)
        assert gbt.predict(model, np.ones(2)) == pytest.approx(1.7)

    def test_dimension_checked(self, rng):
        X = rng.uniform(size=(20, 3))
        model = gbt.fit(X, rng.normal(size=20), no_sampling(n_estimators=2))
        with pytest.raises(DimensionMismatchError):
            gbt.predict(model, np.zeros(5))

    def test_split_gains_nonnegative_when_recomputed(self, rng):
        X = rng.uniform(0, 1, size=(100, 3))
        y = np.sin(5 * X[:, 0]) + X[:, 2] ** 2
        model = gbt.fit(X, y, no_sampling(n_estimators=10, max_depth=4))

        def check(node, rows, g, h):
            if node.is_leaf:
                return
            mask = X[rows, node.feature] <= node.threshold
            GL, HL = g[rows][mask].sum(), h[rows][mask].sum()
            GR, HR = g[rows][~mask].sum(), h[rows][~mask].sum()
            lam = model.params.reg_lambda
            parent = (GL + GR) ** 2 / (HL + HR + lam)
            gain = 0.5 * (GL**2 / (HL + lam) + GR**2 / (HR + lam) - parent)
            assert gain >= 0.0
            check(node.left, rows[mask], g, h)
            check(node.right, rows[~mask], g, h)

        pred = np.full(len(y), model.base_score)
        for tree in model.trees:
            g = pred - y
            check(tree, np.arange(len(y)), g, np.ones(len(y)))
            pred += gbt._tree_predict(tree, X)


class TestForecast:
    def make_model(self, rng, multivariate=False, window=6):
        n = 80
        prices = 4 + 0.8 * np.sin(np.arange(n) / 5.0) + rng.normal(0, 0.05, n)
        frame = make_frame(
            prices,
            temperature_c=27 + rng.normal(0, 1, n),
            humidity_pct=80 + rng.normal(0, 2, n),
            precipitation_mm=180 + rng.normal(0, 10, n),
            crude_oil_usd=60 + np.arange(n) * 0.1,
        )
        from agriprice.models.svr import make_supervised

        X, y = make_supervised(frame, window, multivariate)
        params = no_sampling(n_estimators=30, max_depth=3)
        params = GbtParams(**{**params.__dict__, "window": window})
        return gbt.fit(X, y, params), frame

    def test_horizon_one_equals_predict(self, rng):
        model, frame = self.make_model(rng)
        row = frame.base.values[-6:]
        assert gbt.forecast(model, frame, 1)[0] == pytest.approx(gbt.predict(model, row))

    def test_constant_model_constant_forecast(self, rng):
        n = 40
        frame = make_frame(np.full(n, 4.0) + np.where(np.arange(n) % 2 == 0, 1e-9, -1e-9))
        from agriprice.models.svr import make_supervised

        X, y = make_supervised(frame, 4, False)
        model = gbt.fit(X, y, GbtParams(window=4, n_estimators=3))
        out = gbt.forecast(model, frame, 5)
        assert np.allclose(out, out[0])

    def test_output_length(self, rng):
        model, frame = self.make_model(rng, multivariate=True)
        assert len(gbt.forecast(model, frame, 13)) == 13
