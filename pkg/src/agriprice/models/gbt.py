"""Gradient-boosted regression trees with second-order exact greedy splits.

Squared-error objective: gradients g = pred - y, hessians h = 1.  Each
round draws its row subsample and feature subset from the counter-based
generator seeded by params.seed, then grows one tree by exhaustive scan
over sorted feature values, taking the split that maximizes

    gain = 1/2 * (GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda))

and only when that gain is positive.  Leaf weights are -G/(H+lambda)
scaled by the learning rate.  No histogram approximation: the data here
is hundreds of rows, exactness is cheap and easy to test.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..core import EXOGENOUS_COLUMNS, FeatureFrame
from ..errors import DimensionMismatchError, EmptyDataError
from ..prng import CounterRng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GbtParams:
    learning_rate: float = 0.1
    max_depth: int = 8
    n_estimators: int = 1000
    subsample: float = 0.8
    colsample_bytree: float = 0.8
    reg_lambda: float = 1.0
    early_stopping_rounds: int = 50
    seed: int = 27
    min_child_weight: float = 1.0
    window: int = 8  # lag count when used through the forecasting adapter

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1 or self.n_estimators < 1:
            raise ValueError("max_depth and n_estimators must be >= 1")
        if not (0 < self.subsample <= 1 and 0 < self.colsample_bytree <= 1):
            raise ValueError("sampling fractions must be in (0, 1]")
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be >= 0")


@dataclass(frozen=True)
class TreeNode:
    feature: int = -1  # -1 marks a leaf
    threshold: float = 0.0
    weight: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())


@dataclass(frozen=True, eq=False)
class GbtModel:
    trees: tuple[TreeNode, ...]
    base_score: float
    params: GbtParams
    best_iteration: int
    n_features: int

    def __post_init__(self):
        if self.best_iteration > len(self.trees):
            raise ValueError("best_iteration beyond the tree list")
        for tree in self.trees:
            if tree.depth() > self.params.max_depth:
                raise ValueError("tree exceeds max_depth")

    @property
    def multivariate(self) -> bool:
        return self.n_features > self.params.window


def best_split(x: np.ndarray, g: np.ndarray, h: np.ndarray, reg_lambda: float,
               min_child_weight: float):
    """Exhaustive scan of one feature: returns (gain, threshold) or None.

    Thresholds are midpoints between adjacent distinct sorted values; the
    gain formula uses prefix gradient/hessian sums.
    """
    order = np.argsort(x, kind="stable")
    xs, gs, hs = x[order], g[order], h[order]
    G, H = gs.sum(), hs.sum()
    parent = G * G / (H + reg_lambda)
    gl = np.cumsum(gs)[:-1]
    hl = np.cumsum(hs)[:-1]
    gr, hr = G - gl, H - hl
    valid = (xs[1:] != xs[:-1]) & (hl >= min_child_weight) & (hr >= min_child_weight)
    if not valid.any():
        return None
    gains = 0.5 * (gl**2 / (hl + reg_lambda) + gr**2 / (hr + reg_lambda) - parent)
    gains = np.where(valid, gains, -np.inf)
    k = int(np.argmax(gains))
    if gains[k] <= 0.0:
        return None
    return float(gains[k]), float(0.5 * (xs[k] + xs[k + 1]))


def _grow(X, g, h, features, depth, params: GbtParams) -> TreeNode:
    if depth < params.max_depth and len(g) >= 2:
        best = None
        for f in features:
            found = best_split(X[:, f], g, h, params.reg_lambda, params.min_child_weight)
            if found and (best is None or found[0] > best[0]):
                best = (found[0], f, found[1])
        if best is not None:
            _, f, threshold = best
            mask = X[:, f] <= threshold
            return TreeNode(
                feature=f,
                threshold=threshold,
                left=_grow(X[mask], g[mask], h[mask], features, depth + 1, params),
                right=_grow(X[~mask], g[~mask], h[~mask], features, depth + 1, params),
            )
    weight = -g.sum() / (h.sum() + params.reg_lambda) * params.learning_rate
    return TreeNode(weight=float(weight))


def _tree_predict(tree: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))
    for i, row in enumerate(X):
        node = tree
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        out[i] = node.weight
    return out


def fit(features: np.ndarray, targets: np.ndarray, params: GbtParams = GbtParams(),
        validation: tuple[np.ndarray, np.ndarray] | None = None) -> GbtModel:
    """Boost until n_estimators or until validation MSE stalls.

    validation, when given, is an (X, y) holdout; training stops once its
    MSE has failed to improve for early_stopping_rounds rounds and
    best_iteration points at the minimum.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or len(X) != len(y) or len(y) < 10:
        raise EmptyDataError("need a 2-D feature matrix with at least 10 aligned rows")

    n, d = X.shape
    if all(np.all(X[:, f] == X[0, f]) for f in range(d)):
        log.warning("all feature columns constant; model degenerates to the base score")
        return GbtModel(trees=(), base_score=float(y.mean()), params=params,
                        best_iteration=0, n_features=d)

    rng = CounterRng(params.seed)
    base = float(y.mean())
    pred = np.full(n, base)
    trees: list[TreeNode] = []

    if validation is not None:
        val_X = np.asarray(validation[0], dtype=float)
        val_y = np.asarray(validation[1], dtype=float)
        val_pred = np.full(len(val_y), base)
        best_mse, best_round = np.inf, 0

    n_rows = max(2, int(np.floor(params.subsample * n)))
    n_cols = max(1, int(np.floor(params.colsample_bytree * d)))
    for r in range(params.n_estimators):
        g = pred - y
        h = np.ones(n)
        rows = (sorted(rng.substream(2 * r).sample_indices(n, n_rows))
                if n_rows < n else list(range(n)))
        cols = (sorted(rng.substream(2 * r + 1).sample_indices(d, n_cols))
                if n_cols < d else list(range(d)))
        tree = _grow(X[rows], g[rows], h[rows], cols, 0, params)
        trees.append(tree)
        pred += _tree_predict(tree, X)

        if validation is not None:
            val_pred += _tree_predict(tree, val_X)
            val_mse = float(np.mean((val_pred - val_y) ** 2))
            if val_mse < best_mse - 1e-12:
                best_mse, best_round = val_mse, r + 1
            elif r + 1 - best_round >= params.early_stopping_rounds:
                break

    best_iteration = best_round if validation is not None else len(trees)
    return GbtModel(trees=tuple(trees), base_score=base, params=params,
                    best_iteration=max(best_iteration, 0), n_features=d)


def predict(model: GbtModel, row: np.ndarray) -> float:
    row = np.asarray(row, dtype=float)
    if row.shape != (model.n_features,):
        raise DimensionMismatchError(f"expected {model.n_features} features, got {row.shape}")
    value = model.base_score
    for tree in model.trees[: model.best_iteration]:
        node = tree
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        value += node.weight
    return float(value)


def forecast(model: GbtModel, frame: FeatureFrame, horizon: int) -> np.ndarray:
    """Same recursive one-step scheme as the SVR adapter; trees work on raw
    MYR features so there is no scaling step."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    window = model.params.window
    if model.n_features not in (window, window + len(EXOGENOUS_COLUMNS)):
        raise DimensionMismatchError(
            f"model trained on {model.n_features} features does not match window {window}"
        )
    from ..core import PRICE_COLUMN
    from ..errors import TooShortError

    if len(frame) < window:
        raise TooShortError(f"need at least {window} rows of history")
    prices = list(frame.column(PRICE_COLUMN)[-window:])
    exo_tail = (
        [frame.column(c)[-1] for c in EXOGENOUS_COLUMNS] if model.multivariate else []
    )
    out = []
    for _ in range(horizon):
        row = np.array(prices[-window:] + exo_tail)
        out.append(predict(model, row))
        prices.append(out[-1])
    return np.array(out)
