"""Stacked LSTM forecaster trained by full backpropagation through time.

Default architecture: 4 recurrent layers of 50 units (the first consumes
the raw feature columns), inverted dropout after every layer while
training, and a dense head that emits 52 weekly steps at once — direct
multi-horizon forecasting, so inference is a single forward pass with no
recursive error feedback.

Gates use the logistic sigmoid, cell candidate and output use tanh.  Each
gate block is stored stacked in one matrix per layer, column order
[input, forget, cell, output], with the forget-gate bias born at 1.0.
Training is Adam on the MSE over all 52 outputs, with global
gradient-norm clipping, minibatches of 10 in sample order shuffled by the
seeded counter generator, and early stopping on a chronological 10%
validation tail.  Everything that draws randomness draws it from
CounterRng, so a fixed seed reproduces the loss trajectory bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import EXOGENOUS_COLUMNS, PRICE_COLUMN, FeatureFrame, MinMaxScaler
from ..errors import (
    HorizonTooLargeError,
    NonFiniteLossError,
    ShapeMismatchError,
    TooShortError,
)
from ..prng import CounterRng


@dataclass(frozen=True)
class LstmParams:
    epochs: int = 100
    batch_size: int = 10
    layers: int = 4
    hidden_size: int = 50
    dropout_rate: float = 0.2
    output_size: int = 52
    lookback_window: int = 52
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float = 5.0
    validation_fraction: float = 0.1
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.layers < 1 or self.hidden_size < 1 or self.output_size < 1:
            raise ValueError("layers, hidden_size and output_size must be >= 1")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.lookback_window < 1 or self.batch_size < 1:
            raise ValueError("lookback_window and batch_size must be >= 1")


@dataclass(frozen=True, eq=False)
class LstmModel:
    weights: tuple[dict, ...]   # per layer: {"W": (D,4H), "U": (H,4H), "b": (4H,)}
    dense_w: np.ndarray         # (H, output_size)
    dense_b: np.ndarray
    params: LstmParams
    input_width: int
    scaler: MinMaxScaler | None = None

    def __post_init__(self):
        frozen_layers = []
        for layer in self.weights:
            frozen = {}
            for key, value in layer.items():
                arr = np.asarray(value, dtype=float).copy()
                arr.flags.writeable = False
                frozen[key] = arr
            frozen_layers.append(frozen)
        object.__setattr__(self, "weights", tuple(frozen_layers))
        for name in ("dense_w", "dense_b"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        for layer in self.weights:
            if not all(np.all(np.isfinite(layer[k])) for k in ("W", "U", "b")):
                raise ValueError("non-finite weights")


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def make_windows(frame: FeatureFrame, lookback: int, output_size: int,
                 multivariate: bool):
    """Sliding samples over a scaled frame.

    Sample i: inputs are the feature rows for weeks [i, i+lookback), targets
    the prices for weeks [i+lookback, i+lookback+output_size).
    """
    n = len(frame)
    if n < lookback + output_size:
        raise TooShortError(f"need >= {lookback + output_size} rows, got {n}")
    price = frame.column(PRICE_COLUMN)
    if multivariate:
        feats = np.column_stack([price] + [frame.column(c) for c in EXOGENOUS_COLUMNS])
    else:
        feats = price[:, None]
    count = n - lookback - output_size + 1
    inputs = np.stack([feats[i:i + lookback] for i in range(count)])
    targets = np.stack([price[i + lookback:i + lookback + output_size] for i in range(count)])
    return inputs, targets


def init_model(params: LstmParams, input_width: int,
               scaler: MinMaxScaler | None = None) -> LstmModel:
    """Uniform +-1/sqrt(fan_in) weights from the seeded generator; zero
    biases except the forget gate, which starts at 1."""
    rng = CounterRng(params.seed)
    H = params.hidden_size
    layers = []
    for l in range(params.layers):
        d = input_width if l == 0 else H
        layers.append({
            "W": _uniform(rng, (d, 4 * H), 1.0 / np.sqrt(d)),
            "U": _uniform(rng, (H, 4 * H), 1.0 / np.sqrt(H)),
            "b": _forget_bias(H),
        })
    dense_w = _uniform(rng, (H, params.output_size), 1.0 / np.sqrt(H))
    dense_b = np.zeros(params.output_size)
    return LstmModel(weights=tuple(layers), dense_w=dense_w, dense_b=dense_b,
                     params=params, input_width=input_width, scaler=scaler)


def _uniform(rng: CounterRng, shape, limit: float) -> np.ndarray:
    flat = rng.uniform_array(int(np.prod(shape)))
    return ((flat * 2.0 - 1.0) * limit).reshape(shape)


def _forget_bias(H: int) -> np.ndarray:
    b = np.zeros(4 * H)
    b[H:2 * H] = 1.0
    return b


def _forward_batch(weights, dense_w, dense_b, params: LstmParams, X: np.ndarray,
                   training: bool, mask_rng: CounterRng | None):
    """Run (B, T, D) through the stack; returns outputs and the cache BPTT needs."""
    B, T, _ = X.shape
    H = params.hidden_size
    keep = 1.0 - params.dropout_rate
    cache = []
    current = X
    for l, layer in enumerate(weights):
        W, U, b = layer["W"], layer["U"], layer["b"]
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        steps = []
        outputs = np.empty((B, T, H))
        for t in range(T):
            x_t = current[:, t, :]
            z = x_t @ W + h @ U + b
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = _sigmoid(z[:, 3 * H:])
            c_new = f * c + i * g
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            if training and params.dropout_rate > 0.0:
                mask = (mask_rng.uniform_array(B * H).reshape(B, H)
                        >= params.dropout_rate) / keep
            else:
                mask = np.ones((B, H))
            steps.append({"x": x_t, "h_prev": h, "c_prev": c, "i": i, "f": f,
                          "g": g, "o": o, "tanh_c": tanh_c, "mask": mask})
            h, c = h_new, c_new
            outputs[:, t, :] = h_new * mask
        cache.append(steps)
        current = outputs
    final_hidden = current[:, -1, :]          # already dropout-masked
    y = final_hidden @ dense_w + dense_b
    return y, final_hidden, cache


def _backward_batch(weights, dense_w, params: LstmParams, cache, final_hidden,
                    dy: np.ndarray):
    """Full BPTT.  Returns gradients shaped like the weights."""
    B, H = final_hidden.shape
    T = len(cache[0])
    grads = [{"W": np.zeros_like(l["W"]), "U": np.zeros_like(l["U"]),
              "b": np.zeros_like(l["b"])} for l in weights]
    g_dense_w = final_hidden.T @ dy
    g_dense_b = dy.sum(axis=0)

    # gradient wrt each layer's (masked) output sequence
    n_layers = len(weights)
    d_out = [np.zeros((B, T, H)) for _ in range(n_layers)]
    d_out[-1][:, -1, :] = dy @ dense_w.T

    for l in range(n_layers - 1, -1, -1):
        W, U = weights[l]["W"], weights[l]["U"]
        steps = cache[l]
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        d_in = np.zeros((B, T, weights[l]["W"].shape[0]))
        for t in range(T - 1, -1, -1):
            s = steps[t]
            dh = d_out[l][:, t, :] * s["mask"] + dh_next
            dc = dc_next + dh * s["o"] * (1.0 - s["tanh_c"] ** 2)
            do = dh * s["tanh_c"]
            di = dc * s["g"]
            df = dc * s["c_prev"]
            dg = dc * s["i"]
            dz = np.concatenate([
                di * s["i"] * (1.0 - s["i"]),
                df * s["f"] * (1.0 - s["f"]),
                dg * (1.0 - s["g"] ** 2),
                do * s["o"] * (1.0 - s["o"]),
            ], axis=1)
            grads[l]["W"] += s["x"].T @ dz
            grads[l]["U"] += s["h_prev"].T @ dz
            grads[l]["b"] += dz.sum(axis=0)
            dh_next = dz @ U.T
            dc_next = dc * s["f"]
            d_in[:, t, :] = dz @ W.T
        if l > 0:
            # x of this layer IS the masked output of the one below, so d_in
            # already differentiates wrt the masked values
            d_out[l - 1] = d_in
    return grads, g_dense_w, g_dense_b


def forward(model: LstmModel, window: np.ndarray, training: bool = False,
            mask_rng: CounterRng | None = None) -> np.ndarray:
    """One window (lookback, width) through the stack; returns the scaled
    output vector.  training=True applies fresh dropout masks."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 2 or window.shape[1] != model.input_width:
        raise ShapeMismatchError(
            f"expected (T, {model.input_width}) input, got {window.shape}"
        )
    if training and model.params.dropout_rate > 0 and mask_rng is None:
        mask_rng = CounterRng(model.params.seed, stream=0xD0)
    y, _, _ = _forward_batch(model.weights, model.dense_w, model.dense_b,
                             model.params, window[None, :, :], training, mask_rng)
    return y[0]


def train(windows, params: LstmParams,
          scaler: MinMaxScaler | None = None) -> tuple[LstmModel, list[float]]:
    """Adam on MSE over the full output vector; returns (model, loss history).

    The last validation_fraction of the samples (chronological tail) is held
    out for early stopping with the configured patience; the best-validation
    weights are the ones returned.
    """
    inputs, targets = windows
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if inputs.ndim != 3 or len(inputs) != len(targets):
        raise ShapeMismatchError("windows must be (N, T, D) inputs with aligned targets")
    if targets.shape[1] != params.output_size:
        raise ShapeMismatchError(
            f"targets are {targets.shape[1]}-wide, params say {params.output_size}"
        )

    n = len(inputs)
    n_val = int(np.floor(n * params.validation_fraction)) if n >= 10 else 0
    train_X, train_y = inputs[: n - n_val], targets[: n - n_val]
    val_X, val_y = inputs[n - n_val:], targets[n - n_val:]

    model = init_model(params, inputs.shape[2], scaler)
    weights = [{k: layer[k].copy() for k in layer} for layer in model.weights]
    dense_w = model.dense_w.copy()
    dense_b = model.dense_b.copy()

    flat = _flatten(weights, dense_w, dense_b)
    adam_m = [np.zeros_like(p) for p in flat]
    adam_v = [np.zeros_like(p) for p in flat]
    adam_t = 0

    order_rng = CounterRng(params.seed, stream=0xA1)
    mask_rng = CounterRng(params.seed, stream=0xD0)
    history: list[float] = []
    best = (np.inf, None, -1)  # val loss, snapshot, epoch

    for epoch in range(params.epochs):
        order = order_rng.sample_indices(len(train_X), len(train_X))
        epoch_loss = 0.0
        for start in range(0, len(order), params.batch_size):
            idx = order[start:start + params.batch_size]
            X, y = train_X[idx], train_y[idx]
            pred, final_hidden, cache = _forward_batch(
                weights, dense_w, dense_b, params, X, True, mask_rng)
            err = pred - y
            loss = float(np.mean(err**2))
            if not np.isfinite(loss):
                raise NonFiniteLossError(f"loss diverged in epoch {epoch}")
            epoch_loss += loss * len(idx)
            dy = 2.0 * err / err.size
            grads, g_dw, g_db = _backward_batch(weights, dense_w, params, cache,
                                                final_hidden, dy)
            flat_grads = _flatten(grads, g_dw, g_db)
            _clip(flat_grads, params.clip_norm)
            adam_t += 1
            _adam_step(_flatten(weights, dense_w, dense_b), flat_grads,
                       adam_m, adam_v, adam_t, params)
        history.append(epoch_loss / len(train_X))

        if n_val:
            val_pred, _, _ = _forward_batch(weights, dense_w, dense_b, params,
                                            val_X, False, None)
            val_loss = float(np.mean((val_pred - val_y) ** 2))
            if val_loss < best[0] - 1e-12:
                best = (val_loss, _snapshot(weights, dense_w, dense_b), epoch)
            elif epoch - best[2] >= params.patience:
                break

    if n_val and best[1] is not None:
        weights, dense_w, dense_b = best[1]
    trained = LstmModel(weights=tuple(weights), dense_w=dense_w, dense_b=dense_b,
                        params=params, input_width=inputs.shape[2], scaler=scaler)
    return trained, history


def _snapshot(weights, dense_w, dense_b):
    return ([{k: v.copy() for k, v in layer.items()} for layer in weights],
            dense_w.copy(), dense_b.copy())


def _flatten(weights, dense_w, dense_b) -> list[np.ndarray]:
    flat = []
    for layer in weights:
        flat.extend([layer["W"], layer["U"], layer["b"]])
    flat.extend([dense_w, dense_b])
    return flat


def _clip(grads: list[np.ndarray], max_norm: float) -> None:
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total > max_norm:
        scale = max_norm / total
        for g in grads:
            g *= scale


def _adam_step(params_list, grads, m, v, t, params: LstmParams) -> None:
    b1, b2 = params.beta1, params.beta2
    for p, g, mi, vi in zip(params_list, grads, m, v):
        mi *= b1
        mi += (1 - b1) * g
        vi *= b2
        vi += (1 - b2) * g * g
        m_hat = mi / (1 - b1**t)
        v_hat = vi / (1 - b2**t)
        p -= params.learning_rate * m_hat / (np.sqrt(v_hat) + params.adam_eps)


def forecast(model: LstmModel, frame: FeatureFrame, horizon: int) -> np.ndarray:
    """Direct multi-horizon: one inference pass, first `horizon` outputs,
    inverse-scaled to MYR."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if horizon > model.params.output_size:
        raise HorizonTooLargeError(
            f"horizon {horizon} exceeds the {model.params.output_size}-step head"
        )
    if model.scaler is None:
        raise ValueError("forecast needs a scaler-equipped model")
    lookback = model.params.lookback_window
    if len(frame) < lookback:
        raise TooShortError(f"need at least {lookback} rows of history")
    from ..core import scale_transform

    scaled = scale_transform(frame, model.scaler)
    price = scaled.column(PRICE_COLUMN)
    if model.input_width > 1:
        feats = np.column_stack([price] + [scaled.column(c) for c in EXOGENOUS_COLUMNS])
    else:
        feats = price[:, None]
    out = forward(model, feats[-lookback:], training=False)
    return model.scaler.inverse_column(PRICE_COLUMN, out[:horizon])
