"""Fundamental time-series containers, transforms, metrics and splitting.

Everything downstream (ingestion, the five model families, the engine)
shares these types.  Conventions:

* A series is weekly.  Timestamps are ``datetime.date`` objects, strictly
  increasing, exactly 7 days apart.
* Missing values are ``NaN`` inside the containers; the magic sentinel
  (-99999) exists only as an ingestion strategy, never in core types.
* All containers are immutable after construction (arrays are marked
  read-only), so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AnchorMismatchError,
    ConstantColumnError,
    EmptyInputError,
    LengthMismatchError,
    TooShortError,
    UnknownColumnError,
)

WEEK = timedelta(days=7)
PRICE_COLUMN = "price_myr"
EXOGENOUS_COLUMNS = ("temperature_c", "humidity_pct", "precipitation_mm", "crude_oil_usd")

#: absolute tolerance for metric ties (see select_best)
TIE_TOLERANCE = 1e-12


def _readonly(values: Iterable[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float).copy()
    arr.flags.writeable = False
    return arr


def is_missing(values: np.ndarray) -> np.ndarray:
    return np.isnan(values)


@dataclass(frozen=True, eq=False)
class Series:
    """Weekly price sequence.  Values are MYR per unit, NaN marks a missing week."""

    timestamps: tuple[date, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "values", _readonly(self.values))
        if len(self.timestamps) != len(self.values):
            raise LengthMismatchError("timestamps and values differ in length")
        if len(self.timestamps) < 2:
            raise TooShortError("a series needs at least 2 points")
        for a, b in zip(self.timestamps, self.timestamps[1:]):
            if b - a != WEEK:
                raise ValueError(f"timestamps must step by exactly 7 days, got {a} -> {b}")
        finite = self.values[~np.isnan(self.values)]
        if finite.size and not np.all(np.isfinite(finite)):
            raise ValueError("series values must be finite or NaN")

    def __len__(self) -> int:
        return len(self.timestamps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return self.timestamps == other.timestamps and np.array_equal(
            self.values, other.values, equal_nan=True
        )

    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())

    def slice(self, start: int, stop: int) -> "Series":
        return Series(self.timestamps[start:stop], self.values[start:stop])

    def with_values(self, values) -> "Series":
        return Series(self.timestamps, values)


def weekly_timestamps(start: date, n: int) -> tuple[date, ...]:
    return tuple(start + WEEK * i for i in range(n))


@dataclass(frozen=True, eq=False)
class FeatureFrame:
    """A price series joined with aligned exogenous columns (possibly none)."""

    base: Series
    exogenous: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        cols = {}
        for name, values in self.exogenous.items():
            if not name or name == PRICE_COLUMN:
                raise UnknownColumnError(f"bad exogenous column name: {name!r}")
            arr = _readonly(values)
            if len(arr) != len(self.base):
                raise LengthMismatchError(
                    f"column {name!r} has {len(arr)} rows, base has {len(self.base)}"
                )
            cols[name] = arr
        object.__setattr__(self, "exogenous", cols)

    def __len__(self) -> int:
        return len(self.base)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureFrame):
            return NotImplemented
        if self.base != other.base or set(self.exogenous) != set(other.exogenous):
            return False
        return all(
            np.array_equal(self.exogenous[c], other.exogenous[c], equal_nan=True)
            for c in self.exogenous
        )

    @property
    def timestamps(self) -> tuple[date, ...]:
        return self.base.timestamps

    def columns(self) -> tuple[str, ...]:
        return (PRICE_COLUMN, *self.exogenous.keys())

    def column(self, name: str) -> np.ndarray:
        if name == PRICE_COLUMN:
            return self.base.values
        try:
            return self.exogenous[name]
        except KeyError:
            raise UnknownColumnError(name) from None

    def replace(self, **columns) -> "FeatureFrame":
        """New frame with the given columns swapped out (price via PRICE_COLUMN)."""
        base = self.base
        exo = dict(self.exogenous)
        for name, values in columns.items():
            if name == PRICE_COLUMN:
                base = base.with_values(values)
            elif name in exo:
                exo[name] = values
            else:
                raise UnknownColumnError(name)
        return FeatureFrame(base, exo)

    def slice(self, start: int, stop: int) -> "FeatureFrame":
        return FeatureFrame(
            self.base.slice(start, stop),
            {c: v[start:stop] for c, v in self.exogenous.items()},
        )

    def has_missing(self) -> bool:
        if self.base.has_missing():
            return True
        return any(np.isnan(v).any() for v in self.exogenous.values())


@dataclass(frozen=True)
class Window:
    """A held-out test partition: timestamps plus the prices to score against.

    Deliberately not a FeatureFrame — evaluation code gets only these rows
    and nothing else, so a fit can never peek at test data.
    """

    timestamps: tuple[date, ...]
    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "prices", _readonly(self.prices))
        if len(self.timestamps) != len(self.prices):
            raise LengthMismatchError("timestamps and prices differ in length")

    def __len__(self) -> int:
        return len(self.timestamps)


# ---------------------------------------------------------------------------
# min-max scaling


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-column affine map onto [0, 1]; invertible by construction."""

    bounds: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        object.__setattr__(self, "bounds", dict(self.bounds))
        for name, (lo, hi) in self.bounds.items():
            if not hi > lo:
                raise ConstantColumnError(f"column {name!r} has max <= min")

    def transform_column(self, name: str, values: np.ndarray) -> np.ndarray:
        lo, hi = self._get(name)
        return (np.asarray(values, dtype=float) - lo) / (hi - lo)

    def inverse_column(self, name: str, values: np.ndarray) -> np.ndarray:
        lo, hi = self._get(name)
        return np.asarray(values, dtype=float) * (hi - lo) + lo

    def _get(self, name: str) -> tuple[float, float]:
        try:
            return self.bounds[name]
        except KeyError:
            raise UnknownColumnError(name) from None


def scale_fit_transform(frame: FeatureFrame) -> tuple[FeatureFrame, MinMaxScaler]:
    """Fit per-column min/max on the frame and return the scaled frame + scaler.

    Missing cells are ignored while fitting and stay missing in the output.
    Raises ConstantColumnError for any column whose min equals its max; the
    caller is expected to drop such a column.
    """
    bounds = {}
    for name in frame.columns():
        col = frame.column(name)
        finite = col[~np.isnan(col)]
        if finite.size < 2 or np.unique(finite).size < 2:
            raise ConstantColumnError(f"column {name!r} needs two distinct non-missing values")
        bounds[name] = (float(finite.min()), float(finite.max()))
    scaler = MinMaxScaler(bounds)
    return scale_transform(frame, scaler), scaler


def scale_transform(frame: FeatureFrame, scaler: MinMaxScaler) -> FeatureFrame:
    scaled = {name: scaler.transform_column(name, frame.column(name)) for name in frame.columns()}
    return frame.replace(**scaled)


def scale_inverse(scaled: FeatureFrame, scaler: MinMaxScaler) -> FeatureFrame:
    raw = {name: scaler.inverse_column(name, scaled.column(name)) for name in scaled.columns()}
    return scaled.replace(**raw)


# ---------------------------------------------------------------------------
# differencing


def difference(series: Series, lag: int = 1) -> Series:
    """out[i] = x[i + lag] - x[i]; output is stamped at the later week."""
    if lag < 1:
        raise ValueError("lag must be >= 1")
    if series.has_missing():
        raise ValueError("difference requires a missing-free series")
    if len(series) - lag < 2:
        raise TooShortError(f"series of length {len(series)} cannot be differenced at lag {lag}")
    x = series.values
    return Series(series.timestamps[lag:], x[lag:] - x[:-lag])


def undifference(diffed: Series, anchors: Sequence[float], lag: int = 1) -> Series:
    """Rebuild levels from lag-differences.

    ``anchors`` are the ``lag`` original values immediately preceding the
    segment being reconstructed, so undifference(difference(x, lag), x[:lag])
    recovers x[lag:], and feeding forecast differences with the last ``lag``
    observed values as anchors maps forecasts back to the price level.
    """
    anchors = np.asarray(anchors, dtype=float)
    if len(anchors) != lag:
        raise AnchorMismatchError(f"need exactly {lag} anchors, got {len(anchors)}")
    d = diffed.values
    out = np.empty(len(d))
    for i in range(len(d)):
        prev = anchors[i] if i < lag else out[i - lag]
        out[i] = prev + d[i]
    return Series(diffed.timestamps, out)


def undifference_values(diffs: np.ndarray, anchors: Sequence[float]) -> np.ndarray:
    """Array flavour of undifference with lag = len(anchors); used by forecasters."""
    anchors = np.asarray(anchors, dtype=float)
    lag = len(anchors)
    d = np.asarray(diffs, dtype=float)
    out = np.empty(len(d))
    for i in range(len(d)):
        prev = anchors[i] if i < lag else out[i - lag]
        out[i] = prev + d[i]
    return out


# ---------------------------------------------------------------------------
# metrics


def mse(actual, predicted) -> float:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.size == 0:
        raise EmptyInputError("mse of empty vectors")
    if a.shape != p.shape:
        raise LengthMismatchError(f"mse shapes differ: {a.shape} vs {p.shape}")
    return float(np.mean((a - p) ** 2))


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    """Chronological split policy: simple holdout or expanding-window CV."""

    mode: str = "holdout"  # "holdout" | "expanding-window-cv"
    train_fraction: float = 0.9
    folds: int = 3

    def __post_init__(self):
        if self.mode not in ("holdout", "expanding-window-cv"):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.mode == "expanding-window-cv" and self.folds < 2:
            raise ValueError("cv mode needs folds >= 2")


def split(frame: FeatureFrame, spec: SplitSpec):
    """Chronological partitions; train rows always precede their test rows.

    holdout -> (train FeatureFrame, test Window).
    expanding-window-cv -> list of (train, test) pairs where the window width
    is n // (2 * folds) and the first train segment covers the remaining
    prefix, e.g. 90 rows / 3 folds gives train ends at 45, 60, 75 with
    15-row test windows.
    """
    n = len(frame)
    if spec.mode == "holdout":
        if n < 10:
            raise TooShortError(f"holdout split needs >= 10 rows, got {n}")
        train_len = int(np.floor(n * spec.train_fraction))
        if train_len < 2 or train_len >= n:
            raise TooShortError("train_fraction leaves an unusable partition")
        return frame.slice(0, train_len), _window(frame, train_len, n)

    width = n // (2 * spec.folds)
    if width < 1:
        raise TooShortError(f"{n} rows cannot support {spec.folds} cv folds")
    folds = []
    for i in range(spec.folds):
        train_end = n - (spec.folds - i) * width
        if train_end < 2:
            raise TooShortError(f"{n} rows cannot support {spec.folds} cv folds")
        folds.append((frame.slice(0, train_end), _window(frame, train_end, train_end + width)))
    return folds


def _window(frame: FeatureFrame, start: int, stop: int) -> Window:
    return Window(frame.timestamps[start:stop], frame.base.values[start:stop])
