"""Load weekly price CSVs, normalize the calendar, and synthesize test data.

CSV schema (UTF-8, comma separated, header row):

    date,commodity,price_myr,temperature_c,humidity_pct,precipitation_mm,crude_oil_usd

Empty field = missing, dates are YYYY-MM-DD, one row per commodity-week.
Dates are snapped to the Monday of their ISO week so every frame sits on a
deterministic uniform grid; weeks absent from a file become explicit missing
cells.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .core import EXOGENOUS_COLUMNS, PRICE_COLUMN, FeatureFrame, Series, weekly_timestamps
from .errors import (
    AllMissingColumnError,
    EmptyFileError,
    InvalidSpecError,
    ParseError,
    UnknownCommodityError,
)

log = logging.getLogger(__name__)

CSV_HEADER = ("date", "commodity", PRICE_COLUMN) + EXOGENOUS_COLUMNS

#: the "valid but not influence" magic number some pipelines use for gaps
SENTINEL_VALUE = -99999.0


@dataclass(frozen=True)
class MissingPolicy:
    """How to clear gaps before modelling: sentinel_fill, drop_rows or forward_fill."""

    strategy: str = "forward_fill"

    def __post_init__(self):
        if self.strategy not in ("sentinel_fill", "drop_rows", "forward_fill"):
            raise ValueError(f"unknown missing strategy {self.strategy!r}")


@dataclass(frozen=True)
class SyntheticSpec:
    """Targets for the synthetic generator, typically taken from real price stats."""

    commodity: str
    mean: float
    minimum: float
    maximum: float
    stddev: float
    missing_rate: float = 0.02
    n_weeks: int = 520
    seed: int = 0
    start: date = date(2008, 12, 1)

    def __post_init__(self):
        if not self.minimum < self.mean < self.maximum:
            raise InvalidSpecError("need min < mean < max")
        if self.stddev <= 0:
            raise InvalidSpecError("stddev must be positive")
        if not 0 <= self.missing_rate < 0.1:
            raise InvalidSpecError("missing_rate must be in [0, 0.1)")
        if self.n_weeks < 2:
            raise InvalidSpecError("n_weeks must be >= 2")


def monday_of_week(d: date) -> date:
    return d - timedelta(days=d.weekday())


def load_csv(path_or_file, commodity: str) -> FeatureFrame:
    """Read one commodity out of a schema CSV into a grid-complete frame.

    Rows are sorted, duplicated weeks are dropped (first kept, warning
    logged) and skipped weeks appear as missing cells.
    """
    if hasattr(path_or_file, "read"):
        rows = _parse(path_or_file)
    else:
        with open(path_or_file, newline="", encoding="utf-8") as fh:
            rows = _parse(fh)
    if not rows:
        raise EmptyFileError("no data rows in file")

    mine = {}
    seen_commodities = set()
    duplicates = 0
    for rec in rows:
        seen_commodities.add(rec["commodity"])
        if rec["commodity"] != commodity:
            continue
        week = monday_of_week(rec["date"])
        if week in mine:
            duplicates += 1
            continue
        mine[week] = rec
    if not mine:
        raise UnknownCommodityError(
            f"{commodity!r} not in file (has: {', '.join(sorted(seen_commodities))})"
        )
    if duplicates:
        log.warning("%s: dropped %d duplicate week rows", commodity, duplicates)

    weeks = sorted(mine)
    n = (weeks[-1] - weeks[0]).days // 7 + 1
    grid = weekly_timestamps(weeks[0], n)
    price = np.full(n, np.nan)
    exo = {c: np.full(n, np.nan) for c in EXOGENOUS_COLUMNS}
    for week, rec in mine.items():
        i = (week - weeks[0]).days // 7
        price[i] = rec[PRICE_COLUMN]
        for c in EXOGENOUS_COLUMNS:
            exo[c][i] = rec[c]

    # columns that were never populated are simply absent, not all-NaN
    exo = {c: v for c, v in exo.items() if not np.all(np.isnan(v))}
    return FeatureFrame(Series(grid, price), exo)


def _parse(fh) -> list[dict]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyFileError("empty file") from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise ParseError(f"bad header: expected {','.join(CSV_HEADER)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise ParseError(f"row {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        rec = {"commodity": row[1].strip()}
        try:
            rec["date"] = date.fromisoformat(row[0].strip())
        except ValueError:
            raise ParseError(f"row {lineno}, column date: {row[0]!r} is not YYYY-MM-DD") from None
        for j, name in enumerate(CSV_HEADER[2:], start=2):
            cell = row[j].strip()
            if cell == "":
                rec[name] = math.nan
                continue
            try:
                rec[name] = float(cell)
            except ValueError:
                raise ParseError(f"row {lineno}, column {name}: {cell!r} is not a number") from None
        if not math.isnan(rec[PRICE_COLUMN]) and rec[PRICE_COLUMN] <= 0:
            raise ParseError(f"row {lineno}, column {PRICE_COLUMN}: price must be > 0")
        rows.append(rec)
    return rows


def write_csv(frame: FeatureFrame, commodity: str, fh=None) -> str:
    """Serialize a frame back to the schema; load_csv(write_csv(f)) == f bit-exactly."""
    out = fh or io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i, ts in enumerate(frame.timestamps):
        row = [ts.isoformat(), commodity, _cell(frame.base.values[i])]
        for c in EXOGENOUS_COLUMNS:
            row.append(_cell(frame.exogenous[c][i]) if c in frame.exogenous else "")
        writer.writerow(row)
    return out.getvalue() if fh is None else ""


def _cell(value: float) -> str:
    # repr round-trips doubles exactly, which keeps reload bit-exact
    return "" if math.isnan(value) else repr(float(value))


def apply_missing_policy(frame: FeatureFrame, policy: MissingPolicy) -> FeatureFrame:
    """Resolve missing cells with one of the three supported strategies.

    sentinel_fill keeps the row count and plants -99999 in every gap (kept
    for fidelity with pipelines that do this; it badly distorts any
    distance-based model and the engine attaches a warning when it meets
    it).  drop_rows removes any row with a gap in any column.  forward_fill,
    the default, carries the nearest earlier value forward (leading gaps
    take the nearest later value).
    """
    if policy.strategy == "sentinel_fill":
        cols = {
            name: np.where(np.isnan(frame.column(name)), SENTINEL_VALUE, frame.column(name))
            for name in frame.columns()
        }
        return frame.replace(**cols)

    if policy.strategy == "drop_rows":
        keep = ~np.isnan(frame.base.values)
        for v in frame.exogenous.values():
            keep &= ~np.isnan(v)
        if keep.sum() == 0:
            raise AllMissingColumnError("every row has a missing cell")
        # dropping interior rows breaks the weekly grid, so rebuild one: the
        # surviving values are re-indexed onto consecutive weeks from the
        # first kept timestamp (row count of the clean segment is what the
        # sentinel-vs-drop comparison cares about, not calendar fidelity)
        idx = np.flatnonzero(keep)
        grid = weekly_timestamps(frame.timestamps[idx[0]], len(idx))
        base = Series(grid, frame.base.values[idx])
        exo = {c: v[idx] for c, v in frame.exogenous.items()}
        return FeatureFrame(base, exo)

    cols = {}
    for name in frame.columns():
        values = frame.column(name).copy()
        if np.all(np.isnan(values)):
            raise AllMissingColumnError(f"column {name!r} is entirely missing")
        cols[name] = _forward_fill(values)
    return frame.replace(**cols)


def _forward_fill(values: np.ndarray) -> np.ndarray:
    filled = values.copy()
    last = np.nan
    for i in range(len(filled)):
        if np.isnan(filled[i]):
            filled[i] = last
        else:
            last = filled[i]
    # leading gaps take the first observed value
    first = filled[~np.isnan(filled)][0]
    filled[np.isnan(filled)] = first
    return filled


def generate_synthetic(spec: SyntheticSpec) -> FeatureFrame:
    """Seasonal + AR(1) + crude-oil-driven weekly prices matching target stats.

    The price is built from three roughly independent components whose
    variances sum to the target: a 52-week sinusoid (55%), AR(1) noise with
    phi = 0.7 (36%) and a 0.3-weight contribution from the standardized
    crude-oil random walk (9%), then shifted to the target mean and clipped
    into [min, max].  Exogenous weather columns are phase-shifted seasonal
    signals; crude oil is the random walk itself, so multivariate models
    have real signal to find.  Exactly floor(missing_rate * n) price cells
    are blanked at seeded-random positions.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_weeks
    t = np.arange(n)
    season = np.sin(2 * np.pi * t / 52.0 + rng.uniform(0, 2 * np.pi))

    ar = np.empty(n)
    ar[0] = rng.normal()
    shocks = rng.normal(size=n)
    for i in range(1, n):
        ar[i] = 0.7 * ar[i - 1] + shocks[i]
    ar = (ar - ar.mean()) / max(ar.std(), 1e-12)

    crude = 65.0 + np.cumsum(rng.normal(scale=1.5, size=n))
    crude = np.clip(crude, 20.0, 150.0)
    crude_z = (crude - crude.mean()) / max(crude.std(), 1e-12)

    s = spec.stddev
    price = (
        spec.mean
        + season * s * np.sqrt(2 * 0.55)
        + ar * s * np.sqrt(0.36)
        + crude_z * s * 0.3
    )
    price = np.clip(price, spec.minimum, spec.maximum)

    n_missing = int(np.floor(spec.missing_rate * n))
    if n_missing:
        holes = rng.choice(n, size=n_missing, replace=False)
        price[holes] = np.nan

    temperature = 27.0 + 3.0 * np.sin(2 * np.pi * t / 52.0 + 0.8) + rng.normal(scale=0.6, size=n)
    humidity = np.clip(
        80.0 + 8.0 * np.sin(2 * np.pi * t / 52.0 + 2.1) + rng.normal(scale=2.0, size=n), 0, 100
    )
    precipitation = np.clip(
        200.0 + 120.0 * np.sin(2 * np.pi * t / 52.0 + 3.4) + rng.normal(scale=25.0, size=n),
        0,
        None,
    )

    base = Series(weekly_timestamps(monday_of_week(spec.start), n), price)
    return FeatureFrame(
        base,
        {
            "temperature_c": temperature,
            "humidity_pct": humidity,
            "precipitation_mm": precipitation,
            "crude_oil_usd": crude,
        },
    )


#: Real price statistics for the three reference commodities (mean, min, max, std)
TABLE_STATS = {
    "chicken": (4.84, 3.50, 6.25, 0.52),
    "chili": (5.92, 2.90, 12.0, 1.55),
    "tomato": (2.19, 0.50, 6.35, 0.83),
}

#: Extra synthetic commodities so a seeded deployment lists at least 7
EXTRA_STATS = {
    "cabbage": (2.80, 1.20, 5.50, 0.60),
    "cucumber": (2.30, 0.90, 4.80, 0.55),
    "papaya": (3.10, 1.50, 6.00, 0.70),
    "sweet_potato": (2.60, 1.10, 5.20, 0.58),
}


def preset_spec(commodity: str, n_weeks: int = 520, seed: int = 0,
                missing_rate: float = 0.02) -> SyntheticSpec:
    stats = {**TABLE_STATS, **EXTRA_STATS}.get(commodity)
    if stats is None:
        raise UnknownCommodityError(f"no preset statistics for {commodity!r}")
    mean, lo, hi, sd = stats
    return SyntheticSpec(commodity, mean, lo, hi, sd, missing_rate=missing_rate,
                         n_weeks=n_weeks, seed=seed)
