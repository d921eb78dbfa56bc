"""The four-process engine: preprocess, tune, train/test, select.

Preprocessing clears missing cells with the configured policy.  Tuning
runs a small deterministic grid per family scored by expanding-window CV
MSE.  Training fits on the chronological train split, forecasts the test
window, and reports MSE on the price scale (MYR squared) so numbers stay
comparable across families.  Selection takes the smallest MSE with ties
broken by the fixed family order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from ..core import (
    PRICE_COLUMN,
    TIE_TOLERANCE,
    FeatureFrame,
    SplitSpec,
    mse,
    split,
)
from ..errors import (
    AgripriceError,
    AllMissingColumnError,
    EmptyReportError,
    GridExhaustedError,
)
from ..ingest import SENTINEL_VALUE, MissingPolicy, apply_missing_policy
from ..stationarity import OrderSuggestion, suggest_order
from .artifacts import build_artifact, frame_fingerprint
from .forecasters import FAMILY_ORDER, UNIVARIATE, make_forecaster

log = logging.getLogger(__name__)

#: deterministic tuning grids; each entry is a hyper-dict overlay
TUNING_GRIDS = {
    "arima": None,  # candidates come from the order-suggestion pipeline
    "svr": [{"c": value} for value in (0.1, 1.0, 10.0, 100.0)],
    "trend": [{"prior_scale": value} for value in (0.05, 0.5, 5.0, 10.0, 30.0)],
    "gbt": [{"learning_rate": value} for value in (0.1, 0.3)],
    "lstm": [{"dropout_rate": value} for value in (0.1, 0.2, 0.3)],
}


@dataclass(frozen=True)
class ModelSpec:
    family: str
    mode: str = UNIVARIATE
    hyper: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILY_ORDER:
            raise ValueError(f"unknown family {self.family!r}")
        if self.mode not in ("univariate", "multivariate"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.family == "arima" and self.mode != "univariate":
            raise ValueError("arima supports univariate mode only")

    def key(self) -> tuple[int, int]:
        return (FAMILY_ORDER.index(self.family), 0 if self.mode == "univariate" else 1)


@dataclass(frozen=True)
class CellResult:
    family: str
    mode: str
    mse: float | None
    train_rows: int = 0
    test_rows: int = 0
    hyper: dict = field(default_factory=dict)
    artifact_id: str | None = None
    warnings: tuple[str, ...] = ()
    error: str | None = None


@dataclass(frozen=True)
class EvaluationReport:
    commodity: str
    cells: tuple[CellResult, ...]
    winner: ModelSpec | None
    split: SplitSpec
    generated_at: str


def preprocess(frame: FeatureFrame, policy: MissingPolicy) -> FeatureFrame:
    """Process 1: clear gaps; the result has zero missing price cells."""
    if not frame.has_missing():
        return frame
    cleaned = apply_missing_policy(frame, policy)
    if np.isnan(cleaned.column(PRICE_COLUMN)).any():
        raise AllMissingColumnError("price column still has gaps after preprocessing")
    return cleaned


def order_grid_from_suggestion(suggestion: OrderSuggestion) -> list[dict]:
    """ARIMA candidates: one order per AR candidate at the suggested (d, q)."""
    grid = []
    for p in suggestion.p_candidates:
        if p == 0 and suggestion.q == 0 and suggestion.d == 0:
            continue
        grid.append({"order": (p, suggestion.d, suggestion.q)})
    if not grid:
        # white-noise reading: fall back to the two minimal one-term models
        grid = [{"order": (1, 0, 0)}, {"order": (0, 0, 1)}]
    return grid


def tune(family: str, frame: FeatureFrame, mode: str = UNIVARIATE,
         cv: SplitSpec | None = None, overrides: dict | None = None) -> dict:
    """Process 2: pick the grid entry with the lowest expanding-window CV MSE.

    overrides are merged into every candidate (that is how tests shrink the
    LSTM).  Ties go to the earlier grid entry.  A grid whose every candidate
    fails raises GridExhausted.
    """
    cv = cv or SplitSpec(mode="expanding-window-cv", folds=3)
    overrides = overrides or {}
    if family == "arima":
        grid = order_grid_from_suggestion(suggest_order(frame.base))
    else:
        grid = TUNING_GRIDS[family]

    folds = split(frame, cv)
    best = None
    failures = []
    for entry in grid:
        hyper = {**entry, **overrides}
        scores = []
        try:
            for train_frame, test_window in folds:
                forecaster = make_forecaster(family, hyper, mode).fit(train_frame)
                scores.append(mse(test_window.prices, forecaster.forecast(len(test_window))))
        except AgripriceError as exc:
            failures.append(f"{entry}: {exc}")
            continue
        score = float(np.mean(scores))
        if best is None or score < best[0] - TIE_TOLERANCE:
            best = (score, hyper)
    if best is None:
        raise GridExhaustedError(f"every {family} candidate failed: {'; '.join(failures)}")
    return best[1]


def train_and_test(spec: ModelSpec, frame: FeatureFrame,
                   split_spec: SplitSpec | None = None,
                   commodity: str = "") -> tuple[dict, float]:
    """Process 3: fit on the train partition, score MYR-scale MSE on the test
    window, and wrap the fitted model into a persistable artifact."""
    split_spec = split_spec or SplitSpec()
    train_frame, test_window = split(frame, split_spec)
    forecaster = make_forecaster(spec.family, spec.hyper, spec.mode).fit(train_frame)
    predictions = forecaster.forecast(len(test_window))
    test_mse = mse(test_window.prices, predictions)
    artifact = build_artifact(spec.family, spec.mode, _jsonable(spec.hyper),
                              forecaster.payload(),
                              frame_fingerprint(frame, commodity), commodity)
    return artifact, test_mse


def select_best(results: dict[tuple[str, str], float]) -> tuple[str, str]:
    """Process 4: argmin MSE; ties (within 1e-12) go to the canonical family
    order, univariate before multivariate."""
    if not results:
        raise EmptyReportError("nothing to select from")
    ranked = sorted(
        results.items(),
        key=lambda item: (item[1], FAMILY_ORDER.index(item[0][0]), item[0][1] != "univariate"),
    )
    best_mse = ranked[0][1]
    tied = [key for key, value in ranked if value <= best_mse + TIE_TOLERANCE]
    tied.sort(key=lambda key: (FAMILY_ORDER.index(key[0]), key[1] != "univariate"))
    return tied[0]


def run_experiment(frames: dict[str, FeatureFrame], modes=("univariate",),
                   split_spec: SplitSpec | None = None,
                   policy: MissingPolicy | None = None,
                   tune_first: bool = False,
                   overrides: dict[str, dict] | None = None,
                   store=None) -> list[EvaluationReport]:
    """Evaluate every family x mode cell per commodity and pick each winner.

    Cell failures are recorded in the report and do not stop the run.
    overrides maps family name -> hyper overlay (applied after tuning).
    """
    split_spec = split_spec or SplitSpec()
    policy = policy or MissingPolicy()
    overrides = overrides or {}
    reports = []
    for commodity in sorted(frames):
        frame = preprocess(frames[commodity], policy)
        sentinel_present = bool(np.any(frame.column(PRICE_COLUMN) == SENTINEL_VALUE))
        cells = []
        scores: dict[tuple[str, str], float] = {}
        hypers: dict[tuple[str, str], dict] = {}
        train_rows = int(np.floor(len(frame) * split_spec.train_fraction))
        test_rows = len(frame) - train_rows
        for family in FAMILY_ORDER:
            for mode in modes:
                if family == "arima" and mode != "univariate":
                    continue
                warnings = ()
                if sentinel_present and family == "svr":
                    warnings = ("sentinel fill (-99999) distorts RBF distances; "
                                "prefer the forward_fill policy",)
                try:
                    hyper = dict(overrides.get(family, {}))
                    if tune_first:
                        hyper = tune(family, frame, mode,
                                     overrides=overrides.get(family))
                    spec = ModelSpec(family, mode, hyper)
                    artifact, cell_mse = train_and_test(spec, frame, split_spec, commodity)
                    artifact_id = store.save(artifact) if store is not None else None
                    cells.append(CellResult(family, mode, cell_mse, train_rows,
                                            test_rows, hyper, artifact_id, warnings))
                    scores[(family, mode)] = cell_mse
                    hypers[(family, mode)] = hyper
                except AgripriceError as exc:
                    log.warning("%s %s/%s failed: %s", commodity, family, mode, exc)
                    cells.append(CellResult(family, mode, None, train_rows, test_rows,
                                            warnings=warnings, error=str(exc)))
        winner = None
        if scores:
            family, mode = select_best(scores)
            winner = ModelSpec(family, mode, hypers[(family, mode)])
        reports.append(EvaluationReport(
            commodity=commodity,
            cells=tuple(cells),
            winner=winner,
            split=split_spec,
            generated_at=datetime.now(timezone.utc).isoformat(),
        ))
    return reports


def report_to_csv(reports: list[EvaluationReport]) -> str:
    lines = ["commodity,family,mode,mse,train_rows,test_rows,warnings"]
    for report in reports:
        for cell in report.cells:
            value = "" if cell.mse is None else repr(cell.mse)
            notes = "; ".join(cell.warnings)
            if cell.error:
                notes = f"error: {cell.error}" + (f"; {notes}" if notes else "")
            notes = notes.replace(",", ";")
            lines.append(f"{report.commodity},{cell.family},{cell.mode},{value},"
                         f"{cell.train_rows},{cell.test_rows},{notes}")
    return "\n".join(lines) + "\n"


def render_table(reports: list[EvaluationReport]) -> str:
    """Figure-style comparison table: one row per family/mode, one column
    per commodity."""
    commodities = [r.commodity for r in reports]
    rows: dict[tuple[str, str], dict[str, str]] = {}
    for report in reports:
        for cell in report.cells:
            label = (cell.family, cell.mode)
            value = "failed" if cell.mse is None else f"{cell.mse:.4f}"
            rows.setdefault(label, {})[report.commodity] = value
    header = ["model"] + commodities
    widths = [max(18, len(header[0]))] + [max(10, len(c)) for c in commodities]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for (family, mode), values in sorted(
        rows.items(), key=lambda kv: (FAMILY_ORDER.index(kv[0][0]), kv[0][1])
    ):
        label = f"{family} ({mode})"
        cells = [values.get(c, "-") for c in commodities]
        out.append("  ".join(x.ljust(w) for x, w in zip([label] + cells, widths)))
    winners = ", ".join(
        f"{r.commodity}: {r.winner.family}/{r.winner.mode}" for r in reports if r.winner
    )
    if winners:
        out.append(f"selected: {winners}")
    return "\n".join(out) + "\n"


def _jsonable(hyper: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in hyper.items()}
