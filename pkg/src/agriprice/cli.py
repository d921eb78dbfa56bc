"""Operator entry point: ingest CSVs, synthesize data, run the benchmark
series, emit forecast files, and serve the HTTP API.

Exit codes: 0 ok, 2 usage, 3 data error, 4 model error.  Failures print a
single machine-parseable line: ``error: <code>: <message>``.
"""

from __future__ import annotations

import csv as csv_module
import functools
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import engine as eng
from .core import PRICE_COLUMN, WEEK, EXOGENOUS_COLUMNS, SplitSpec
from .errors import AgripriceError, DataError, ModelError
from .ingest import (
    MissingPolicy,
    SyntheticSpec,
    TABLE_STATS,
    EXTRA_STATS,
    generate_synthetic,
    load_csv,
    preset_spec,
    write_csv,
)
from .service import ServiceConfig, Store, create_app, seed_demo_data

POLICY_ALIASES = {"sentinel": "sentinel_fill", "drop": "drop_rows", "ffill": "forward_fill"}

#: reduced configuration for desk-scale runs (--quick)
QUICK_FAMILIES = ("arima", "trend", "svr", "gbt")
QUICK_OVERRIDES = {
    "gbt": {"n_estimators": 40, "max_depth": 3},
    "svr": {"c": 1.0},
}


def _fail(exc: AgripriceError):
    click.echo(f"error: {exc.code}: {exc}", err=True)
    sys.exit(3 if isinstance(exc, DataError) else 4 if isinstance(exc, ModelError) else 1)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except AgripriceError as exc:
            _fail(exc)

    return wrapper


@click.group()
@click.option("--data-dir", default="./data", show_default=True,
              help="Directory for the store, artifacts and reports.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--policy", default="ffill", show_default=True,
              type=click.Choice(sorted(POLICY_ALIASES)))
@click.option("--train-fraction", default=0.9, show_default=True, type=float)
@click.option("-v", "--verbose", count=True)
@click.pass_context
def main(ctx, data_dir, seed, policy, train_fraction, verbose):
    """Agriculture commodity price forecasting toolkit."""
    import logging

    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2))
    ctx.obj = {
        "data_dir": Path(data_dir),
        "seed": seed,
        "policy": MissingPolicy(POLICY_ALIASES[policy]),
        "split": SplitSpec(train_fraction=train_fraction),
    }


def _store(ctx) -> Store:
    ctx["data_dir"].mkdir(parents=True, exist_ok=True)
    return Store(ctx["data_dir"] / "agriprice.db")


@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.pass_obj
@handle_errors
def ingest(ctx, files):
    """Load schema CSVs into the data store, one summary line per commodity."""
    store = _store(ctx)
    for path in files:
        commodities = set()
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv_module.reader(fh)
            next(reader, None)
            for row in reader:
                if len(row) > 1 and row[1].strip():
                    commodities.add(row[1].strip())
        for name in sorted(commodities):
            frame = load_csv(path, name)
            rows = store.replace_series(name, frame)
            missing = int(np.isnan(frame.column(PRICE_COLUMN)).sum())
            click.echo(f"{name}: {rows} weeks, {missing} missing "
                       f"({100.0 * missing / rows:.1f}%) from {path}")


@main.command()
@click.option("--commodity", required=True,
              help=f"Preset name ({', '.join(sorted({**TABLE_STATS, **EXTRA_STATS}))}) "
                   "or any name when explicit stats are given.")
@click.option("--n-weeks", default=588, show_default=True, type=int)
@click.option("--missing-rate", default=0.02, show_default=True, type=float)
@click.option("--mean", type=float, default=None)
@click.option("--min", "minimum", type=float, default=None)
@click.option("--max", "maximum", type=float, default=None)
@click.option("--std", "stddev", type=float, default=None)
@click.option("--out", type=click.Path(), default=None,
              help="Output CSV path [default: <data-dir>/<commodity>.csv]")
@click.pass_obj
def synth(ctx, commodity, n_weeks, missing_rate, mean, minimum, maximum, stddev, out):
    """Generate a synthetic weekly series with target statistics."""
    try:
        if None not in (mean, minimum, maximum, stddev):
            spec = SyntheticSpec(commodity, mean, minimum, maximum, stddev,
                                 missing_rate=missing_rate, n_weeks=n_weeks,
                                 seed=ctx["seed"])
        elif any(v is not None for v in (mean, minimum, maximum, stddev)):
            raise click.UsageError("give all of --mean/--min/--max/--std or none")
        else:
            spec = preset_spec(commodity, n_weeks=n_weeks, seed=ctx["seed"],
                               missing_rate=missing_rate)
        frame = generate_synthetic(spec)
    except DataError as exc:
        raise click.UsageError(str(exc)) from None
    ctx["data_dir"].mkdir(parents=True, exist_ok=True)
    path = Path(out) if out else ctx["data_dir"] / f"{commodity}.csv"
    path.write_text(write_csv(frame, commodity), encoding="utf-8")
    click.echo(f"{commodity}: wrote {len(frame)} weeks to {path}")


@main.command()
@click.option("--series", type=click.Choice(["1", "2"]), default="1", show_default=True)
@click.option("--commodity", "commodities", multiple=True,
              help="Commodities to benchmark [default: everything ingested].")
@click.option("--quick", is_flag=True,
              help="Skip the LSTM and shrink the tree count for a fast run.")
@click.option("--tune", "tune_first", is_flag=True,
              help="Grid-tune each family by expanding-window CV before "
                   "training (slow with the LSTM in play).")
@click.option("--out", type=click.Path(), default=None,
              help="Report CSV path [default: <data-dir>/report_series<N>.csv]")
@click.pass_obj
@handle_errors
def benchmark(ctx, series, commodities, quick, tune_first, out):
    """Run one experiment series and emit the comparison table + report CSV."""
    store = _store(ctx)
    names = list(commodities) if commodities else store.list_commodities()
    if not names:
        raise DataError("no commodities ingested; run `agriprice ingest` or `synth` first")
    frames = {name: store.get_frame(name) for name in names}

    modes = ("univariate",) if series == "1" else ("univariate", "multivariate")
    if series == "2":
        for name, frame in frames.items():
            absent = [c for c in EXOGENOUS_COLUMNS if c not in frame.exogenous]
            if absent:
                raise DataError(
                    f"{name} lacks exogenous columns needed for series 2: {', '.join(absent)}"
                )

    overrides = {"lstm": {"seed": ctx["seed"]}}
    families = eng.FAMILY_ORDER
    if quick:
        families = QUICK_FAMILIES
        overrides.update(QUICK_OVERRIDES)

    reports = _run_benchmark(frames, modes, ctx, families, overrides, tune_first)
    click.echo(eng.render_table(reports))
    path = Path(out) if out else ctx["data_dir"] / f"report_series{series}.csv"
    path.write_text(eng.report_to_csv(reports), encoding="utf-8")
    meta = {"seed": ctx["seed"], "series": int(series),
            "generated_at": datetime.now(timezone.utc).isoformat(),
            "commodities": names, "families": list(families)}
    Path(f"{path}.meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    click.echo(f"report: {path}")


def _run_benchmark(frames, modes, ctx, families, overrides, tune_first=False):
    from .engine.engine import run_experiment

    kept = {f: o for f, o in overrides.items() if f in families}
    reports = run_experiment(frames, modes=modes, split_spec=ctx["split"],
                             policy=ctx["policy"], overrides=kept,
                             tune_first=tune_first)
    # drop cells for families outside the requested set
    trimmed = []
    for report in reports:
        cells = tuple(c for c in report.cells if c.family in families)
        scores = {(c.family, c.mode): c.mse for c in cells if c.mse is not None}
        winner = None
        if scores:
            family, mode = eng.select_best(scores)
            hyper = next(c.hyper for c in cells if (c.family, c.mode) == (family, mode))
            winner = eng.ModelSpec(family, mode, hyper)
        trimmed.append(eng.EvaluationReport(report.commodity, cells, winner,
                                            report.split, report.generated_at))
    return trimmed


@main.command()
@click.option("--commodity", required=True)
@click.option("--mode", type=click.Choice(["uni", "multi"]), default="uni",
              show_default=True)
@click.option("--horizon", default=52, show_default=True, type=int)
@click.option("--quick", is_flag=True, help="Skip the LSTM for a fast run.")
@click.option("--out", type=click.Path(), default=None,
              help="Plot-data CSV path [default: <data-dir>/<commodity>_forecast.csv]")
@click.pass_obj
@handle_errors
def forecast(ctx, commodity, mode, horizon, quick, out):
    """Select the best model, forecast, and write a two-segment plot CSV.

    Rows carry a `forecast` flag: 0 for history, 1 for predicted weeks.
    """
    store = _store(ctx)
    frame = store.get_frame(commodity)
    full_mode = "univariate" if mode == "uni" else "multivariate"

    families = QUICK_FAMILIES if quick else eng.FAMILY_ORDER
    overrides = dict(QUICK_OVERRIDES) if quick else {}
    overrides.setdefault("lstm", {"seed": ctx["seed"]})

    clean = eng.preprocess(frame, ctx["policy"])
    scores, hypers = {}, {}
    for family in families:
        if family == "arima" and full_mode != "univariate":
            continue
        hyper = dict(overrides.get(family, {}))
        try:
            spec = eng.ModelSpec(family, full_mode, hyper)
            _, family_mse = eng.train_and_test(spec, clean, ctx["split"], commodity)
            scores[(family, full_mode)] = family_mse
            hypers[(family, full_mode)] = hyper
        except AgripriceError as exc:
            click.echo(f"note: {family} skipped ({exc.code})", err=True)
    if not scores:
        raise ModelError(f"no model family could be trained for {commodity}")
    family, _ = eng.select_best(scores)
    fitted = eng.make_forecaster(family, hypers[(family, full_mode)], full_mode).fit(clean)
    values = fitted.forecast(horizon)

    path = Path(out) if out else ctx["data_dir"] / f"{commodity}_forecast.csv"
    lines = ["date,price_myr,forecast"]
    for ts, price in zip(frame.timestamps, frame.column(PRICE_COLUMN)):
        cell = "" if np.isnan(price) else repr(float(price))
        lines.append(f"{ts.isoformat()},{cell},0")
    last = frame.timestamps[-1]
    for k, value in enumerate(values):
        lines.append(f"{(last + WEEK * (k + 1)).isoformat()},{value!r},1")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"{commodity}: {family} ({full_mode}) forecast of {horizon} weeks -> {path}")


@main.command()
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@click.option("--seed-demo", is_flag=True,
              help="Seed the 7 demo commodities when the store is empty.")
@click.option("--quick", is_flag=True, help="Serve with the fast family set.")
@click.pass_obj
@handle_errors
def serve(ctx, bind, seed_demo, quick):
    """Run the HTTP API until interrupted."""
    import uvicorn

    host, _, port = bind.partition(":")
    config = ServiceConfig(
        data_dir=str(ctx["data_dir"]),
        families=QUICK_FAMILIES if quick else eng.FAMILY_ORDER,
        overrides=dict(QUICK_OVERRIDES) if quick else {},
        policy=ctx["policy"],
        train_fraction=ctx["split"].train_fraction,
    )
    app = create_app(config)
    if seed_demo and not app.state.store.list_commodities():
        names = seed_demo_data(app.state.store, seed=ctx["seed"])
        click.echo(f"seeded: {', '.join(names)}")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")


if __name__ == "__main__":
    main()
