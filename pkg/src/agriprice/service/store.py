"""Embedded relational persistence for the service: users, tokens, weekly
price rows, selected-model index, forecast cache, and enquiries.

One sqlite file, one short-lived connection per operation, so concurrent
request handlers and the training worker never share a connection.  Series
rows are keyed (commodity, week); frames are rebuilt grid-complete, with
absent weeks surfacing as missing cells exactly as the CSV loader does.
"""

from __future__ import annotations

import json
import math
import sqlite3
import time
from contextlib import contextmanager
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from ..core import EXOGENOUS_COLUMNS, FeatureFrame, Series, weekly_timestamps
from ..errors import UnknownCommodityError
from ..ingest import TABLE_STATS, EXTRA_STATS, generate_synthetic, preset_spec

_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    email TEXT NOT NULL UNIQUE,
    password_hash TEXT NOT NULL,
    display_name TEXT NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS tokens (
    token TEXT PRIMARY KEY,
    user_id INTEGER NOT NULL REFERENCES users(id),
    expires_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS series_rows (
    commodity TEXT NOT NULL,
    week TEXT NOT NULL,
    price_myr REAL,
    temperature_c REAL,
    humidity_pct REAL,
    precipitation_mm REAL,
    crude_oil_usd REAL,
    PRIMARY KEY (commodity, week)
);
CREATE TABLE IF NOT EXISTS winners (
    commodity TEXT NOT NULL,
    mode TEXT NOT NULL,
    artifact_id TEXT NOT NULL,
    family TEXT NOT NULL,
    fingerprint TEXT NOT NULL,
    PRIMARY KEY (commodity, mode)
);
CREATE TABLE IF NOT EXISTS forecast_cache (
    commodity TEXT NOT NULL,
    mode TEXT NOT NULL,
    fingerprint TEXT NOT NULL,
    family TEXT NOT NULL,
    values_json TEXT NOT NULL,
    generated_at TEXT NOT NULL,
    PRIMARY KEY (commodity, mode, fingerprint)
);
CREATE TABLE IF NOT EXISTS enquiries (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id INTEGER,
    subject TEXT NOT NULL,
    body TEXT NOT NULL,
    created_at TEXT NOT NULL
);
"""


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class DuplicateEmail(Exception):
    pass


class Store:
    def __init__(self, path):
        self.path = str(Path(path))
        with self._connect() as con:
            con.executescript(_SCHEMA)

    @contextmanager
    def _connect(self):
        con = sqlite3.connect(self.path, timeout=30.0)
        con.execute("PRAGMA journal_mode=WAL")
        con.execute("PRAGMA busy_timeout=30000")
        try:
            yield con
            con.commit()
        finally:
            con.close()

    # --- users ---

    def create_user(self, email: str, password_hash: str, display_name: str) -> int:
        try:
            with self._connect() as con:
                cur = con.execute(
                    "INSERT INTO users (email, password_hash, display_name, created_at)"
                    " VALUES (?, ?, ?, ?)",
                    (email.lower(), password_hash, display_name, _utcnow()),
                )
                return cur.lastrowid
        except sqlite3.IntegrityError:
            raise DuplicateEmail(email) from None

    def user_by_email(self, email: str):
        with self._connect() as con:
            row = con.execute(
                "SELECT id, email, password_hash, display_name, created_at"
                " FROM users WHERE email = ?",
                (email.lower(),),
            ).fetchone()
        return row and dict(zip(("id", "email", "password_hash", "display_name", "created_at"), row))

    def user_by_id(self, user_id: int):
        with self._connect() as con:
            row = con.execute(
                "SELECT id, email, password_hash, display_name, created_at"
                " FROM users WHERE id = ?",
                (user_id,),
            ).fetchone()
        return row and dict(zip(("id", "email", "password_hash", "display_name", "created_at"), row))

    def update_user(self, user_id: int, display_name: str | None = None,
                    email: str | None = None) -> None:
        try:
            with self._connect() as con:
                if display_name is not None:
                    con.execute("UPDATE users SET display_name = ? WHERE id = ?",
                                (display_name, user_id))
                if email is not None:
                    con.execute("UPDATE users SET email = ? WHERE id = ?",
                                (email.lower(), user_id))
        except sqlite3.IntegrityError:
            raise DuplicateEmail(email) from None

    # --- tokens ---

    def create_token(self, token: str, user_id: int, ttl_seconds: float) -> float:
        expires = time.time() + ttl_seconds
        with self._connect() as con:
            con.execute("INSERT INTO tokens (token, user_id, expires_at) VALUES (?, ?, ?)",
                        (token, user_id, expires))
        return expires

    def user_for_token(self, token: str):
        with self._connect() as con:
            row = con.execute(
                "SELECT user_id, expires_at FROM tokens WHERE token = ?", (token,)
            ).fetchone()
        if row is None or row[1] < time.time():
            return None
        return self.user_by_id(row[0])

    def revoke_token(self, token: str) -> None:
        with self._connect() as con:
            con.execute("DELETE FROM tokens WHERE token = ?", (token,))

    # --- series ---

    def replace_series(self, commodity: str, frame: FeatureFrame) -> int:
        rows = []
        for i, ts in enumerate(frame.timestamps):
            row = [commodity, ts.isoformat(), _sql(frame.base.values[i])]
            for c in EXOGENOUS_COLUMNS:
                row.append(_sql(frame.exogenous[c][i]) if c in frame.exogenous else None)
            rows.append(row)
        with self._connect() as con:
            con.execute("DELETE FROM series_rows WHERE commodity = ?", (commodity,))
            con.executemany(
                "INSERT INTO series_rows VALUES (?, ?, ?, ?, ?, ?, ?)", rows
            )
        return len(rows)

    def append_rows(self, commodity: str, frame: FeatureFrame) -> int:
        """Upsert the frame's weeks into an existing series (data update)."""
        rows = []
        for i, ts in enumerate(frame.timestamps):
            row = [commodity, ts.isoformat(), _sql(frame.base.values[i])]
            for c in EXOGENOUS_COLUMNS:
                row.append(_sql(frame.exogenous[c][i]) if c in frame.exogenous else None)
            rows.append(row)
        with self._connect() as con:
            con.executemany(
                "INSERT OR REPLACE INTO series_rows VALUES (?, ?, ?, ?, ?, ?, ?)", rows
            )
        return len(rows)

    def list_commodities(self) -> list[str]:
        with self._connect() as con:
            rows = con.execute(
                "SELECT DISTINCT commodity FROM series_rows ORDER BY commodity"
            ).fetchall()
        return [r[0] for r in rows]

    def get_frame(self, commodity: str) -> FeatureFrame:
        with self._connect() as con:
            rows = con.execute(
                "SELECT week, price_myr, temperature_c, humidity_pct,"
                " precipitation_mm, crude_oil_usd"
                " FROM series_rows WHERE commodity = ? ORDER BY week",
                (commodity,),
            ).fetchall()
        if not rows:
            raise UnknownCommodityError(commodity)
        weeks = [date.fromisoformat(r[0]) for r in rows]
        n = (weeks[-1] - weeks[0]).days // 7 + 1
        grid = weekly_timestamps(weeks[0], n)
        price = np.full(n, np.nan)
        exo = {c: np.full(n, np.nan) for c in EXOGENOUS_COLUMNS}
        for r, week in zip(rows, weeks):
            i = (week - weeks[0]).days // 7
            price[i] = _py(r[1])
            for j, c in enumerate(EXOGENOUS_COLUMNS):
                exo[c][i] = _py(r[2 + j])
        exo = {c: v for c, v in exo.items() if not np.all(np.isnan(v))}
        return FeatureFrame(Series(grid, price), exo)

    # --- winners & forecast cache ---

    def set_winner(self, commodity: str, mode: str, artifact_id: str, family: str,
                   fingerprint: str) -> None:
        with self._connect() as con:
            con.execute(
                "INSERT OR REPLACE INTO winners VALUES (?, ?, ?, ?, ?)",
                (commodity, mode, artifact_id, family, fingerprint),
            )

    def get_winner(self, commodity: str, mode: str):
        with self._connect() as con:
            row = con.execute(
                "SELECT artifact_id, family, fingerprint FROM winners"
                " WHERE commodity = ? AND mode = ?",
                (commodity, mode),
            ).fetchone()
        return row and dict(zip(("artifact_id", "family", "fingerprint"), row))

    def put_forecast(self, commodity: str, mode: str, fingerprint: str, family: str,
                     values: list[float]) -> None:
        with self._connect() as con:
            con.execute(
                "INSERT OR REPLACE INTO forecast_cache VALUES (?, ?, ?, ?, ?, ?)",
                (commodity, mode, fingerprint, family, json.dumps(values), _utcnow()),
            )

    def get_forecast(self, commodity: str, mode: str, fingerprint: str):
        with self._connect() as con:
            row = con.execute(
                "SELECT family, values_json, generated_at FROM forecast_cache"
                " WHERE commodity = ? AND mode = ? AND fingerprint = ?",
                (commodity, mode, fingerprint),
            ).fetchone()
        if row is None:
            return None
        return {"family": row[0], "values": json.loads(row[1]), "generated_at": row[2]}

    # --- enquiries ---

    def add_enquiry(self, user_id: int | None, subject: str, body: str) -> int:
        with self._connect() as con:
            cur = con.execute(
                "INSERT INTO enquiries (user_id, subject, body, created_at)"
                " VALUES (?, ?, ?, ?)",
                (user_id, subject, body, _utcnow()),
            )
            return cur.lastrowid

    def get_enquiry(self, enquiry_id: int):
        with self._connect() as con:
            row = con.execute(
                "SELECT id, user_id, subject, body, created_at FROM enquiries WHERE id = ?",
                (enquiry_id,),
            ).fetchone()
        return row and dict(zip(("id", "user_id", "subject", "body", "created_at"), row))


def _sql(value: float):
    return None if value is None or (isinstance(value, float) and math.isnan(value)) else float(value)


def _py(value) -> float:
    return math.nan if value is None else float(value)


def seed_demo_data(store: Store, n_weeks: int = 520, seed: int = 0) -> list[str]:
    """Populate the seven demo commodities (three real statistical profiles
    plus four synthetic ones) so a fresh install meets the catalogue floor."""
    names = sorted({**TABLE_STATS, **EXTRA_STATS})
    for i, name in enumerate(names):
        frame = generate_synthetic(preset_spec(name, n_weeks=n_weeks, seed=seed + i))
        store.replace_series(name, frame)
    return names
