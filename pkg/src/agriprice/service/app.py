"""JSON-over-HTTP facade: auth, catalogue, history, forecasts, CSV export.

All routes live under /api/v1 and, except registration and login, require
``Authorization: Bearer <token>``.  Errors are ``{"code", "message"}``
bodies with conventional statuses (401/404/409/422), and a forecast whose
model is not trained yet answers 202 with a job id instead of blocking
the request on training.

Configuration comes from the environment when not passed explicitly:
AGRIPRICE_DATA_DIR, AGRIPRICE_BIND, AGRIPRICE_TOKEN_TTL_HOURS.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import re
import secrets
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from fastapi import Depends, FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..core import PRICE_COLUMN, SplitSpec, WEEK
from ..engine import ArtifactStore, frame_fingerprint
from ..errors import UnknownCommodityError
from ..ingest import MissingPolicy, write_csv
from .jobs import TrainingManager
from .store import DuplicateEmail, Store

_EMAIL = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")
_SCRYPT = {"n": 2**14, "r": 8, "p": 1}

DEFAULT_FAMILIES = ("arima", "trend", "svr", "gbt", "lstm")


@dataclass
class ServiceConfig:
    data_dir: str = field(default_factory=lambda: os.environ.get("AGRIPRICE_DATA_DIR", "./data"))
    token_ttl_hours: float = field(
        default_factory=lambda: float(os.environ.get("AGRIPRICE_TOKEN_TTL_HOURS", "24")))
    families: tuple = DEFAULT_FAMILIES
    overrides: dict = field(default_factory=dict)
    policy: MissingPolicy = field(default_factory=MissingPolicy)
    train_fraction: float = 0.9
    full_horizon: int = 52


def hash_password(password: str) -> str:
    salt = secrets.token_bytes(16)
    digest = hashlib.scrypt(password.encode(), salt=salt, **_SCRYPT)
    return f"scrypt${salt.hex()}${digest.hex()}"

def verify_password(password: str, stored: str) -> bool:
    try:
        _, salt_hex, digest_hex = stored.split("$")
    except ValueError:
        return False
    digest = hashlib.scrypt(password.encode(), salt=bytes.fromhex(salt_hex), **_SCRYPT)
    return hmac.compare_digest(digest.hex(), digest_hex)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status, self.code, self.message = status, code, message


class RegisterBody(BaseModel):
    email: str
    password: str
    name: str = ""


class LoginBody(BaseModel):
    email: str
    password: str


class ForecastBody(BaseModel):
    commodity: str
    mode: str = "univariate"
    horizon_weeks: int
    history_weeks: int = 104


class EnquiryBody(BaseModel):
    subject: str = ""
    body: str


class ProfileBody(BaseModel):
    name: str | None = None
    email: str | None = None


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    data_dir = Path(config.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    store = Store(data_dir / "agriprice.db")
    artifacts = ArtifactStore(data_dir / "artifacts")
    manager = TrainingManager(
        store, artifacts, config.families, config.overrides, config.policy,
        SplitSpec(train_fraction=config.train_fraction),
        full_horizon=config.full_horizon,
    )

    app = FastAPI(title="agriprice", version="0.1.0")
    # the dashboard is a static client on its own origin; auth is bearer-only
    # (no cookies), so a permissive CORS policy carries no ambient credential
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    app.state.store = store
    app.state.artifacts = artifacts
    app.state.manager = manager
    app.state.config = config

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return _error(exc.status, exc.code, exc.message)

    @app.exception_handler(UnknownCommodityError)
    async def unknown_commodity_handler(request: Request, exc: UnknownCommodityError):
        return _error(404, "unknown_commodity", str(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _error(422, "validation_error", str(exc.errors()[:1]))

    def authenticate(request: Request) -> dict:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise ApiError(401, "unauthorized", "missing bearer token")
        user = store.user_for_token(header[7:].strip())
        if user is None:
            raise ApiError(401, "unauthorized", "invalid or expired token")
        return user

    # --- auth ---

    @app.post("/api/v1/auth/register", status_code=201)
    def register(body: RegisterBody):
        if not _EMAIL.match(body.email):
            raise ApiError(422, "invalid_email", "email address is not well-formed")
        if len(body.password) < 8:
            raise ApiError(422, "weak_password", "password must be at least 8 characters")
        try:
            user_id = store.create_user(body.email, hash_password(body.password),
                                        body.name or body.email.split("@")[0])
        except DuplicateEmail:
            raise ApiError(409, "duplicate_email", "an account with this email exists") from None
        return {"id": user_id}

    @app.post("/api/v1/auth/login")
    def login(body: LoginBody):
        user = store.user_by_email(body.email)
        # same body for unknown email and wrong password
        if user is None or not verify_password(body.password, user["password_hash"]):
            raise ApiError(401, "invalid_credentials", "invalid email or password")
        token = secrets.token_hex(16)  # 128 bits
        expires = store.create_token(token, user["id"], config.token_ttl_hours * 3600)
        return {"token": token, "expires_at": expires}

    # --- catalogue & history ---

    @app.get("/api/v1/commodities")
    def commodities(user: dict = Depends(authenticate)):
        return {"commodities": store.list_commodities()}

    @app.get("/api/v1/series/{commodity}")
    def series(commodity: str,
               from_date: str | None = Query(default=None, alias="from"),
               to_date: str | None = Query(default=None, alias="to"),
               user: dict = Depends(authenticate)):
        frame = store.get_frame(commodity)
        lo = date.fromisoformat(from_date) if from_date else None
        hi = date.fromisoformat(to_date) if to_date else None
        points = [
            {"date": ts.isoformat(), "price": None if price != price else float(price)}
            for ts, price in zip(frame.timestamps, frame.column(PRICE_COLUMN))
            if (lo is None or ts >= lo) and (hi is None or ts <= hi)
        ]
        return {"commodity": commodity, "points": points}

    # --- forecasting ---

    @app.post("/api/v1/forecast")
    def forecast(body: ForecastBody, response: Response,
                 user: dict = Depends(authenticate)):
        if body.mode not in ("univariate", "multivariate"):
            raise ApiError(422, "invalid_mode", "mode must be univariate or multivariate")
        if not 1 <= body.horizon_weeks <= config.full_horizon:
            raise ApiError(422, "horizon_out_of_range",
                           f"horizon_weeks must be in 1..{config.full_horizon}")
        frame = store.get_frame(body.commodity)
        fingerprint = frame_fingerprint(frame, body.commodity)
        cached = store.get_forecast(body.commodity, body.mode, fingerprint)
        if cached is None:
            job_id = manager.request_train(body.commodity, body.mode, fingerprint)
            response.status_code = 202
            return {"code": "model_not_ready", "job_id": job_id,
                    "message": "training started; retry shortly"}

        history_n = max(1, min(body.history_weeks, len(frame)))
        hist_ts = frame.timestamps[-history_n:]
        hist_prices = frame.column(PRICE_COLUMN)[-history_n:]
        last = frame.timestamps[-1]
        forecast_points = [
            {"date": (last + WEEK * (k + 1)).isoformat(), "price": float(v), "forecast": True}
            for k, v in enumerate(cached["values"][: body.horizon_weeks])
        ]
        return {
            "commodity": body.commodity,
            "mode": body.mode,
            "horizon_weeks": body.horizon_weeks,
            "model_family": cached["family"],
            "generated_at": cached["generated_at"],
            "history": [
                {"date": ts.isoformat(),
                 "price": None if price != price else float(price),
                 "forecast": False}
                for ts, price in zip(hist_ts, hist_prices)
            ],
            "forecast": forecast_points,
        }

    @app.get("/api/v1/jobs/{job_id}")
    def job(job_id: str, user: dict = Depends(authenticate)):
        status = manager.job_status(job_id)
        if status is None:
            raise ApiError(404, "unknown_job", f"no job {job_id}")
        return status

    # --- download ---

    @app.get("/api/v1/download/{commodity}.csv")
    def download(commodity: str, user: dict = Depends(authenticate)):
        frame = store.get_frame(commodity)
        return Response(
            content=write_csv(frame, commodity),
            media_type="text/csv",
            headers={"Content-Disposition": f'attachment; filename="{commodity}.csv"'},
        )

    # --- enquiries & profile ---

    @app.post("/api/v1/enquiries", status_code=201)
    def enquiry(body: EnquiryBody, user: dict = Depends(authenticate)):
        if not body.body.strip():
            raise ApiError(422, "empty_body", "enquiry body must not be empty")
        receipt = store.add_enquiry(user["id"], body.subject, body.body)
        return {"id": receipt}

    @app.get("/api/v1/profile")
    def profile(user: dict = Depends(authenticate)):
        return {"email": user["email"], "name": user["display_name"],
                "created_at": user["created_at"]}

    @app.patch("/api/v1/profile")
    def update_profile(body: ProfileBody, user: dict = Depends(authenticate)):
        if body.email is not None and not _EMAIL.match(body.email):
            raise ApiError(422, "invalid_email", "email address is not well-formed")
        try:
            store.update_user(user["id"], display_name=body.name, email=body.email)
        except DuplicateEmail:
            raise ApiError(409, "duplicate_email", "an account with this email exists") from None
        fresh = store.user_by_id(user["id"])
        return {"email": fresh["email"], "name": fresh["display_name"],
                "created_at": fresh["created_at"]}

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok"}

    return app
