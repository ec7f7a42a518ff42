"""FastAPI service wrapping a frozen minimization document: personalized
minimization sessions plus a record-generalization endpoint."""

from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..data_model import CATEGORICAL, NUMERIC
from ..document import DocumentRuntime
from ..errors import (
    ConfigError,
    DataminError,
    SessionNotFoundError,
    SessionProtocolError,
)
from ..generalization import apply_generalization
from ..session import FeatureOffer, SessionEngine
from .schemas import (
    AnswerRequest,
    AnswerResponse,
    ApplyRequest,
    ApplyResponse,
    CreateSessionResponse,
    FinalizeResponse,
    HealthResponse,
    OfferModel,
    OptionModel,
    TranscriptEntry,
)


def _offer_models(offers: dict[str, FeatureOffer]) -> list[OfferModel]:
    out = []
    for offer in offers.values():
        out.append(
            OfferModel(
                feature=offer.feature,
                status=offer.status,
                expects_exact_value=offer.expects_exact_value,
                options=[
                    OptionModel(
                        id=o.id,
                        kind=o.kind,
                        start=o.start,
                        end=o.end,
                        categories=list(o.categories) if o.categories is not None else None,
                        label=o.label,
                    )
                    for o in offer.options
                ],
            )
        )
    return out


def _error_response(status_code: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status_code, content={"error": {"code": code, "message": message}}
    )


def create_app(
    document: dict,
    session_timeout: float = 1800.0,
    session_log=None,
    frontend_dir=None,
) -> FastAPI:
    runtime = DocumentRuntime.from_document(document)
    engine = SessionEngine(runtime, timeout=session_timeout, log_path=session_log)

    app = FastAPI(title="datamin service")
    app.state.engine = engine
    app.state.document = document

    @app.exception_handler(SessionNotFoundError)
    async def _not_found(request: Request, exc: SessionNotFoundError):
        return _error_response(404, "session_not_found", str(exc))

    @app.exception_handler(SessionProtocolError)
    async def _protocol(request: Request, exc: SessionProtocolError):
        return _error_response(409, "protocol_error", str(exc))

    @app.exception_handler(DataminError)
    async def _bad_request(request: Request, exc: DataminError):
        return _error_response(400, "config_error", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _invalid(request: Request, exc: RequestValidationError):
        return _error_response(400, "invalid_request", str(exc.errors()))

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        return HealthResponse(status="ok")

    @app.get("/document")
    def get_document():
        return document

    @app.post("/sessions", response_model=CreateSessionResponse, status_code=201)
    def create_session():
        session = engine.create()
        return CreateSessionResponse(
            session_id=session.session_id, offers=_offer_models(session.offers)
        )

    @app.post("/sessions/{session_id}/answers", response_model=AnswerResponse)
    def answer(session_id: str, body: AnswerRequest):
        session = engine.answer(session_id, body.feature, body.option_id)
        return AnswerResponse(offers=_offer_models(session.offers))

    @app.post("/sessions/{session_id}/finalize", response_model=FinalizeResponse)
    def finalize(session_id: str):
        label, transcript = engine.finalize(session_id)
        return FinalizeResponse(
            label=label, transcript=[TranscriptEntry(**entry) for entry in transcript]
        )

    @app.post("/apply", response_model=ApplyResponse)
    def apply(body: ApplyRequest):
        records = [_parse_record(runtime, obj) for obj in body.records]
        generalized = apply_generalization(
            runtime.generalization, runtime.tree, runtime.profiles, records
        )
        out = [
            {fs.name: cell for fs, cell in zip(runtime.feature_schemas, record)}
            for record in generalized
        ]
        return ApplyResponse(records=out)

    if frontend_dir and os.path.isdir(frontend_dir):
        app.mount("/ui", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app


def _parse_record(runtime: DocumentRuntime, obj: dict) -> tuple:
    cells = []
    for fs in runtime.feature_schemas:
        if fs.name not in obj:
            raise ConfigError(f"record is missing feature {fs.name!r}")
        raw = obj[fs.name]
        if fs.kind == NUMERIC:
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"feature {fs.name!r}: {raw!r} is not numeric")
            if not fs.domain.contains(value):
                raise ConfigError(f"feature {fs.name!r}: {value} outside the domain")
        else:
            value = str(raw)
            if not fs.domain.contains(value):
                raise ConfigError(f"feature {fs.name!r}: {value!r} outside the domain")
        cells.append(value)
    return tuple(cells)
