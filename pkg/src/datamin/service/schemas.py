"""Request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel


class OptionModel(BaseModel):
    id: str
    kind: str  # range | groups | any
    start: float | None = None
    end: float | None = None
    categories: list[str] | None = None
    label: str = ""


class OfferModel(BaseModel):
    feature: str
    status: str
    expects_exact_value: bool
    options: list[OptionModel]


class CreateSessionResponse(BaseModel):
    session_id: str
    offers: list[OfferModel]


class AnswerRequest(BaseModel):
    feature: str
    option_id: str


class AnswerResponse(BaseModel):
    offers: list[OfferModel]


class TranscriptEntry(BaseModel):
    feature: str
    status: str
    disclosed: dict


class FinalizeResponse(BaseModel):
    label: str
    transcript: list[TranscriptEntry]


class HealthResponse(BaseModel):
    status: str


class ApplyRequest(BaseModel):
    records: list[dict]


class ApplyResponse(BaseModel):
    records: list[dict]


class ErrorDetail(BaseModel):
    code: str
    message: str


class ErrorBody(BaseModel):
    error: ErrorDetail
