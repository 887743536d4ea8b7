"""Request/response models for the annotation HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    participant_id: str = Field(..., min_length=1)
    stimulus_id: str = Field(..., min_length=1)


class CreateSessionResponse(BaseModel):
    session_id: str


class MarkRequest(BaseModel):
    t_event_s: float


class MarkResponse(BaseModel):
    mark_index: int
    t_event_s: float


class AnnotateRequest(BaseModel):
    mark_index: int
    label: str
    intensity: str


class AnnotationOut(BaseModel):
    t_event_s: float
    label: str
    intensity: str
    session_id: str
    participant_id: str


class SessionView(BaseModel):
    session_id: str
    participant_id: str
    stimulus_id: str
    state: str
    marks: list[float]
    annotations: list[AnnotationOut]


class StimulusOut(BaseModel):
    stimulus_id: str
    duration_s: float
    media_url: str


class VocabularyOut(BaseModel):
    labels: list[str]
    intensities: list[str]


class ErrorBody(BaseModel):
    code: str
    message: str
