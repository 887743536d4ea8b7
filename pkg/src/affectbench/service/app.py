"""FastAPI application exposing annotation sessions over JSON/HTTP.

Error contract: every failure body is {code, message} with 400 for
validation problems, 404 for unknown ids, and 409 for illegal state
transitions. Media files are served by path straight from the stimulus
catalog; the service never touches their contents.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from ..model import EMOTION_LABELS, INTENSITIES, EmotionAnnotation
from .schemas import (
    AnnotateRequest,
    AnnotationOut,
    CreateSessionRequest,
    CreateSessionResponse,
    MarkRequest,
    MarkResponse,
    SessionView,
    StimulusOut,
    VocabularyOut,
)
from .sessions import (
    AnnotationSession,
    IllegalState,
    InvalidRequest,
    SessionStore,
    Stimulus,
    UnknownMark,
    UnknownSession,
)

_STATUS = {InvalidRequest: 400, UnknownSession: 404, UnknownMark: 404, IllegalState: 409}
_CODE = {400: "validation", 404: "not-found", 409: "illegal-state"}


def _annotation_out(ann: EmotionAnnotation) -> AnnotationOut:
    return AnnotationOut(
        t_event_s=ann.t_event_s, label=ann.label, intensity=ann.intensity,
        session_id=ann.session_id, participant_id=ann.participant_id,
    )


def _session_view(session: AnnotationSession) -> SessionView:
    return SessionView(
        session_id=session.session_id,
        participant_id=session.participant_id,
        stimulus_id=session.stimulus_id,
        state=session.state,
        marks=list(session.marks),
        annotations=[_annotation_out(a) for a in session.annotations],
    )


def create_app(
    stimuli: dict[str, Stimulus],
    data_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="annotation service")
    store = SessionStore(stimuli, data_dir)
    app.state.store = store

    @app.exception_handler(UnknownSession)
    @app.exception_handler(UnknownMark)
    @app.exception_handler(IllegalState)
    @app.exception_handler(InvalidRequest)
    async def _domain_error(request: Request, exc: Exception):
        status = _STATUS[type(exc)]
        return JSONResponse(status_code=status,
                            content={"code": _CODE[status], "message": str(exc)})

    @app.get("/api/stimuli", response_model=list[StimulusOut])
    def list_stimuli():
        return [
            StimulusOut(
                stimulus_id=s.stimulus_id, duration_s=s.duration_s,
                media_url=s.media_url or (f"/media/{s.stimulus_id}" if s.media_path else ""),
            )
            for s in store.stimuli.values()
        ]

    @app.get("/api/vocabulary", response_model=VocabularyOut)
    def vocabulary():
        return VocabularyOut(labels=list(EMOTION_LABELS), intensities=list(INTENSITIES))

    @app.get("/media/{stimulus_id}")
    def media(stimulus_id: str):
        stimulus = store.stimuli.get(stimulus_id)
        if stimulus is None or not stimulus.media_path:
            raise UnknownSession(f"no media for stimulus {stimulus_id}")
        return FileResponse(stimulus.media_path)

    @app.post("/api/sessions", response_model=CreateSessionResponse, status_code=201)
    def create_session(body: CreateSessionRequest):
        session = store.create(body.participant_id, body.stimulus_id)
        return CreateSessionResponse(session_id=session.session_id)

    @app.get("/api/sessions/{session_id}", response_model=SessionView)
    def get_session(session_id: str):
        return _session_view(store.get(session_id))

    @app.post("/api/sessions/{session_id}/mark", response_model=MarkResponse)
    def mark(session_id: str, body: MarkRequest):
        index = store.mark(session_id, body.t_event_s)
        return MarkResponse(mark_index=index, t_event_s=body.t_event_s)

    @app.post("/api/sessions/{session_id}/annotate", response_model=AnnotationOut)
    def annotate(session_id: str, body: AnnotateRequest):
        ann = store.annotate(session_id, body.mark_index, body.label, body.intensity)
        return _annotation_out(ann)

    @app.delete("/api/sessions/{session_id}/mark/{mark_index}", status_code=204)
    def retract(session_id: str, mark_index: int):
        store.retract(session_id, mark_index)

    @app.post("/api/sessions/{session_id}/complete", response_model=SessionView)
    def complete(session_id: str):
        return _session_view(store.complete(session_id))

    @app.get("/api/sessions/{session_id}/annotations", response_model=list[AnnotationOut])
    def annotations(session_id: str):
        return [_annotation_out(a) for a in store.get(session_id).annotations]

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
