"""Annotation-session state machine with crash-safe persistence.

A session walks replaying -> awaiting-label -> ... -> complete. Marking a
timestamp is allowed while replaying or while labels are pending
(scrubbing back and forth is part of the workflow); annotating requires a
pending mark. Every confirmed mutation is appended to an on-disk event
log before it is acknowledged, and confirmed annotations additionally go
to an annotations.jsonl in the corpus record schema, so a crash never
loses one. Mutations are serialized per session.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..corpus import annotation_to_record
from ..errors import WorkbenchError
from ..model import EMOTION_LABELS, INTENSITIES, EmotionAnnotation

REPLAYING = "replaying"
AWAITING_LABEL = "awaiting-label"
COMPLETE = "complete"


class UnknownSession(WorkbenchError):
    pass


class UnknownMark(WorkbenchError):
    pass


class IllegalState(WorkbenchError):
    pass


class InvalidRequest(WorkbenchError):
    pass


@dataclass(frozen=True)
class Stimulus:
    stimulus_id: str
    duration_s: float
    media_url: str = ""
    media_path: str = ""


@dataclass
class AnnotationSession:
    session_id: str
    participant_id: str
    stimulus_id: str
    state: str = REPLAYING
    marks: list[float] = field(default_factory=list)
    annotations: list[EmotionAnnotation] = field(default_factory=list)


class SessionStore:
    """All live sessions plus their persistence; safe for concurrent use."""

    def __init__(self, stimuli: dict[str, Stimulus], data_dir: str | Path | None = None):
        self.stimuli = dict(stimuli)
        self._sessions: dict[str, AnnotationSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._global = threading.Lock()
        self._data_dir = Path(data_dir) if data_dir else None
        if self._data_dir:
            self._data_dir.mkdir(parents=True, exist_ok=True)
            self._replay_log()

    # -- persistence -------------------------------------------------------

    @property
    def _log_path(self) -> Path:
        return self._data_dir / "sessions.log"

    @property
    def annotations_path(self) -> Path | None:
        return self._data_dir / "annotations.jsonl" if self._data_dir else None

    def _append(self, event: dict) -> None:
        if not self._data_dir:
            return
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()

    def _append_annotation(self, session: AnnotationSession, ann: EmotionAnnotation) -> None:
        if not self._data_dir:
            return
        with open(self.annotations_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(annotation_to_record(session.stimulus_id, ann), sort_keys=True) + "\n")
            fh.flush()

    def _replay_log(self) -> None:
        if not self._log_path.exists():
            return
        with open(self._log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                kind = event["event"]
                if kind == "create":
                    self._sessions[event["session_id"]] = AnnotationSession(
                        session_id=event["session_id"],
                        participant_id=event["participant_id"],
                        stimulus_id=event["stimulus_id"],
                    )
                    continue
                session = self._sessions.get(event["session_id"])
                if session is None:
                    continue
                if kind == "mark":
                    session.marks.append(event["t_event_s"])
                    session.state = AWAITING_LABEL
                elif kind == "retract":
                    session.marks.pop(event["mark_index"])
                    if not session.marks and session.state == AWAITING_LABEL:
                        session.state = REPLAYING
                elif kind == "annotate":
                    session.annotations.append(EmotionAnnotation(
                        t_event_s=event["t_event_s"], label=event["label"],
                        intensity=event["intensity"], session_id=session.session_id,
                        participant_id=session.participant_id,
                    ))
                    session.marks.pop(event["mark_index"])
                    if not session.marks:
                        session.state = REPLAYING
                elif kind == "complete":
                    session.state = COMPLETE

    # -- helpers -------------------------------------------------------------

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._global:
            if session_id not in self._sessions:
                raise UnknownSession(f"no session {session_id}")
            return self._locks.setdefault(session_id, threading.Lock())

    def get(self, session_id: str) -> AnnotationSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id}")
        return session

    # -- operations ------------------------------------------------------------

    def create(self, participant_id: str, stimulus_id: str) -> AnnotationSession:
        if stimulus_id not in self.stimuli:
            raise UnknownSession(f"no stimulus {stimulus_id}")
        if not participant_id:
            raise InvalidRequest("participant_id must be non-empty")
        session_id = uuid.uuid4().hex[:12]
        session = AnnotationSession(session_id=session_id, participant_id=participant_id,
                                    stimulus_id=stimulus_id)
        with self._global:
            self._sessions[session_id] = session
            self._locks[session_id] = threading.Lock()
        self._append({"event": "create", "session_id": session_id,
                      "participant_id": participant_id, "stimulus_id": stimulus_id})
        return session

    def mark(self, session_id: str, t_event_s: float) -> int:
        with self._lock_for(session_id):
            session = self.get(session_id)
            if session.state == COMPLETE:
                raise IllegalState("session already complete")
            stimulus = self.stimuli[session.stimulus_id]
            if not 0.0 <= t_event_s <= stimulus.duration_s:
                raise InvalidRequest(
                    f"t={t_event_s} s outside stimulus duration {stimulus.duration_s} s"
                )
            session.marks.append(float(t_event_s))
            session.state = AWAITING_LABEL
            self._append({"event": "mark", "session_id": session_id,
                          "t_event_s": float(t_event_s)})
            return len(session.marks) - 1

    def annotate(self, session_id: str, mark_index: int, label: str,
                 intensity: str) -> EmotionAnnotation:
        with self._lock_for(session_id):
            session = self.get(session_id)
            if session.state != AWAITING_LABEL:
                raise IllegalState(f"cannot annotate in state {session.state}")
            if not 0 <= mark_index < len(session.marks):
                raise UnknownMark(f"no pending mark {mark_index}")
            if label not in EMOTION_LABELS:
                raise InvalidRequest(f"unknown label {label!r}")
            if intensity not in INTENSITIES:
                raise InvalidRequest(f"unknown intensity {intensity!r}")
            t_event = session.marks[mark_index]
            ann = EmotionAnnotation(t_event_s=t_event, label=label, intensity=intensity,
                                    session_id=session_id,
                                    participant_id=session.participant_id)
            self._append({"event": "annotate", "session_id": session_id,
                          "mark_index": mark_index, "t_event_s": t_event,
                          "label": label, "intensity": intensity})
            self._append_annotation(session, ann)
            session.annotations.append(ann)
            session.marks.pop(mark_index)
            if not session.marks:
                session.state = REPLAYING
            return ann

    def retract(self, session_id: str, mark_index: int) -> None:
        with self._lock_for(session_id):
            session = self.get(session_id)
            if session.state == COMPLETE:
                raise IllegalState("session already complete")
            if not 0 <= mark_index < len(session.marks):
                raise UnknownMark(f"no pending mark {mark_index}")
            self._append({"event": "retract", "session_id": session_id,
                          "mark_index": mark_index})
            session.marks.pop(mark_index)
            if not session.marks and session.state == AWAITING_LABEL:
                session.state = REPLAYING
        return None

    def complete(self, session_id: str) -> AnnotationSession:
        with self._lock_for(session_id):
            session = self.get(session_id)
            if session.state == COMPLETE:
                raise IllegalState("session already complete")
            session.state = COMPLETE
            self._append({"event": "complete", "session_id": session_id})
            return session
