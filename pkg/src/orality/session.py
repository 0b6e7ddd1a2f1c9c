"""Session lifecycle: one canvas, one timeline, one serialized command stream.

A Session owns the live canvas plus everything that must survive across
commands but not across snapshots: the id generator, the manual-edit
debouncer, the recording stream. handle_event() is the single entry point
the transport layer calls; it validates, dispatches, and turns every raised
domain error into an `error` event, guaranteeing the state is only ever
replaced by a fully committed result.

The session file is pretty-printed JSON with a versioned schema; loading
validates every stored canvas so corruption is caught at the door, not
mid-session.
"""

from __future__ import annotations

import base64
import binascii
import dataclasses
import json
import logging
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import protocol
from .export import EmptySelectionError, MemoStyle, generate_memo
from .extraction import EmptyTranscriptError, NothingExtractedError, ingest_transcript
from .history import EditDebouncer, Snapshot, Timeline, Trigger, UnknownSnapshotError
from .layout import LayoutParams
from .model import (
    CanvasState,
    NodeIdGenerator,
    UnknownNodeError,
    canvas_from_dict,
    canvas_to_dict,
    delete_node,
    move_node,
    validate_canvas,
)
from .providers import (
    MalformedJsonError,
    ProviderError,
    ProviderTimeout,
    Providers,
    RateLimitedError,
    SchemaViolationError,
    TranscriptionStream,
    TransportError,
)
from .restructure import EmptyCanvasError as RestructureEmptyCanvas
from .restructure import RestructureCommand, restructure_canvas
from .stimulation import (
    CONFLICT_MAX_PAIRS,
    CONFLICT_PREFILTER_TAU,
    CONFLICT_REPORT_FLOOR,
    EmptyCanvasError as StimulationEmptyCanvas,
    NotEnoughContentError,
    QuestionGenerationError,
    detect_conflicts,
    generate_questions,
    select_question_targets,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SESSION_FILE_SUFFIX = ".orality.json"


class SchemaMigrationError(RuntimeError):
    """The file's schema_version is not one this build can read."""


class CorruptSessionError(ValueError):
    pass


@dataclass
class SessionDocument:
    session_id: str
    canvas: CanvasState
    timeline: Timeline
    params: LayoutParams
    created_at: float
    updated_at: float
    schema_version: int = SCHEMA_VERSION


def document_to_dict(doc: SessionDocument) -> dict:
    return {
        "schema_version": doc.schema_version,
        "session_id": doc.session_id,
        "canvas": canvas_to_dict(doc.canvas),
        "timeline": doc.timeline.to_dict(),
        "params": dataclasses.asdict(doc.params),
        "created_at": doc.created_at,
        "updated_at": doc.updated_at,
    }


def document_from_dict(data: dict,
                       clock: Callable[[], float] = time.time) -> SessionDocument:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMigrationError(
            f"session file has schema_version {version!r}; "
            f"this build reads version {SCHEMA_VERSION} only"
        )
    try:
        doc = SessionDocument(
            session_id=str(data["session_id"]),
            canvas=canvas_from_dict(data["canvas"]),
            timeline=Timeline.from_dict(data["timeline"], clock=clock),
            params=LayoutParams(**data["params"]),
            created_at=float(data["created_at"]),
            updated_at=float(data["updated_at"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptSessionError(f"unreadable session document: {exc}") from exc
    problems = validate_canvas(doc.canvas)
    for snapshot in doc.timeline.snapshots:
        problems.extend(
            f"snapshot {snapshot.id}: {p}" for p in validate_canvas(snapshot.state)
        )
    if problems:
        raise CorruptSessionError("; ".join(problems))
    return doc


def save_session(doc: SessionDocument, path: str | Path) -> None:
    path = Path(path)
    payload = json.dumps(document_to_dict(doc), indent=2, ensure_ascii=False)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(payload + "\n", encoding="utf-8")
    tmp.replace(path)


def load_session(path: str | Path,
                 clock: Callable[[], float] = time.time) -> SessionDocument:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorruptSessionError(f"session file is not valid JSON: {exc}") from exc
    return document_from_dict(data, clock=clock)


def session_path(session_dir: str | Path, session_id: str) -> Path:
    return Path(session_dir) / f"{session_id}{SESSION_FILE_SUFFIX}"


# Domain exception -> wire error code. Order matters: subclasses first.
_ERROR_CODES: list[tuple[type[Exception], str]] = [
    (EmptyTranscriptError, "empty_transcript"),
    (NothingExtractedError, "nothing_extracted"),
    (UnknownNodeError, "unknown_node"),
    (UnknownSnapshotError, "unknown_snapshot"),
    (RestructureEmptyCanvas, "empty_canvas"),
    (StimulationEmptyCanvas, "empty_canvas"),
    (NotEnoughContentError, "not_enough_content"),
    (QuestionGenerationError, "question_generation_failed"),
    (EmptySelectionError, "empty_selection"),
    (MalformedJsonError, "malformed_json"),
    (SchemaViolationError, "schema_violation"),
    (RateLimitedError, "provider_rate_limited"),
    (ProviderTimeout, "provider_timeout"),
    (TransportError, "provider_transport"),
    (ProviderError, "provider_failure"),
]


def error_code_for(exc: Exception) -> str | None:
    for exc_type, code in _ERROR_CODES:
        if isinstance(exc, exc_type):
            return code
    return None


class Session:
    """One user's canvas and its strictly ordered command processor."""

    def __init__(self, providers: Providers,
                 params: LayoutParams | None = None,
                 session_id: str | None = None,
                 session_dir: str | Path | None = None,
                 clock: Callable[[], float] = time.time,
                 conflict_floor: int = CONFLICT_REPORT_FLOOR,
                 conflict_prefilter_tau: float = CONFLICT_PREFILTER_TAU,
                 conflict_max_pairs: int = CONFLICT_MAX_PAIRS,
                 memo_dir: str | Path | None = None,
                 document: SessionDocument | None = None) -> None:
        self.providers = providers
        self.clock = clock
        self.conflict_floor = conflict_floor
        self.conflict_prefilter_tau = conflict_prefilter_tau
        self.conflict_max_pairs = conflict_max_pairs
        self.session_dir = Path(session_dir) if session_dir else None
        self.memo_dir = Path(memo_dir) if memo_dir else None
        if document is not None:
            self.doc = document
        else:
            now = clock()
            self.doc = SessionDocument(
                session_id=session_id or uuid.uuid4().hex,
                canvas=CanvasState(),
                timeline=Timeline(clock=clock),
                params=params or LayoutParams(),
                created_at=now,
                updated_at=now,
            )
        self.doc.timeline._clock = clock
        self.id_gen = NodeIdGenerator()
        self.id_gen.observe(self.doc.canvas.topics)
        self.id_gen.observe(self.doc.canvas.contents)
        for snapshot in self.doc.timeline.snapshots:
            self.id_gen.observe(snapshot.state.topics)
            self.id_gen.observe(snapshot.state.contents)
        self.debouncer = EditDebouncer(clock=clock)
        self._recording: TranscriptionStream | None = None
        self._recording_selection: list[str] | None = None
        self._memo_counter = 0

    @classmethod
    def load(cls, path: str | Path, providers: Providers, **kwargs) -> "Session":
        doc = load_session(path, clock=kwargs.get("clock", time.time))
        return cls(providers, document=doc, **kwargs)

    # -- event entry points ---------------------------------------------------

    def handle_event(self, message: dict) -> list[dict]:
        """Process one inbound message; returns the ordered outbound events."""
        try:
            msg_type, payload = protocol.validate_inbound(message)
        except protocol.ProtocolError as exc:
            return [protocol.make_error(exc.code, exc.message)]
        handler = getattr(self, f"_on_{msg_type}")
        events: list[dict] = []
        try:
            handler(payload, events)
        except Exception as exc:  # noqa: BLE001 - mapped to wire errors below
            code = error_code_for(exc)
            if code is None:
                raise
            events.append(protocol.make_error(code, str(exc)))
        return events

    def poll(self) -> list[dict]:
        """Flush the manual-edit window if it has settled; called on a timer."""
        if self.debouncer.settled():
            return self._flush_manual_edits()
        return []

    # -- shared steps ----------------------------------------------------------

    def _canvas_update(self) -> dict:
        return {"type": "canvas_update", "payload": canvas_to_dict(self.doc.canvas)}

    @staticmethod
    def _snapshot_added(snapshot: Snapshot) -> dict:
        return {
            "type": "snapshot_added",
            "payload": {
                "id": snapshot.id,
                "trigger": snapshot.trigger.value,
                "taken_at": snapshot.taken_at,
            },
        }

    def _autosave(self) -> None:
        if self.session_dir is None:
            return
        self.doc.updated_at = self.clock()
        self.session_dir.mkdir(parents=True, exist_ok=True)
        save_session(self.doc, session_path(self.session_dir, self.doc.session_id))

    def _flush_manual_edits(self) -> list[dict]:
        """Snapshot pending drags/deletes; the edit burst is over."""
        if not self.debouncer.pending:
            return []
        self.debouncer.clear()
        snapshot = self.doc.timeline.take_snapshot(
            self.doc.canvas, Trigger.MANUAL_EDIT_SETTLED,
        )
        if snapshot is None:
            return []
        self._autosave()
        return [self._snapshot_added(snapshot)]

    def _commit(self, events: list[dict], new_state: CanvasState,
                trigger: Trigger) -> None:
        self.doc.canvas = new_state
        events.append(self._canvas_update())
        snapshot = self.doc.timeline.take_snapshot(new_state, trigger)
        if snapshot is not None:
            events.append(self._snapshot_added(snapshot))
            self._autosave()

    def _dictate(self, transcript: str, selection: list[str] | None,
                 events: list[dict]) -> None:
        new_state, _ = ingest_transcript(
            self.doc.canvas, transcript, self.providers, self.id_gen,
            self.doc.params, selection=selection,
        )
        self._commit(events, new_state, Trigger.DICTATION)

    # -- handlers ---------------------------------------------------------------

    def _on_dictate_content(self, payload: dict, events: list[dict]) -> None:
        events.extend(self._flush_manual_edits())
        self._dictate(payload["transcript"], payload.get("selected_topic_ids"), events)

    def _on_restructure(self, payload: dict, events: list[dict]) -> None:
        if not payload["instruction"].strip():
            events.append(protocol.make_error(
                "bad_payload", "restructure instruction is empty"))
            return
        events.extend(self._flush_manual_edits())
        cmd = RestructureCommand(
            instruction=payload["instruction"],
            selected_topic_ids=tuple(payload.get("selected_topic_ids") or ()),
        )
        new_state = restructure_canvas(
            self.doc.canvas, cmd, self.providers, self.id_gen, self.doc.params,
        )
        self._commit(events, new_state, Trigger.RESTRUCTURE)

    def _on_ask_questions(self, payload: dict, events: list[dict]) -> None:
        events.extend(self._flush_manual_edits())
        targets = select_question_targets(
            self.doc.canvas, payload.get("selected_topic_ids"),
        )
        result = generate_questions(
            self.doc.canvas, targets, self.providers, self.id_gen, self.doc.params,
        )
        self._commit(events, result.state, Trigger.QUESTIONS)
        for topic_id in result.skipped_topic_ids:
            label = self.doc.canvas.topics[topic_id].label
            events.append(protocol.make_error(
                "question_generation_partial",
                f"no valid questions for topic {label!r}; it was skipped",
            ))

    def _on_show_conflicts(self, payload: dict, events: list[dict]) -> None:
        events.extend(self._flush_manual_edits())
        result = detect_conflicts(
            self.doc.canvas, self.providers,
            prefilter_tau=self.conflict_prefilter_tau,
            max_pairs=self.conflict_max_pairs,
            floor=self.conflict_floor,
        )
        self._commit(events, result.state, Trigger.CONFLICTS)
        if not result.edges:
            events.append(protocol.make_error(
                "no_conflicts", "no conflicts were found between your statements"))
        for warning in result.warnings:
            events.append(protocol.make_error("conflict_entry_dropped", warning))

    def _on_move_node(self, payload: dict, events: list[dict]) -> None:
        self.doc.canvas = move_node(
            self.doc.canvas, payload["id"], payload["x"], payload["y"],
        )
        self.debouncer.note_edit()
        events.append(self._canvas_update())

    def _on_delete_node(self, payload: dict, events: list[dict]) -> None:
        self.doc.canvas = delete_node(self.doc.canvas, payload["id"])
        self.debouncer.note_edit()
        events.append(self._canvas_update())

    def _on_restore_snapshot(self, payload: dict, events: list[dict]) -> None:
        events.extend(self._flush_manual_edits())
        restored, snapshot = self.doc.timeline.restore_snapshot(payload["snapshot_id"])
        self.doc.canvas = restored
        events.append(self._canvas_update())
        events.append(self._snapshot_added(snapshot))
        self._autosave()

    def _on_get_preview(self, payload: dict, events: list[dict]) -> None:
        state = self.doc.timeline.preview_snapshot(payload["snapshot_id"])
        events.append({
            "type": "preview",
            "payload": {
                "snapshot_id": payload["snapshot_id"],
                "state": canvas_to_dict(state),
            },
        })

    def _on_export(self, payload: dict, events: list[dict]) -> None:
        style = MemoStyle(payload["style"])
        result = generate_memo(
            self.doc.canvas, payload["node_ids"], style, self.providers.chat,
        )
        out: dict = {"style": style.value, "text": result.text}
        if result.headings_missing:
            out["warning"] = "memo is missing one or more required section headings"
        events.append({"type": "export_ready", "payload": out})
        if self.memo_dir is not None:
            self._memo_counter += 1
            self.memo_dir.mkdir(parents=True, exist_ok=True)
            name = f"{self.doc.session_id}-memo-{self._memo_counter:03d}-{style.value}.txt"
            (self.memo_dir / name).write_text(result.text + "\n", encoding="utf-8")

    def _on_start_recording(self, payload: dict, events: list[dict]) -> None:
        if self._recording is not None:
            events.append(protocol.make_error(
                "recording_state", "recording is already in progress"))
            return
        self._recording = self.providers.transcription.open_stream()
        self._recording_selection = payload.get("selected_topic_ids")

    def _on_audio_chunk(self, payload: dict, events: list[dict]) -> None:
        if self._recording is None:
            events.append(protocol.make_error(
                "recording_state", "no recording in progress"))
            return
        try:
            frame = base64.b64decode(payload["base64"], validate=True)
        except (binascii.Error, ValueError):
            events.append(protocol.make_error(
                "bad_payload", "audio_chunk base64 payload does not decode"))
            return
        try:
            chunks = self._recording.feed(frame)
        except TransportError as exc:
            self._reset_recording()
            events.append(protocol.make_error(
                "transcription_disconnected", str(exc)))
            return
        for chunk in chunks:
            if not chunk.is_final:
                events.append({
                    "type": "transcript_partial",
                    "payload": {"text": chunk.text},
                })

    def _on_stop_recording(self, payload: dict, events: list[dict]) -> None:
        if self._recording is None:
            events.append(protocol.make_error(
                "recording_state", "no recording in progress"))
            return
        selection = self._recording_selection
        try:
            chunks = self._recording.finish()
        except TransportError as exc:
            self._reset_recording()
            events.append(protocol.make_error(
                "transcription_disconnected", str(exc)))
            return
        self._reset_recording()
        final = next((c.text for c in chunks if c.is_final), "")
        if not final.strip():
            events.append(protocol.make_error(
                "empty_transcript", "the recording contained no speech"))
            return
        events.append({"type": "transcript_final", "payload": {"text": final}})
        events.extend(self._flush_manual_edits())
        self._dictate(final, selection, events)

    def _reset_recording(self) -> None:
        self._recording = None
        self._recording_selection = None
