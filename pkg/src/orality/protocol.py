"""Wire protocol: message envelope, schema validation, and encoding.

Every message is a single-line JSON object {type, payload}. The shipped
JSON Schema is the contract both ends test against; inbound messages are
validated before dispatch so handlers only ever see well-formed payloads.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

INBOUND_TYPES = (
    "dictate_content",
    "restructure",
    "ask_questions",
    "show_conflicts",
    "move_node",
    "delete_node",
    "restore_snapshot",
    "get_preview",
    "export",
    "start_recording",
    "audio_chunk",
    "stop_recording",
)

OUTBOUND_TYPES = (
    "canvas_update",
    "transcript_partial",
    "transcript_final",
    "snapshot_added",
    "preview",
    "export_ready",
    "error",
)


class ProtocolError(ValueError):
    """An inbound message the server refuses, with a machine-readable code."""

    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code
        self.message = message


@lru_cache(maxsize=1)
def load_protocol_schema() -> dict:
    raw = resources.files("orality").joinpath("protocol.schema.json").read_text("utf-8")
    return json.loads(raw)


@lru_cache(maxsize=2)
def _validator(direction: str) -> jsonschema.Draft202012Validator:
    schema = load_protocol_schema()
    side = {**schema["$defs"][direction], "$defs": schema["$defs"]}
    return jsonschema.Draft202012Validator(side)


@lru_cache(maxsize=None)
def _message_validator(direction: str, msg_type: str) -> jsonschema.Draft202012Validator:
    schema = load_protocol_schema()
    for variant in schema["$defs"][direction]["oneOf"]:
        if variant["properties"]["type"]["const"] == msg_type:
            return jsonschema.Draft202012Validator(
                {**variant, "$defs": schema["$defs"]}
            )
    raise KeyError(msg_type)


def decode(raw: str) -> dict:
    try:
        message = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ProtocolError("bad_payload", f"message is not valid JSON: {exc}") from exc
    if not isinstance(message, dict):
        raise ProtocolError("bad_payload", "message must be a JSON object")
    return message


def validate_inbound(message: dict) -> tuple[str, dict]:
    """Check an inbound message against the schema; returns (type, payload)."""
    msg_type = message.get("type")
    if not isinstance(msg_type, str) or msg_type not in INBOUND_TYPES:
        raise ProtocolError("unknown_event", f"unknown event type: {msg_type!r}")
    errors = sorted(
        _message_validator("inbound", msg_type).iter_errors(message),
        key=lambda e: list(e.absolute_path),
    )
    if errors:
        detail = errors[0].message
        raise ProtocolError("bad_payload", f"invalid {msg_type} payload: {detail}")
    return msg_type, message["payload"]


def validate_outbound(message: dict) -> None:
    """Schema check for outbound messages; used by tests and the UI contract."""
    errors = list(_validator("outbound").iter_errors(message))
    if errors:
        raise ProtocolError("bad_payload", errors[0].message)


def encode(msg_type: str, payload: dict) -> str:
    """Serialize one message to its newline-free wire form."""
    return json.dumps(
        {"type": msg_type, "payload": payload},
        separators=(",", ":"),
        sort_keys=True,
        ensure_ascii=False,
    )


def make_error(code: str, message: str) -> dict:
    return {"type": "error", "payload": {"code": code, "message": message}}
