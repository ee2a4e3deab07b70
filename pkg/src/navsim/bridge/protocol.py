"""Wire protocol: one JSON object per frame.

Frames carry exactly the fields op, topic, type, msg, id (empty ones are
omitted on the wire). The same payload bytes travel newline-delimited over
a stream socket or one-per-message over a WebSocket. Decoding is total:
bad input raises typed errors that the server turns into status frames.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import jsonschema

OPS = frozenset({"advertise", "unadvertise", "publish", "subscribe",
                 "unsubscribe", "status"})

TOPIC_RE = re.compile(r"^(/[a-z0-9_]+)+$")

DEFAULT_PORT = 9090


class ProtocolError(ValueError):
    code = "protocol_error"


class MalformedFrame(ProtocolError):
    code = "malformed_frame"


class UnknownOp(ProtocolError):
    code = "unknown_op"


class SchemaViolation(ProtocolError):
    code = "schema_violation"


@dataclass(frozen=True)
class BusMessage:
    op: str
    topic: str = ""
    type: str = ""
    msg: object = None
    id: str | None = None


def encode_frame(message: BusMessage) -> bytes:
    """Canonical UTF-8 JSON payload (no trailing newline; framing is the
    transport's job)."""
    data: dict = {"op": message.op}
    if message.topic:
        data["topic"] = message.topic
    if message.type:
        data["type"] = message.type
    if message.msg is not None:
        data["msg"] = message.msg
    if message.id is not None:
        data["id"] = message.id
    return json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")


def decode_frame(raw: bytes | str) -> BusMessage:
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFrame(f"frame is not valid UTF-8: {exc}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"frame is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise MalformedFrame("frame must be a JSON object")
    op = data.get("op")
    if not isinstance(op, str) or op not in OPS:
        raise UnknownOp(f"unknown op {op!r} (expected one of {sorted(OPS)})")
    topic = data.get("topic", "")
    if not isinstance(topic, str):
        raise SchemaViolation("topic must be a string")
    type_ = data.get("type", "")
    if not isinstance(type_, str):
        raise SchemaViolation("type must be a string")
    id_ = data.get("id")
    if id_ is not None and not isinstance(id_, str):
        raise SchemaViolation("id must be a string")
    return BusMessage(op=op, topic=topic, type=type_, msg=data.get("msg"), id=id_)


def valid_topic(topic: str) -> bool:
    return bool(TOPIC_RE.match(topic))


# ---------------------------------------------------------------------------
# payload schemas for the standard message types

_POSE = {"type": "object",
         "properties": {"x": {"type": "number"}, "y": {"type": "number"},
                        "theta": {"type": "number"}},
         "required": ["x", "y", "theta"]}
_TWIST = {"type": "object",
          "properties": {"linear": {"type": "number"}, "angular": {"type": "number"}},
          "required": ["linear", "angular"]}

SCHEMAS: dict[str, dict] = {
    "twist": _TWIST,
    "odom": {"type": "object",
             "properties": {"stamp": {"type": "number"}, "pose": _POSE, "twist": _TWIST},
             "required": ["stamp", "pose", "twist"]},
    "scan": {"type": "object",
             "properties": {"stamp": {"type": "number"},
                            "angle_min": {"type": "number"},
                            "angle_increment": {"type": "number"},
                            "ranges": {"type": "array", "items": {"type": "number"}}},
             "required": ["stamp", "angle_min", "angle_increment", "ranges"]},
    "string": {"type": "object",
               "properties": {"data": {"type": "string"}},
               "required": ["data"]},
    "env_spec": {"type": "object", "required": ["seed", "areas"]},
    "world": {"type": "object", "required": ["areas", "agents"]},
    "trace": {"type": "object"},
}


def payload_error(type_name: str, msg: object) -> str | None:
    """Validation failure text for a known schema, else None (unknown types
    are treated as opaque)."""
    schema = SCHEMAS.get(type_name)
    if schema is None:
        return None
    try:
        jsonschema.validate(msg, schema)
    except jsonschema.ValidationError as exc:
        return exc.message
    return None
