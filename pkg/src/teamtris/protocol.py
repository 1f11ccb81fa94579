"""JSON-over-WebSocket wire format.

One canonical-JSON message per text frame: {"v", "type", "payload"}.
Decoding rejects frames missing required fields and silently drops unknown
payload fields, so older servers tolerate newer clients and vice versa.
Clients only ever send Join/Key/Ready; everything stateful comes back from
the server.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import MalformedMessage

PROTOCOL_VERSION = 1

# type name -> {payload field: required python type(s)}
CLIENT_SCHEMAS = {
    "Join": {"sessionId": str, "playerName": str},
    "Key": {"key": str},
    "Ready": {},
}
SERVER_SCHEMAS = {
    "Welcome": {"playerId": str, "config": dict},
    "StateSnapshot": {"tick": int, "boards": list},
    "EventFrame": {"events": list},
    "RuleNotice": {"ruleId": str, "text": str},
    "Error": {"code": str, "message": str},
}
SCHEMAS = {**CLIENT_SCHEMAS, **SERVER_SCHEMAS}


@dataclass(frozen=True)
class ProtocolMessage:
    type: str
    payload: dict = field(default_factory=dict)
    v: int = PROTOCOL_VERSION


def message(type_: str, **payload) -> ProtocolMessage:
    return ProtocolMessage(type_, payload)


def encode(msg: ProtocolMessage) -> bytes:
    """Canonical JSON, UTF-8; one message per WebSocket text frame."""
    doc = {"v": msg.v, "type": msg.type, "payload": msg.payload}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True).encode("utf-8")


def decode(data) -> ProtocolMessage:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedMessage(f"frame is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except ValueError as exc:
        raise MalformedMessage(f"frame is not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedMessage("frame must be a JSON object")
    if "v" not in doc or not isinstance(doc["v"], int) or isinstance(doc["v"], bool):
        raise MalformedMessage("missing or invalid protocol version")
    msg_type = doc.get("type")
    if not isinstance(msg_type, str) or msg_type not in SCHEMAS:
        raise MalformedMessage(f"unknown message type {msg_type!r}")
    payload = doc.get("payload")
    if not isinstance(payload, dict):
        raise MalformedMessage("missing payload object")
    schema = SCHEMAS[msg_type]
    clean = {}
    for name, expected in schema.items():
        if name not in payload:
            raise MalformedMessage(f"{msg_type} payload missing field {name!r}")
        value = payload[name]
        if expected is int and isinstance(value, bool):
            raise MalformedMessage(f"{msg_type}.{name} must be an integer")
        if not isinstance(value, expected):
            raise MalformedMessage(
                f"{msg_type}.{name} has wrong type {type(value).__name__}")
        clean[name] = value
    # unknown payload fields are dropped for forward compatibility
    return ProtocolMessage(msg_type, clean, doc["v"])


# -- grid run-length encoding ---------------------------------------------------

def encode_grid_rle(grid) -> list:
    """Row-major run-length encoding: [[runLength, colorOrNull], ...]."""
    runs = []
    current = object()
    count = 0
    for row in grid:
        for cell in row:
            if cell == current:
                count += 1
            else:
                if count:
                    runs.append([count, current])
                current = cell
                count = 1
    if count:
        runs.append([count, current])
    return runs


def decode_grid_rle(runs, width: int, height: int):
    cells = []
    for count, color in runs:
        cells.extend([color] * count)
    if len(cells) != width * height:
        raise MalformedMessage(
            f"RLE expands to {len(cells)} cells, expected {width * height}")
    return [cells[r * width: (r + 1) * width] for r in range(height)]
