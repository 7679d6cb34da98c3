"""Length-prefixed JSON frames exchanged between Alice and Bob"""
import dataclasses
import enum
import json
import logging
import socket
import struct
from typing import Any, Callable, Dict, Mapping

import numpy as np

from .errors import DecodeError

logger = logging.getLogger(__name__)

MAX_FRAME_BYTES = 1 << 20
HEADER = struct.Struct(">I")
MAX_SESSION_ID = 2**64


class MessageType(enum.Enum):
    HELLO = "HELLO"
    SCENARIO = "SCENARIO"
    COUPLE_DONE = "COUPLE_DONE"
    BELL_RESULT = "BELL_RESULT"
    POSTSELECT_REQUEST = "POSTSELECT_REQUEST"
    POSTSELECT_RESULT = "POSTSELECT_RESULT"
    POINTER_REPORT = "POINTER_REPORT"
    ABORT = "ABORT"


@dataclasses.dataclass(frozen=True)
class Message:
    """One protocol message.

    Attributes:
        type: message type.
        session_id: 64-bit session identifier.
        seq: per-sender sequence number, strictly increasing.
        payload: type-specific fields, JSON-compatible.
    """

    type: MessageType
    session_id: int
    seq: int
    payload: Dict[str, Any] = dataclasses.field(default_factory=dict)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return _is_int(value) or isinstance(value, float)


def _is_optional_number(value) -> bool:
    return value is None or _is_number(value)


def _is_str(value) -> bool:
    return isinstance(value, str)


def _is_bool(value) -> bool:
    return isinstance(value, bool)


def _is_count(value) -> bool:
    return _is_int(value) and value >= 0


def _is_outcome(value) -> bool:
    return _is_int(value) and 1 <= value <= 4


def _is_projector(value) -> bool:
    return (
        isinstance(value, list)
        and len(value) == 2
        and all(
            isinstance(row, list)
            and len(row) == 2
            and all(
                isinstance(entry, list)
                and len(entry) == 2
                and all(_is_number(part) for part in entry)
                for entry in row
            )
            for row in value
        )
    )


def _is_counts(value) -> bool:
    return isinstance(value, list) and len(value) == 4 and all(map(_is_count, value))


PAYLOAD_SCHEMAS: Dict[MessageType, Dict[str, Callable[[Any], bool]]] = {
    MessageType.HELLO: {"role": _is_str, "scenario_hash": _is_str, "version": _is_str},
    MessageType.SCENARIO: {
        "scenario_hash": _is_str,
        "shots": _is_count,
        "seed": _is_count,
    },
    MessageType.COUPLE_DONE: {"g": _is_number},
    MessageType.BELL_RESULT: {"outcome": _is_outcome, "shot": _is_count},
    MessageType.POSTSELECT_REQUEST: {"shot": _is_count, "projector": _is_projector},
    MessageType.POSTSELECT_RESULT: {"shot": _is_count, "success": _is_bool},
    MessageType.POINTER_REPORT: {
        "mean_q": _is_optional_number,
        "mean_p": _is_optional_number,
        "var_q": _is_optional_number,
        "shots": _is_count,
        "accepted": _is_count,
        "bell_counts": _is_counts,
        "q_samples": _is_count,
        "p_samples": _is_count,
    },
    MessageType.ABORT: {"reason": _is_str, "detail": _is_str},
}


def check_payload(msg_type: MessageType, payload) -> str:
    """Returns a description of what is wrong with a payload, or ''"""
    if not isinstance(payload, dict):
        return "payload must be an object"
    schema = PAYLOAD_SCHEMAS[msg_type]
    missing = set(schema) - set(payload)
    extra = set(payload) - set(schema)
    if missing:
        return f"{msg_type.value} payload missing {', '.join(sorted(missing))}"
    if extra:
        return f"{msg_type.value} payload has unknown {', '.join(sorted(extra))}"
    for key, valid in schema.items():
        if not valid(payload[key]):
            return f"{msg_type.value} payload field '{key}' is invalid"
    return ""


def _reject_constant(name):
    raise ValueError(f"non-finite number {name}")


def _parse_finite(text: str) -> float:
    value = float(text)
    if not np.isfinite(value):
        raise ValueError(f"non-finite number {text}")
    return value


def encode(msg: Message) -> bytes:
    """4-byte big-endian length followed by a UTF-8 JSON body.

    Raises:
        ValueError: the message is invalid or the frame is too large.
    """
    if not isinstance(msg.type, MessageType):
        raise ValueError(f"Unknown message type {msg.type!r}.")
    if not _is_int(msg.session_id) or not 0 <= msg.session_id < MAX_SESSION_ID:
        raise ValueError("session_id must be a 64-bit unsigned integer.")
    if not _is_count(msg.seq):
        raise ValueError("seq must be a non-negative integer.")
    problem = check_payload(msg.type, msg.payload)
    if problem:
        raise ValueError(problem)
    body = json.dumps(
        {
            "type": msg.type.value,
            "session_id": msg.session_id,
            "seq": msg.seq,
            "payload": msg.payload,
        },
        allow_nan=False,
        separators=(",", ":"),
        sort_keys=True,
    ).encode("utf-8")
    if len(body) > MAX_FRAME_BYTES:
        raise ValueError(f"Frame body of {len(body)} bytes exceeds {MAX_FRAME_BYTES}.")
    return HEADER.pack(len(body)) + body


def decode_body(body: bytes, base_offset: int = HEADER.size) -> Message:
    """Parses and validates a frame body (no length prefix)"""
    try:
        text = body.decode("utf-8")
    except UnicodeDecodeError as err:
        raise DecodeError(f"Body is not UTF-8: {err.reason}", base_offset + err.start)
    try:
        document = json.loads(
            text, parse_constant=_reject_constant, parse_float=_parse_finite
        )
    except json.JSONDecodeError as err:
        raise DecodeError(f"Malformed JSON body: {err.msg}", base_offset + err.pos)
    except (ValueError, RecursionError) as err:
        raise DecodeError(f"Malformed JSON body: {err}", base_offset)
    if not isinstance(document, dict):
        raise DecodeError("Body must be a JSON object.", base_offset)
    if set(document) != {"type", "session_id", "seq", "payload"}:
        raise DecodeError(
            "Body must hold exactly type, session_id, seq, payload.", base_offset
        )
    try:
        msg_type = MessageType(document["type"])
    except (ValueError, TypeError):
        raise DecodeError(f"Unknown message type {document['type']!r}.", base_offset)
    session_id = document["session_id"]
    if not _is_int(session_id) or not 0 <= session_id < MAX_SESSION_ID:
        raise DecodeError("session_id must be a 64-bit unsigned integer.", base_offset)
    if not _is_count(document["seq"]):
        raise DecodeError("seq must be a non-negative integer.", base_offset)
    problem = check_payload(msg_type, document["payload"])
    if problem:
        raise DecodeError(problem, base_offset)
    return Message(
        type=msg_type,
        session_id=session_id,
        seq=document["seq"],
        payload=document["payload"],
    )


def decode(frame: bytes) -> Message:
    """Inverse of encode for one complete frame.

    Raises:
        DecodeError: truncated, oversized or malformed frame.
    """
    if len(frame) < HEADER.size:
        raise DecodeError("Truncated frame header.", len(frame))
    (length,) = HEADER.unpack_from(frame)
    if length > MAX_FRAME_BYTES:
        raise DecodeError(f"Frame length {length} exceeds {MAX_FRAME_BYTES}.", 0)
    body = frame[HEADER.size :]
    if len(body) < length:
        raise DecodeError("Truncated frame body.", len(frame))
    if len(body) > length:
        raise DecodeError("Trailing bytes after frame body.", HEADER.size + length)
    return decode_body(body)


def _recv_exact(sock: socket.socket, count: int) -> bytes:
    chunks = []
    remaining = count
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise ConnectionError("Peer closed the connection mid-frame.")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> bytes:
    """Reads one complete frame from a stream socket"""
    header = _recv_exact(sock, HEADER.size)
    (length,) = HEADER.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise DecodeError(f"Frame length {length} exceeds {MAX_FRAME_BYTES}.", 0)
    return header + _recv_exact(sock, length)


def send_message(sock: socket.socket, msg: Message) -> bytes:
    frame = encode(msg)
    sock.sendall(frame)
    return frame


def projector_to_wire(matrix) -> list:
    """2x2 complex matrix as rows of [re, im] pairs"""
    matrix = np.asarray(matrix, dtype=complex)
    return [[[float(entry.real), float(entry.imag)] for entry in row] for row in matrix]


def projector_from_wire(rows: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def message_to_record(msg: Message) -> Mapping[str, Any]:
    """JSON-ready view of a message for transcripts"""
    return {
        "type": msg.type.value,
        "session_id": msg.session_id,
        "seq": msg.seq,
        "payload": msg.payload,
    }
