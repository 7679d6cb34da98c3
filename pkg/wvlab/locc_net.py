"""Alice and Bob as two processes talking over a framed TCP channel.

Alice holds the simulated quantum state and pointer. Bob only ever sends
classical requests; his postselection is executed by Alice on his behalf.
"""
import json
import logging
import secrets
import socket
import time
from typing import NoReturn, Optional, Tuple

import numpy as np

from . import config, messages, protocol, scenario_file
from .__version__ import __version__
from .errors import DecodeError, InsufficientStatisticsError, SessionAbort
from .messages import Message, MessageType
from .protocol import ProtocolResult, Scenario, ShotSummary

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0
DEFAULT_SHOTS = 10_000
ROLES = ("alice", "bob")
LOG_FORMAT = "%(asctime)s [%(name)s][%(levelname)s] %(message)s"


class TranscriptWriter:
    """Line-delimited JSON transcript, flushed after every record.

    Args:
        path: file to write, or None to keep no transcript.
    """

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self._handle = open(path, "w", encoding="utf-8") if path else None

    def _write(self, record: dict):
        if self._handle is None:
            return
        record = {"ts": time.time(), **record}
        self._handle.write(json.dumps(record, sort_keys=True) + "\n")
        self._handle.flush()

    def message(self, direction: str, msg: Message):
        self._write({"direction": direction, **messages.message_to_record(msg)})

    def event(self, name: str, **fields):
        self._write({"event": name, **fields})

    def close(self):
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class Channel:
    """One side of a session: sequencing, ordering checks and aborts.

    Args:
        sock: connected stream socket.
        role: "alice" or "bob".
        transcript: where every frame is recorded.
        timeout: seconds to wait for each message.
    """

    def __init__(
        self,
        sock: socket.socket,
        role: str,
        transcript: TranscriptWriter,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        sock.settimeout(timeout)
        self.sock = sock
        self.role = role
        self.transcript = transcript
        self.session_id = None
        self._seq = 0
        self._peer_seq = -1

    def send(self, msg_type: MessageType, payload: dict) -> Message:
        msg = Message(
            type=msg_type, session_id=self.session_id, seq=self._seq, payload=payload
        )
        self._seq += 1
        try:
            messages.send_message(self.sock, msg)
        except socket.timeout:
            detail = f"{self.role} could not send {msg_type.value}"
            raise SessionAbort("timeout", detail)
        except OSError as err:
            raise SessionAbort("timeout", f"connection lost: {err}")
        self.transcript.message("sent", msg)
        return msg

    def receive(self) -> Message:
        try:
            msg = messages.decode(messages.read_frame(self.sock))
        except socket.timeout:
            self.abort("timeout", f"{self.role} got no message in time")
        except DecodeError as err:
            self.abort("decode", str(err))
        except OSError as err:
            self.abort("timeout", f"connection lost: {err}")
        self.transcript.message("received", msg)
        if self.session_id is not None and msg.session_id != self.session_id:
            self.abort("session", f"unexpected session id {msg.session_id}")
        if msg.seq <= self._peer_seq:
            self.abort("order", f"sequence number {msg.seq} did not increase")
        self._peer_seq = msg.seq
        if msg.type is MessageType.ABORT:
            raise SessionAbort(msg.payload["reason"], f"peer: {msg.payload['detail']}")
        return msg

    def expect(self, *msg_types: MessageType) -> Message:
        """Receives the next message, aborting unless it has one of the types"""
        msg = self.receive()
        if msg.type not in msg_types:
            wanted = " or ".join(msg_type.value for msg_type in msg_types)
            self.abort("order", f"expected {wanted}, got {msg.type.value}")
        return msg

    def abort(self, reason: str, detail: str) -> NoReturn:
        """Tells the peer why the session ends, then raises SessionAbort"""
        logger.error(f"ABORTING SESSION ({reason}): {detail}")
        if self.session_id is not None:
            try:
                self.send(MessageType.ABORT, {"reason": reason, "detail": detail})
            except SessionAbort:
                pass
        raise SessionAbort(reason, detail)


def summary_to_payload(summary: ShotSummary, shots: int) -> dict:
    return {
        "mean_q": summary.mean_q,
        "mean_p": summary.mean_p,
        "var_q": summary.var_q,
        "shots": shots,
        "accepted": summary.accepted,
        "bell_counts": list(summary.bell_counts),
        "q_samples": summary.q_samples,
        "p_samples": summary.p_samples,
    }


def _optional_float(value) -> Optional[float]:
    return None if value is None else float(value)


def summary_from_payload(payload: dict) -> ShotSummary:
    return ShotSummary(
        bell_counts=tuple(payload["bell_counts"]),
        accepted=payload["accepted"],
        mean_q=_optional_float(payload["mean_q"]),
        mean_p=_optional_float(payload["mean_p"]),
        var_q=_optional_float(payload["var_q"]),
        q_samples=payload["q_samples"],
        p_samples=payload["p_samples"],
    )


def _hello(digest: str, role: str) -> dict:
    return {"role": role, "scenario_hash": digest, "version": __version__}


def run_alice(
    sock: socket.socket,
    scenario: Scenario,
    seed: int,
    shots: int = DEFAULT_SHOTS,
    transcript: TranscriptWriter = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> ProtocolResult:
    """Alice's side of a session on a connected socket"""
    channel = Channel(sock, "alice", transcript or TranscriptWriter(), timeout)
    digest = scenario_file.scenario_digest(scenario)
    hello = channel.expect(MessageType.HELLO)
    channel.session_id = hello.session_id
    if hello.payload["role"] != "bob":
        channel.abort("order", f"expected bob, got role {hello.payload['role']!r}")
    if hello.payload["scenario_hash"] != digest:
        channel.abort("scenario-mismatch", "bob holds a different scenario")
    channel.send(MessageType.HELLO, _hello(digest, "alice"))
    channel.send(
        MessageType.SCENARIO, {"scenario_hash": digest, "shots": shots, "seed": seed}
    )

    engine = protocol.ShotEngine(scenario)
    batch = protocol.simulate_shots(engine, shots, seed)
    channel.send(MessageType.COUPLE_DONE, {"g": scenario.g})

    expected = protocol.bob_projector(scenario)
    tolerance = config.get_tolerances().algebraic
    outcome = scenario.accepted_bell_outcome
    # Non-accepted outcomes are tallied locally and never announced
    for shot in np.flatnonzero(batch.outcomes == outcome):
        shot = int(shot)
        channel.send(MessageType.BELL_RESULT, {"outcome": outcome, "shot": shot})
        request = channel.expect(MessageType.POSTSELECT_REQUEST)
        if request.payload["shot"] != shot:
            channel.abort("order", f"request for shot {request.payload['shot']}")
        projector = messages.projector_from_wire(request.payload["projector"])
        if not np.allclose(projector, expected, rtol=0, atol=tolerance):
            channel.abort("projector-mismatch", f"unexpected projector for shot {shot}")
        channel.send(
            MessageType.POSTSELECT_RESULT,
            {"shot": shot, "success": bool(batch.success[shot])},
        )

    try:
        summary = protocol.summarize_shots(batch)
    except InsufficientStatisticsError as err:
        try:
            channel.send(
                MessageType.ABORT,
                {"reason": "insufficient-statistics", "detail": str(err)},
            )
        except SessionAbort:
            pass
        raise
    channel.send(MessageType.POINTER_REPORT, summary_to_payload(summary, shots))
    logger.info(f"SESSION {channel.session_id} COMPLETE")
    return protocol.result_from_summary(scenario, summary, shots)


def run_bob(
    sock: socket.socket,
    scenario: Scenario,
    seed: int,
    shots: int = DEFAULT_SHOTS,
    transcript: TranscriptWriter = None,
    timeout: float = DEFAULT_TIMEOUT,
    session_id: int = None,
) -> ProtocolResult:
    """Bob's side of a session on a connected socket"""
    channel = Channel(sock, "bob", transcript or TranscriptWriter(), timeout)
    channel.session_id = secrets.randbits(64) if session_id is None else session_id
    digest = scenario_file.scenario_digest(scenario)
    channel.send(MessageType.HELLO, _hello(digest, "bob"))
    hello = channel.expect(MessageType.HELLO)
    if hello.payload["role"] != "alice":
        channel.abort("order", f"expected alice, got role {hello.payload['role']!r}")
    if hello.payload["scenario_hash"] != digest:
        channel.abort("scenario-mismatch", "alice holds a different scenario")
    setup = channel.expect(MessageType.SCENARIO)
    if (setup.payload["shots"], setup.payload["seed"]) != (shots, seed):
        channel.abort(
            "scenario-mismatch",
            f"alice runs {setup.payload['shots']} shots with seed "
            f"{setup.payload['seed']}",
        )
    channel.expect(MessageType.COUPLE_DONE)

    projector = messages.projector_to_wire(protocol.bob_projector(scenario))
    successes = 0
    while True:
        msg = channel.expect(MessageType.BELL_RESULT, MessageType.POINTER_REPORT)
        if msg.type is MessageType.POINTER_REPORT:
            break
        shot = msg.payload["shot"]
        if msg.payload["outcome"] != scenario.accepted_bell_outcome:
            channel.abort("order", f"outcome {msg.payload['outcome']} was not accepted")
        channel.send(
            MessageType.POSTSELECT_REQUEST, {"shot": shot, "projector": projector}
        )
        result = channel.expect(MessageType.POSTSELECT_RESULT)
        if result.payload["shot"] != shot:
            channel.abort("order", f"result for shot {result.payload['shot']}")
        successes += int(result.payload["success"])

    summary = summary_from_payload(msg.payload)
    if msg.payload["shots"] != shots or summary.accepted != successes:
        channel.abort("report-mismatch", "pointer report disagrees with the session")
    logger.info(f"SESSION {channel.session_id} COMPLETE")
    return protocol.result_from_summary(scenario, summary, shots)


def parse_endpoint(endpoint: str) -> Tuple[str, int]:
    """'host:port' to (host, port)"""
    host, separator, port = endpoint.rpartition(":")
    if not separator or not host or not port.isdigit() or not 0 <= int(port) < 65536:
        raise ValueError(f"Endpoint must look like host:port, got {endpoint!r}.")
    return host, int(port)


def _connect(host: str, port: int, timeout: float) -> socket.socket:
    deadline = time.monotonic() + timeout
    while True:
        try:
            return socket.create_connection((host, port), timeout=timeout)
        except OSError as err:
            if time.monotonic() >= deadline:
                raise SessionAbort("timeout", f"could not reach {host}:{port}: {err}")
            time.sleep(0.05)


def run_session(
    role: str,
    endpoint: str,
    scenario: Scenario,
    seed: int,
    shots: int = DEFAULT_SHOTS,
    transcript_path: str = None,
    timeout: float = DEFAULT_TIMEOUT,
    log_path: str = None,
) -> ProtocolResult:
    """Runs one side of a session. Alice listens on the endpoint, Bob connects.

    Args:
        role: "alice" or "bob".
        endpoint: host:port.
        scenario: scenario both sides must share.
        seed: 64-bit sampling seed, checked during the handshake.
        shots: number of shots, checked during the handshake.
        transcript_path: JSONL transcript file.
        timeout: seconds per message (and to find the counterpart).
        log_path: optional log file for this session.

    Returns:
        ProtocolResult equal to protocol.sample_shots(scenario, shots, seed).

    Raises:
        SessionAbort: timeout, order violation or handshake mismatch.
    """
    if role not in ROLES:
        raise ValueError(f"Role must be one of {', '.join(ROLES)}, got {role!r}.")
    host, port = parse_endpoint(endpoint)
    package_logger = logging.getLogger("wvlab")
    log_handler = None
    if log_path is not None:
        log_handler = logging.FileHandler(log_path)
        log_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        package_logger.addHandler(log_handler)
    previous_level = package_logger.level
    if log_handler is not None and not package_logger.isEnabledFor(logging.INFO):
        package_logger.setLevel(logging.INFO)
    logger.info(f"STARTING {role.upper()} SESSION ON {endpoint}")
    try:
        with TranscriptWriter(transcript_path) as transcript:
            try:
                if role == "alice":
                    with socket.create_server((host, port)) as server:
                        server.settimeout(timeout)
                        try:
                            conn, _ = server.accept()
                        except socket.timeout:
                            raise SessionAbort("timeout", "no counterpart connected")
                        with conn:
                            return run_alice(
                                conn, scenario, seed, shots, transcript, timeout
                            )
                with _connect(host, port, timeout) as conn:
                    return run_bob(conn, scenario, seed, shots, transcript, timeout)
            except SessionAbort as err:
                transcript.event("abort", reason=err.reason, detail=err.detail)
                raise
    finally:
        if log_handler is not None:
            package_logger.removeHandler(log_handler)
            package_logger.setLevel(previous_level)
            log_handler.close()
