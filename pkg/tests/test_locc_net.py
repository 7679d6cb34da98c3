"""Tests locc_net.py"""
import concurrent.futures
import json
import socket

import pytest

from wvlab import locc_net, messages, protocol, scenario_file
from wvlab.errors import SessionAbort
from wvlab.messages import Message, MessageType
from wvlab.protocol import Scenario
from wvlab.qmath import KET_0, KET_PLUS, SIGMA_X, SIGMA_Z
from wvlab.resources import EntangledResource

SCENARIO = Scenario(
    resource=EntangledResource.singlet(),
    observable=SIGMA_Z,
    pre=KET_PLUS,
    post=KET_0,
    g=0.5,
    name="net",
)
SHOTS = 400
SEED = 9


def read_message(sock):
    return messages.decode(messages.read_frame(sock))


def hello_from_bob(scenario=SCENARIO, seq=0):
    digest = scenario_file.scenario_digest(scenario)
    return Message(
        MessageType.HELLO,
        session_id=42,
        seq=seq,
        payload={"role": "bob", "scenario_hash": digest, "version": "0"},
    )


def run_pair(alice_kwargs=None, bob_kwargs=None, timeout=5.0):
    """Runs both sides on a socket pair; returns (alice future, bob future)"""
    shared = {"scenario": SCENARIO, "seed": SEED, "shots": SHOTS}
    alice_kwargs = {**shared, **(alice_kwargs or {})}
    bob_kwargs = {**shared, **(bob_kwargs or {})}
    left, right = socket.socketpair()
    with left, right, concurrent.futures.ThreadPoolExecutor(max_workers=2) as pool:
        alice = pool.submit(locc_net.run_alice, left, timeout=timeout, **alice_kwargs)
        bob = pool.submit(locc_net.run_bob, right, timeout=timeout, **bob_kwargs)
        concurrent.futures.wait([alice, bob])
    return alice, bob


def test_session_matches_sampled_run():
    alice, bob = run_pair()
    expected = protocol.sample_shots(SCENARIO, SHOTS, SEED)
    assert alice.result() == expected
    assert bob.result() == expected


def test_session_transcripts(tmp_path):
    alice_path = tmp_path / "alice.jsonl"
    bob_path = tmp_path / "bob.jsonl"
    with locc_net.TranscriptWriter(str(alice_path)) as alice_log:
        with locc_net.TranscriptWriter(str(bob_path)) as bob_log:
            alice, bob = run_pair(
                {"transcript": alice_log}, {"transcript": bob_log}
            )
    assert alice.result() == bob.result()
    alice_records = [json.loads(line) for line in alice_path.read_text().splitlines()]
    bob_records = [json.loads(line) for line in bob_path.read_text().splitlines()]
    assert alice_records[0]["type"] == "HELLO"
    assert alice_records[0]["direction"] == "received"
    assert alice_records[-1]["type"] == "POINTER_REPORT"
    assert bob_records[-1]["direction"] == "received"
    sent_by_alice = [r["seq"] for r in alice_records if r["direction"] == "sent"]
    assert sent_by_alice == list(range(len(sent_by_alice)))
    bell_results = [r for r in bob_records if r.get("type") == "BELL_RESULT"]
    assert all(r["payload"]["outcome"] == 4 for r in bell_results)
    assert len(bell_results) == round(alice.result().bell_outcome_probs[3] * SHOTS)


def test_scenario_mismatch_aborts_both_sides():
    other = Scenario(
        resource=EntangledResource.singlet(),
        observable=SIGMA_X,
        pre=KET_PLUS,
        post=KET_0,
        g=0.5,
        name="net",
    )
    alice, bob = run_pair(bob_kwargs={"scenario": other})
    with pytest.raises(SessionAbort) as alice_err:
        alice.result()
    with pytest.raises(SessionAbort) as bob_err:
        bob.result()
    assert alice_err.value.reason == "scenario-mismatch"
    assert bob_err.value.reason == "scenario-mismatch"


def test_seed_mismatch_aborts():
    alice, bob = run_pair(bob_kwargs={"seed": SEED + 1})
    with pytest.raises(SessionAbort, match="scenario-mismatch"):
        bob.result()
    with pytest.raises(SessionAbort, match="scenario-mismatch"):
        alice.result()


def test_message_before_hello_is_order_violation():
    left, right = socket.socketpair()
    with left, right:
        messages.send_message(
            right, Message(MessageType.BELL_RESULT, 1, 0, {"outcome": 4, "shot": 0})
        )
        with pytest.raises(SessionAbort) as err:
            locc_net.run_alice(left, SCENARIO, SEED, SHOTS, timeout=2.0)
    assert err.value.reason == "order"


def test_repeated_sequence_number_aborts_with_abort_frame():
    left, right = socket.socketpair()
    with left, right:
        messages.send_message(right, hello_from_bob())
        # Same seq as the HELLO
        messages.send_message(
            right,
            Message(
                MessageType.POSTSELECT_REQUEST,
                42,
                0,
                {"shot": 0, "projector": messages.projector_to_wire(KET_0.projector())},
            ),
        )
        with pytest.raises(SessionAbort, match="did not increase"):
            locc_net.run_alice(left, SCENARIO, SEED, SHOTS, timeout=2.0)
        received = []
        while not received or received[-1].type is not MessageType.ABORT:
            received.append(read_message(right))
    assert [msg.type for msg in received[:3]] == [
        MessageType.HELLO,
        MessageType.SCENARIO,
        MessageType.COUPLE_DONE,
    ]
    assert received[-1].payload["reason"] == "order"
    assert received[-1].session_id == 42


def test_unexpected_message_type_aborts():
    left, right = socket.socketpair()
    with left, right:
        messages.send_message(right, hello_from_bob())
        payload = {"shot": 0, "success": True}
        messages.send_message(
            right, Message(MessageType.POSTSELECT_RESULT, 42, 1, payload)
        )
        with pytest.raises(SessionAbort, match="expected POSTSELECT_REQUEST"):
            locc_net.run_alice(left, SCENARIO, SEED, SHOTS, timeout=2.0)


def test_timeout_leaves_partial_transcript(tmp_path):
    path = tmp_path / "alice.jsonl"
    left, right = socket.socketpair()
    with left, right:
        messages.send_message(right, hello_from_bob())
        with locc_net.TranscriptWriter(str(path)) as transcript:
            with pytest.raises(SessionAbort) as err:
                locc_net.run_alice(
                    left, SCENARIO, SEED, SHOTS, transcript=transcript, timeout=0.2
                )
    assert err.value.reason == "timeout"
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert [record["type"] for record in records[:5]] == [
        "HELLO",
        "HELLO",
        "SCENARIO",
        "COUPLE_DONE",
        "BELL_RESULT",
    ]
    assert records[-1]["type"] == "ABORT"
    assert records[-1]["payload"]["reason"] == "timeout"


def test_projector_mismatch_aborts():
    left, right = socket.socketpair()
    with left, right:
        messages.send_message(right, hello_from_bob())
        with concurrent.futures.ThreadPoolExecutor(max_workers=1) as pool:
            alice = pool.submit(
                locc_net.run_alice, left, SCENARIO, SEED, SHOTS, timeout=2.0
            )
            msg = read_message(right)
            while msg.type is not MessageType.BELL_RESULT:
                msg = read_message(right)
            wrong = messages.projector_to_wire(KET_PLUS.projector())
            messages.send_message(
                right,
                Message(
                    MessageType.POSTSELECT_REQUEST,
                    42,
                    1,
                    {"shot": msg.payload["shot"], "projector": wrong},
                ),
            )
            with pytest.raises(SessionAbort) as err:
                alice.result()
    assert err.value.reason == "projector-mismatch"


def test_peer_closing_mid_session_aborts_as_timeout(tmp_path):
    path = tmp_path / "alice.jsonl"
    left, right = socket.socketpair()
    with left, right, locc_net.TranscriptWriter(str(path)) as transcript:
        messages.send_message(right, hello_from_bob())
        with concurrent.futures.ThreadPoolExecutor(max_workers=1) as pool:
            alice = pool.submit(
                locc_net.run_alice,
                left,
                SCENARIO,
                SEED,
                SHOTS,
                transcript=transcript,
                timeout=2.0,
            )
            msg = read_message(right)
            while msg.type is not MessageType.BELL_RESULT:
                msg = read_message(right)
            right.close()
            with pytest.raises(SessionAbort) as err:
                alice.result()
    assert err.value.reason == "timeout"
    assert "connection lost" in err.value.detail
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert records[-1]["type"] == "BELL_RESULT"
    assert records[-1]["direction"] == "sent"


def test_session_with_empty_quadrature():
    alice, bob = run_pair({"shots": 8, "seed": 1}, {"shots": 8, "seed": 1})
    expected = protocol.sample_shots(SCENARIO, 8, 1)
    assert expected.accepted_shots == 1
    assert alice.result() == expected
    assert bob.result() == expected
    assert bob.result().pointer_estimate is None


@pytest.mark.parametrize(
    "endpoint,expected",
    [("127.0.0.1:47000", ("127.0.0.1", 47000)), ("localhost:0", ("localhost", 0))],
)
def test_parse_endpoint(endpoint, expected):
    assert locc_net.parse_endpoint(endpoint) == expected


@pytest.mark.parametrize(
    "endpoint", ["47000", ":47000", "host:", "host:port", "h:70000"]
)
def test_parse_endpoint_invalid(endpoint):
    with pytest.raises(ValueError, match="host:port"):
        locc_net.parse_endpoint(endpoint)


def test_run_session_rejects_unknown_role():
    with pytest.raises(ValueError, match="Role must be one of"):
        locc_net.run_session("eve", "127.0.0.1:47000", SCENARIO, SEED)


def test_run_session_over_tcp(tmp_path):
    with socket.socket() as spare:
        spare.bind(("127.0.0.1", 0))
        port = spare.getsockname()[1]
    endpoint = f"127.0.0.1:{port}"
    log_path = tmp_path / "bob.log"
    with concurrent.futures.ThreadPoolExecutor(max_workers=2) as pool:
        alice = pool.submit(
            locc_net.run_session, "alice", endpoint, SCENARIO, SEED, SHOTS,
            transcript_path=str(tmp_path / "alice.jsonl"),
        )
        bob = pool.submit(
            locc_net.run_session, "bob", endpoint, SCENARIO, SEED, SHOTS,
            log_path=str(log_path),
        )
        assert alice.result() == bob.result()
    assert "COMPLETE" in log_path.read_text()
