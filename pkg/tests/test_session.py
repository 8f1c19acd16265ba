import itertools
import random

import pytest

from dualplane.cipher import CipherBundle, encrypt_message
from dualplane.errors import (
    CorruptShareError,
    InvalidBundleError,
    MalformedFrameError,
    OversizeFrameError,
    TruncatedFrameError,
)
from dualplane.keystream import KeyStream
from dualplane.session import (
    MAX_PAYLOAD,
    ErrorCode,
    Frame,
    FrameType,
    Phase,
    frame_decode,
    frame_encode,
    layer_payload,
    parse_error_payload,
    parse_layer_payload,
    receiver_on_frame,
    receiver_start,
    run_loopback,
    sender_on_frame,
    sender_start,
)

K1 = KeyStream([1, 1, 1, 0], 1)
K2 = KeyStream([0, 0, 0, 1], 2)


@pytest.fixture
def golden_bundle():
    return encrypt_message(b"a", keys=(K1, K2))


def test_ack1_bytes():
    assert frame_encode(Frame(FrameType.ACK1)) == bytes.fromhex("44505731 01 03 00000000")
    assert frame_decode(bytes.fromhex("44505731010300000000")) == Frame(FrameType.ACK1)


def test_frame_roundtrip_random():
    rng = random.Random(21)
    for _ in range(1000):
        f = Frame(rng.choice(list(FrameType)), rng.randbytes(rng.randrange(0, 300)))
        data = frame_encode(f)
        assert len(data) == 10 + len(f.payload)
        assert frame_decode(data) == f


@pytest.mark.parametrize(
    "data",
    [
        bytes.fromhex("44505732010300000000"),  # magic
        bytes.fromhex("44505731020300000000"),  # version
        bytes.fromhex("44505731010600000000"),  # type
        bytes.fromhex("4450573101030000000000"),  # trailing byte
    ],
)
def test_malformed_frames(data):
    with pytest.raises(MalformedFrameError):
        frame_decode(data)


def test_oversize_frame():
    header = b"DPW1\x01\x02" + (MAX_PAYLOAD + 1).to_bytes(4, "big")
    with pytest.raises(OversizeFrameError):
        frame_decode(header)


def test_truncated_frame(golden_bundle):
    _, f = sender_start(golden_bundle)
    data = frame_encode(f)
    with pytest.raises(TruncatedFrameError):
        frame_decode(data[:-1])
    with pytest.raises(TruncatedFrameError):
        frame_decode(data[:9])


def test_sender_start_golden(golden_bundle):
    state, f = sender_start(golden_bundle)
    assert state.phase is Phase.SENT_LAYER1
    assert f.frame_type is FrameType.LAYER1
    share, key = parse_layer_payload(frame_decode(frame_encode(f)).payload)
    assert share.bits.tolist() == [0, 1, 1, 1]
    assert key.bits.tolist() == [1, 1, 1, 0]
    assert (share.plane_index, share.is_encrypted, share.msg_len) == (1, True, 1)


def test_sender_start_empty():
    _, f = sender_start(encrypt_message(b""))
    share, key = parse_layer_payload(f.payload)
    assert (share.width, share.height, len(key)) == (0, 0, 0)


def test_sender_start_rejects_bad_bundle(golden_bundle):
    b = golden_bundle
    with pytest.raises(InvalidBundleError):
        sender_start(CipherBundle(b.share1, b.share2, b.key2, b.key1))


def test_sender_ack_sends_layer2(golden_bundle):
    state, _ = sender_start(golden_bundle)
    state, f = sender_on_frame(state, Frame(FrameType.ACK1))
    assert state.phase is Phase.SENT_LAYER2
    share, key = parse_layer_payload(f.payload)
    assert share.bits.tolist() == [0, 0, 1, 1]
    assert key.bits.tolist() == [0, 0, 0, 1]
    state, f = sender_on_frame(state, Frame(FrameType.DONE))
    assert state.closed and f is None and state.error is None


def test_sender_done_too_early(golden_bundle):
    state, _ = sender_start(golden_bundle)
    state, f = sender_on_frame(state, Frame(FrameType.DONE))
    assert state.closed
    assert f.frame_type is FrameType.ERROR
    assert parse_error_payload(f.payload)[0] == ErrorCode.PROTOCOL_VIOLATION
    # nothing further once closed
    assert sender_on_frame(state, Frame(FrameType.ACK1)) == (state, None)


def test_receiver_golden(golden_bundle):
    s = receiver_start()
    _, l1 = sender_start(golden_bundle)
    s, out, msg = receiver_on_frame(s, l1)
    assert (s.phase, out, msg) == (Phase.GOT_LAYER1, Frame(FrameType.ACK1), None)
    assert s.partial.bits.tolist() == [1, 0, 0, 1]
    l2 = Frame(FrameType.LAYER2, layer_payload(golden_bundle.share2, golden_bundle.key2))
    s, out, msg = receiver_on_frame(s, l2)
    assert s.phase is Phase.GOT_LAYER2
    assert out == Frame(FrameType.DONE)
    assert msg == b"a"


def test_receiver_layer2_first(golden_bundle):
    l2 = Frame(FrameType.LAYER2, layer_payload(golden_bundle.share2, golden_bundle.key2))
    s, out, msg = receiver_on_frame(receiver_start(), l2)
    assert s.closed and msg is None
    assert out.frame_type is FrameType.ERROR
    assert s.partial is None


def test_receiver_accepts_one_hello(golden_bundle):
    s, out, _ = receiver_on_frame(receiver_start(), Frame(FrameType.HELLO))
    assert out is None and s.phase is Phase.INIT
    s, out, _ = receiver_on_frame(s, Frame(FrameType.HELLO))
    assert s.closed and out.frame_type is FrameType.ERROR


def test_receiver_truncated_layer1(golden_bundle):
    _, l1 = sender_start(golden_bundle)
    s, out, msg = receiver_on_frame(receiver_start(), Frame(FrameType.LAYER1, l1.payload[:-1]))
    assert s.closed and msg is None and s.partial is None
    assert parse_error_payload(out.payload)[0] == ErrorCode.CORRUPT_SHARE


def test_parse_layer_payload_garbage():
    with pytest.raises(CorruptShareError):
        parse_layer_payload(b"garbage")


def test_receiver_wrong_key(golden_bundle):
    b = golden_bundle
    bad = Frame(FrameType.LAYER1, layer_payload(b.share1, KeyStream([1, 1, 1, 0], 2)))
    s, out, _ = receiver_on_frame(receiver_start(), bad)
    assert s.closed
    assert parse_error_payload(out.payload)[0] == ErrorCode.WRONG_KEY
    short = Frame(FrameType.LAYER1, layer_payload(b.share1, KeyStream([1, 1, 1], 1)))
    s, out, _ = receiver_on_frame(receiver_start(), short)
    assert parse_error_payload(out.payload)[0] == ErrorCode.WRONG_KEY


def test_receiver_mismatched_layer2_shape(golden_bundle):
    other = encrypt_message(b"abc")
    s, _, _ = receiver_on_frame(receiver_start(), sender_start(golden_bundle)[1])
    s, out, msg = receiver_on_frame(s, Frame(FrameType.LAYER2, layer_payload(other.share2, other.key2)))
    assert s.closed and msg is None
    assert parse_error_payload(out.payload)[0] == ErrorCode.CORRUPT_SHARE


def test_peer_error_closes_quietly(golden_bundle):
    err = Frame(FrameType.ERROR, bytes([ErrorCode.WRONG_KEY]) + b"nope")
    s, out, _ = receiver_on_frame(receiver_start(), err)
    assert s.closed and out is None
    assert s.error == (ErrorCode.WRONG_KEY, "nope", False)
    st, _ = sender_start(golden_bundle)
    st, out = sender_on_frame(st, err)
    assert st.closed and out is None


def test_happy_path_loopback(golden_bundle):
    msg, sender, receiver = run_loopback(golden_bundle)
    assert msg == b"a"
    assert sender.closed and receiver.closed
    assert sender.error is None and receiver.error is None


def test_loopback_random_messages():
    rng = random.Random(1000)
    for _ in range(1000):
        m = rng.randbytes(rng.randrange(0, 2000))
        assert run_loopback(encrypt_message(m))[0] == m


def test_sender_never_sends_layer2_without_ack(golden_bundle):
    """Exhaustive over every inbound trace of up to 4 frames."""
    inbound = [Frame(t) for t in FrameType]
    for n in range(1, 5):
        for trace in itertools.product(inbound, repeat=n):
            state, _ = sender_start(golden_bundle)
            outputs = []
            for f in trace:
                was_closed = state.closed
                state, out = sender_on_frame(state, f)
                if was_closed:
                    assert out is None
                outputs.append(out)
            sent = [o.frame_type for o in outputs if o is not None]
            # LAYER2 goes out once, and only as the answer to a leading ACK1
            if trace[0].frame_type is FrameType.ACK1:
                assert outputs[0].frame_type is FrameType.LAYER2
                assert sent.count(FrameType.LAYER2) == 1
            else:
                assert FrameType.LAYER2 not in sent
            if FrameType.ERROR in sent:
                assert state.closed
                assert sent[-1] is FrameType.ERROR
