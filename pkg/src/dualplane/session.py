"""Two-phase, acknowledgement-gated transfer of a cipher bundle.

The sender ships share 1 with key 1, waits for the receiver to decrypt that
layer and acknowledge it, and only then ships share 2 with key 2.  The state
machines here do no I/O: they consume a :class:`Frame` and return the next
state plus whatever frame should go back on the wire.  :mod:`dualplane.tcp`
binds them to sockets; :func:`run_loopback` wires them together in memory.

DPW1 frame layout (10-byte header)::

    44 50 57 31 | version:u8 (1) | type:u8 | payload_len:u32be | payload

LAYER1/LAYER2 payloads are a DPS1 share record followed by a DPK1 key record.
ERROR payloads are a one-byte :class:`ErrorCode` followed by a UTF-8 reason.
HELLO is folded into LAYER1; a receiver still accepts one leading HELLO.
"""

import enum
import struct
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

from .cipher import CipherBundle, decrypt_partial, recover_message
from .errors import (
    CorruptShareError,
    DualPlaneError,
    FormatError,
    KeySizeMismatchError,
    MalformedFrameError,
    OversizeFrameError,
    TruncatedFrameError,
    WrongKeyError,
)
from .keystream import KeyStream, key_from_bytes, key_to_bytes
from .shares import BitPlane, share_from_bytes, share_record_size, share_to_bytes

WIRE_MAGIC = b"DPW1"
WIRE_VERSION = 1
HEADER = struct.Struct(">4sBBI")
HEADER_SIZE = HEADER.size
MAX_PAYLOAD = 16 * 1024 * 1024


class FrameType(enum.IntEnum):
    HELLO = 0x01
    LAYER1 = 0x02
    ACK1 = 0x03
    LAYER2 = 0x04
    DONE = 0x05
    ERROR = 0x7F


class ErrorCode(enum.IntEnum):
    PROTOCOL_VIOLATION = 1
    CORRUPT_SHARE = 2
    WRONG_KEY = 3
    TIMEOUT = 4


@dataclass(frozen=True)
class Frame:
    frame_type: FrameType
    payload: bytes = b""


def parse_header(header: bytes) -> tuple[FrameType, int]:
    """Validate a 10-byte header and return (type, payload length)."""
    if len(header) < HEADER_SIZE:
        raise TruncatedFrameError(f"need {HEADER_SIZE} header bytes, got {len(header)}")
    magic, version, ftype, length = HEADER.unpack_from(header)
    if magic != WIRE_MAGIC:
        raise MalformedFrameError(f"bad frame magic {magic!r}")
    if version != WIRE_VERSION:
        raise MalformedFrameError(f"unsupported frame version {version}")
    try:
        ftype = FrameType(ftype)
    except ValueError:
        raise MalformedFrameError(f"unknown frame type 0x{ftype:02x}") from None
    if length > MAX_PAYLOAD:
        raise OversizeFrameError(f"frame payload of {length} bytes exceeds the {MAX_PAYLOAD}-byte cap")
    return ftype, length


def frame_encode(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise OversizeFrameError(f"frame payload of {len(frame.payload)} bytes exceeds the cap")
    return HEADER.pack(WIRE_MAGIC, WIRE_VERSION, frame.frame_type, len(frame.payload)) + frame.payload


def frame_decode(data: bytes) -> Frame:
    ftype, length = parse_header(data)
    payload = data[HEADER_SIZE:]
    if len(payload) < length:
        raise TruncatedFrameError(f"frame announces {length} payload bytes, got {len(payload)}")
    if len(payload) > length:
        raise MalformedFrameError(f"{len(payload) - length} trailing bytes after frame")
    return Frame(ftype, bytes(payload))


def layer_payload(share: BitPlane, key: KeyStream) -> bytes:
    return share_to_bytes(share) + key_to_bytes(key)


def parse_layer_payload(payload: bytes) -> tuple[BitPlane, KeyStream]:
    try:
        split = share_record_size(payload)
        share = share_from_bytes(payload[:split])
        key = key_from_bytes(payload[split:])
    except FormatError as exc:
        raise CorruptShareError(f"bad layer payload: {exc}") from exc
    return share, key


def error_frame(code: ErrorCode, reason: str) -> Frame:
    return Frame(FrameType.ERROR, bytes([code]) + reason.encode("utf-8"))


def parse_error_payload(payload: bytes) -> tuple[int, str]:
    if not payload:
        return ErrorCode.PROTOCOL_VIOLATION, "peer aborted"
    return payload[0], payload[1:].decode("utf-8", errors="replace")


class Role(enum.Enum):
    SENDER = "sender"
    RECEIVER = "receiver"


class Phase(enum.Enum):
    INIT = "Init"
    SENT_LAYER1 = "SentLayer1"
    SENT_LAYER2 = "SentLayer2"
    GOT_LAYER1 = "GotLayer1"
    GOT_LAYER2 = "GotLayer2"
    CLOSED = "Closed"


class SessionError(NamedTuple):
    code: int
    reason: str
    local: bool  # True if this side detected the problem and sent ERROR


@dataclass(frozen=True)
class SessionState:
    role: Role
    phase: Phase = Phase.INIT
    partial: Optional[BitPlane] = None
    bundle: Optional[CipherBundle] = None
    hello_seen: bool = False
    error: Optional[SessionError] = None

    @property
    def closed(self) -> bool:
        return self.phase is Phase.CLOSED


def _abort(state: SessionState, code: ErrorCode, reason: str) -> tuple[SessionState, Frame]:
    closed = replace(state, phase=Phase.CLOSED, error=SessionError(int(code), reason, True))
    return closed, error_frame(code, reason)


def _peer_abort(state: SessionState, frame: Frame) -> SessionState:
    code, reason = parse_error_payload(frame.payload)
    return replace(state, phase=Phase.CLOSED, error=SessionError(code, reason, False))


def close(state: SessionState) -> SessionState:
    return replace(state, phase=Phase.CLOSED)


# sender

def sender_start(bundle: CipherBundle) -> tuple[SessionState, Frame]:
    """Open a session by sending share 1 and key 1."""
    bundle.validate()
    state = SessionState(Role.SENDER, Phase.SENT_LAYER1, bundle=bundle)
    return state, Frame(FrameType.LAYER1, layer_payload(bundle.share1, bundle.key1))


def sender_on_frame(state: SessionState, frame: Frame) -> tuple[SessionState, Optional[Frame]]:
    if state.role is not Role.SENDER:
        raise ValueError("sender_on_frame called with a receiver state")
    if state.closed:
        return state, None
    if frame.frame_type is FrameType.ERROR:
        return _peer_abort(state, frame), None
    if state.phase is Phase.SENT_LAYER1 and frame.frame_type is FrameType.ACK1:
        out = Frame(FrameType.LAYER2, layer_payload(state.bundle.share2, state.bundle.key2))
        return replace(state, phase=Phase.SENT_LAYER2), out
    if state.phase is Phase.SENT_LAYER2 and frame.frame_type is FrameType.DONE:
        return replace(state, phase=Phase.CLOSED, bundle=None), None
    return _abort(state, ErrorCode.PROTOCOL_VIOLATION, f"unexpected {frame.frame_type.name} in {state.phase.value}")


# receiver

def receiver_start() -> SessionState:
    return SessionState(Role.RECEIVER)


def _open_layer(payload: bytes, plane_index: int) -> BitPlane:
    share, key = parse_layer_payload(payload)
    if share.plane_index != plane_index or key.plane_index != plane_index:
        raise WrongKeyError(
            f"layer {plane_index} carried share {share.plane_index} with key {key.plane_index}"
        )
    if not share.is_encrypted:
        raise CorruptShareError(f"layer {plane_index} share is not marked encrypted")
    return decrypt_partial(share, key)


def receiver_on_frame(
    state: SessionState, frame: Frame
) -> tuple[SessionState, Optional[Frame], Optional[bytes]]:
    if state.role is not Role.RECEIVER:
        raise ValueError("receiver_on_frame called with a sender state")
    if state.closed:
        return state, None, None
    ftype = frame.frame_type
    if ftype is FrameType.ERROR:
        return _peer_abort(state, frame), None, None
    if state.phase is Phase.INIT and ftype is FrameType.HELLO and not state.hello_seen:
        return replace(state, hello_seen=True), None, None

    if state.phase is Phase.INIT and ftype is FrameType.LAYER1:
        try:
            plane1 = _open_layer(frame.payload, 1)
        except (WrongKeyError, KeySizeMismatchError) as exc:
            return (*_abort(state, ErrorCode.WRONG_KEY, str(exc)), None)
        except DualPlaneError as exc:
            return (*_abort(state, ErrorCode.CORRUPT_SHARE, str(exc)), None)
        return replace(state, phase=Phase.GOT_LAYER1, partial=plane1), Frame(FrameType.ACK1), None

    if state.phase is Phase.GOT_LAYER1 and ftype is FrameType.LAYER2:
        try:
            plane2 = _open_layer(frame.payload, 2)
            if (plane2.width, plane2.height, plane2.msg_len) != (
                state.partial.width, state.partial.height, state.partial.msg_len
            ):
                raise CorruptShareError("layer 2 does not match the shape of layer 1")
            message = recover_message(state.partial, plane2)
        except (WrongKeyError, KeySizeMismatchError) as exc:
            return (*_abort(state, ErrorCode.WRONG_KEY, str(exc)), None)
        except DualPlaneError as exc:
            return (*_abort(state, ErrorCode.CORRUPT_SHARE, str(exc)), None)
        return replace(state, phase=Phase.GOT_LAYER2), Frame(FrameType.DONE), message

    return (*_abort(state, ErrorCode.PROTOCOL_VIOLATION, f"unexpected {ftype.name} in {state.phase.value}"), None)


def run_loopback(bundle: CipherBundle) -> tuple[Optional[bytes], SessionState, SessionState]:
    """Drive a sender and a receiver against each other in memory.

    Every frame is pushed through the byte codec on the way across.
    """
    sender, frame = sender_start(bundle)
    receiver = receiver_start()
    message = None
    to_receiver = True
    while frame is not None:
        frame = frame_decode(frame_encode(frame))
        if to_receiver:
            receiver, frame, got = receiver_on_frame(receiver, frame)
            if got is not None:
                message = got
        else:
            sender, frame = sender_on_frame(sender, frame)
        to_receiver = not to_receiver
    if receiver.phase is Phase.GOT_LAYER2:
        receiver = close(receiver)
    return message, sender, receiver
