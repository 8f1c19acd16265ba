"""TCP binding for the two-phase session: one message per connection."""

import logging
import socket
from typing import Optional

from .cipher import CipherBundle, encrypt_message
from .errors import (
    CorruptShareError,
    FormatError,
    PeerError,
    ProtocolViolationError,
    SessionTimeoutError,
    TruncatedFrameError,
    WrongKeyError,
)
from .session import (
    HEADER_SIZE,
    ErrorCode,
    Frame,
    SessionState,
    error_frame,
    frame_encode,
    parse_header,
    receiver_on_frame,
    receiver_start,
    sender_on_frame,
    sender_start,
)

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            break
        buf += chunk
    return bytes(buf)


def recv_frame(sock: socket.socket) -> Optional[Frame]:
    """Read one frame; None on a clean EOF before any header byte."""
    header = _recv_exact(sock, HEADER_SIZE)
    if not header:
        return None
    ftype, length = parse_header(header)
    payload = _recv_exact(sock, length)
    if len(payload) < length:
        raise TruncatedFrameError(f"connection closed after {len(payload)} of {length} payload bytes")
    return Frame(ftype, payload)


def send_frame(sock: socket.socket, frame: Frame) -> None:
    log.debug("-> %s (%d bytes)", frame.frame_type.name, len(frame.payload))
    sock.sendall(frame_encode(frame))


_LOCAL_ERRORS = {
    ErrorCode.CORRUPT_SHARE: CorruptShareError,
    ErrorCode.WRONG_KEY: WrongKeyError,
}


def _raise_for(state: SessionState):
    err = state.error
    if err.local:
        raise _LOCAL_ERRORS.get(err.code, ProtocolViolationError)(err.reason)
    raise PeerError(err.code, err.reason)


def _next_frame(sock: socket.socket) -> Frame:
    try:
        frame = recv_frame(sock)
    except FormatError as exc:
        _try_send(sock, error_frame(ErrorCode.PROTOCOL_VIOLATION, str(exc)))
        raise ProtocolViolationError(str(exc)) from exc
    except socket.timeout:
        _try_send(sock, error_frame(ErrorCode.TIMEOUT, "idle timeout"))
        raise SessionTimeoutError("peer went idle") from None
    except ConnectionError as exc:
        raise ProtocolViolationError(f"connection lost: {exc}") from exc
    if frame is None:
        raise ProtocolViolationError("peer closed the connection mid-session")
    log.debug("<- %s (%d bytes)", frame.frame_type.name, len(frame.payload))
    return frame


def _try_send(sock: socket.socket, frame: Frame) -> None:
    try:
        send_frame(sock, frame)
    except OSError:
        pass


def send_bundle(sock: socket.socket, bundle: CipherBundle) -> None:
    """Run the sender side over a connected socket."""
    state, frame = sender_start(bundle)
    send_frame(sock, frame)
    while not state.closed:
        state, frame = sender_on_frame(state, _next_frame(sock))
        if frame is not None:
            send_frame(sock, frame)
    if state.error is not None:
        _raise_for(state)


def send_message(host: str, port: int, message: bytes, timeout: float = DEFAULT_TIMEOUT, rng=None) -> None:
    bundle = encrypt_message(message, rng)
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except socket.timeout:
        raise SessionTimeoutError(f"could not reach {host}:{port}") from None
    with sock:
        send_bundle(sock, bundle)


def receive_on(sock: socket.socket) -> bytes:
    """Run the receiver side over a connected socket and return the message."""
    state = receiver_start()
    while True:
        state, out, message = receiver_on_frame(state, _next_frame(sock))
        if out is not None:
            send_frame(sock, out)
        if message is not None:
            return message
        if state.closed:
            _raise_for(state)


def listen(host: str = "127.0.0.1", port: int = 0) -> socket.socket:
    """Bind a listening socket; port 0 picks a free port."""
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(1)
    return srv


def serve_one(listener: socket.socket, timeout: float = DEFAULT_TIMEOUT) -> bytes:
    """Accept one connection and receive one message from it."""
    listener.settimeout(timeout)
    try:
        conn, peer = listener.accept()
    except socket.timeout:
        raise SessionTimeoutError(f"no sender connected within {timeout:g}s") from None
    log.info("connection from %s:%d", *peer[:2])
    with conn:
        conn.settimeout(timeout)
        return receive_on(conn)


def receive_message(port: int, host: str = "127.0.0.1", timeout: float = DEFAULT_TIMEOUT) -> bytes:
    with listen(host, port) as srv:
        return serve_one(srv, timeout)
