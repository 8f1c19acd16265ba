"""Command-line interface.

Exit codes: 0 ok, 2 bad input, 3 output failure, 4 wrong key, 5 corrupt
artifact, 6 timeout, 7 protocol violation.
"""

import argparse
import logging
import random
import sys
from pathlib import Path

from . import tcp
from .cipher import CipherBundle, decrypt_message, encrypt_message
from .errors import (
    CorruptShareError,
    DualPlaneError,
    FormatError,
    InvalidBundleError,
    KeySizeMismatchError,
    NothingToExportError,
    PeerError,
    ProtocolViolationError,
    SessionTimeoutError,
    WrongKeyError,
)
from .keystream import KEY_MAGIC, key_from_bytes, read_key, write_key
from .session import ErrorCode
from .shares import SHARE_MAGIC, export_bitmap, read_share, share_from_bytes, write_share

log = logging.getLogger("dualplane")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OUTPUT = 3
EXIT_WRONG_KEY = 4
EXIT_CORRUPT = 5
EXIT_TIMEOUT = 6
EXIT_PROTOCOL = 7

_PEER_EXIT = {
    ErrorCode.PROTOCOL_VIOLATION: EXIT_PROTOCOL,
    ErrorCode.CORRUPT_SHARE: EXIT_CORRUPT,
    ErrorCode.WRONG_KEY: EXIT_WRONG_KEY,
    ErrorCode.TIMEOUT: EXIT_TIMEOUT,
}


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _read_input(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc.strerror or exc}")


def _rng(args):
    if args.seed is None:
        return None
    if not args.insecure_deterministic:
        raise CliError(EXIT_INPUT, "--seed requires --insecure-deterministic")
    return random.Random(args.seed)


def write_bundle(bundle: CipherBundle, out_dir) -> None:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_share(bundle.share1, out_dir / "share1.dps")
        write_key(bundle.key1, out_dir / "key1.dpk")
        write_share(bundle.share2, out_dir / "share2.dps")
        write_key(bundle.key2, out_dir / "key2.dpk")
    except OSError as exc:
        raise CliError(EXIT_OUTPUT, f"cannot write to {out_dir}: {exc.strerror or exc}")


def _write_output(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise CliError(EXIT_OUTPUT, f"cannot write {path}: {exc.strerror or exc}")


def cmd_encrypt(args) -> int:
    message = _read_input(args.in_path)
    bundle = encrypt_message(message, _rng(args))
    write_bundle(bundle, args.out_dir)
    for share in (bundle.share1, bundle.share2):
        print(f"share{share.plane_index}: {share.width}x{share.height} msg_len={share.msg_len}")
    return EXIT_OK


def cmd_decrypt(args) -> int:
    try:
        bundle = CipherBundle(
            share1=read_share(args.share1),
            share2=read_share(args.share2),
            key1=read_key(args.key1),
            key2=read_key(args.key2),
        )
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {exc.filename}: {exc.strerror}")
    message = decrypt_message(bundle)
    if args.text:
        try:
            message.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CliError(EXIT_CORRUPT, f"recovered message is not valid UTF-8: {exc.reason} at byte {exc.start}")
    _write_output(args.out, message)
    return EXIT_OK


def cmd_send(args) -> int:
    message = _read_input(args.in_path)
    rng = _rng(args)
    try:
        tcp.send_message(args.host, args.port, message, timeout=args.timeout_secs, rng=rng)
    except SessionTimeoutError:
        raise
    except OSError as exc:
        raise CliError(EXIT_OUTPUT, f"connection to {args.host}:{args.port} failed: {exc.strerror or exc}")
    return EXIT_OK


def _next_path(base: Path, n: int) -> Path:
    return base if n == 0 else base.with_name(f"{base.name}.{n}")


def cmd_recv(args) -> int:
    try:
        listener = tcp.listen(args.host, args.listen)
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot listen on {args.host}:{args.listen}: {exc.strerror or exc}")
    out = Path(args.out)
    with listener:
        host, port = listener.getsockname()[:2]
        print(f"listening on {host}:{port}", flush=True)
        n = 0
        while True:
            try:
                message = tcp.serve_one(listener, timeout=args.timeout_secs)
            except DualPlaneError as exc:
                if not args.keep_alive:
                    raise
                log.warning("session failed: %s", exc)
                continue
            except OSError as exc:
                if not args.keep_alive:
                    raise CliError(EXIT_PROTOCOL, f"connection failed: {exc.strerror or exc}")
                log.warning("connection failed: %s", exc)
                continue
            path = _next_path(out, n)
            _write_output(path, message)
            print(f"received {len(message)} bytes -> {path}", flush=True)
            n += 1
            if not args.keep_alive:
                return EXIT_OK


def _inspect_text(data: bytes) -> str:
    if data[:4] == SHARE_MAGIC:
        p = share_from_bytes(data)
        enc = "yes" if p.is_encrypted else "no"
        return f"plane={p.plane_index} {p.width}x{p.height} msg_len={p.msg_len} encrypted={enc}"
    if data[:4] == KEY_MAGIC:
        k = key_from_bytes(data)
        return f"key plane={k.plane_index} bits={len(k)}"
    raise CliError(EXIT_CORRUPT, "not a DPS1 share or DPK1 key file")


def cmd_inspect(args) -> int:
    print(_inspect_text(_read_input(args.in_path)))
    return EXIT_OK


def cmd_export_bitmap(args) -> int:
    data = _read_input(args.in_path)
    plane = share_from_bytes(data)
    try:
        export_bitmap(plane, args.out)
    except OSError as exc:
        raise CliError(EXIT_OUTPUT, f"cannot write {args.out}: {exc.strerror or exc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualplane",
        description="Split a message into two XOR-encrypted bit-plane shares and move them around.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def seeded(p):
        p.add_argument("--seed", type=int, help="deterministic key seed (testing only)")
        p.add_argument("--insecure-deterministic", action="store_true",
                       help="acknowledge that --seed makes keys predictable")

    p = sub.add_parser("encrypt", help="write share1/2.dps and key1/2.dpk")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out-dir", required=True)
    seeded(p)
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="recover a message from two shares and two keys")
    for name in ("--share1", "--key1", "--share2", "--key2", "--out"):
        p.add_argument(name, required=True)
    p.add_argument("--text", action="store_true", help="fail unless the message is valid UTF-8")
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("send", help="send a message over the two-phase protocol")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--timeout-secs", type=float, default=tcp.DEFAULT_TIMEOUT)
    seeded(p)
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("recv", help="receive one message over the two-phase protocol")
    p.add_argument("--listen", type=int, required=True, metavar="PORT")
    p.add_argument("--host", default="0.0.0.0", help="bind address")
    p.add_argument("--out", required=True)
    p.add_argument("--timeout-secs", type=float, default=tcp.DEFAULT_TIMEOUT)
    p.add_argument("--keep-alive", action="store_true", help="keep accepting connections, one at a time")
    p.set_defaults(func=cmd_recv)

    p = sub.add_parser("inspect", help="describe a share or key file")
    p.add_argument("--in", dest="in_path", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("export-bitmap", help="write a share as a plain PBM image")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_bitmap)
    return parser


def _exit_code(exc) -> int:
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, PeerError):
        return _PEER_EXIT.get(exc.code, EXIT_PROTOCOL)
    if isinstance(exc, SessionTimeoutError):
        return EXIT_TIMEOUT
    if isinstance(exc, (WrongKeyError, KeySizeMismatchError)):
        return EXIT_WRONG_KEY
    if isinstance(exc, ProtocolViolationError):
        return EXIT_PROTOCOL
    if isinstance(exc, (FormatError, InvalidBundleError, CorruptShareError)):
        return EXIT_CORRUPT
    if isinstance(exc, NothingToExportError):
        return EXIT_INPUT
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, DualPlaneError) as exc:
        print(f"dualplane: error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
