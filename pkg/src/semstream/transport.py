"""Wire protocol for the four-node streaming pipeline.

Every frame is:

    offset 0  4 bytes  magic "LSSC"
    offset 4  1 byte   protocol version (0x01)
    offset 5  1 byte   message type
    offset 6  4 bytes  payload length, unsigned big-endian
    offset 10 payload

Payload scalars are little-endian; tensors are serialized as a rank byte,
one u32 little-endian extent per axis, then float32 little-endian values in
row-major order. Payloads are capped at 64 MiB. Decoding is fuzz-safe: any
byte sequence either parses or raises ProtocolError with a specific code,
it never crashes or over-reads.

``run_endpoint`` is the session harness all four roles share: downstream
nodes dial their upstream neighbor, HELLO carries role and codec hash both
ways, CONFIG then flows downstream, and segment traffic is checked for
gapless ordering.
"""

from __future__ import annotations

import socket
import struct
import time
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

MAGIC = b"LSSC"
PROTOCOL_VERSION = 1
HEADER_LEN = 10
MAX_PAYLOAD = 64 * 2**20
MAX_TENSOR_RANK = 8

ROLES = ("device_tx", "edge_a", "edge_b", "device_rx")
CHANNEL_KIND_CODES = {"clean": 0, "awgn": 1, "rayleigh": 2}
_CHANNEL_KIND_NAMES = {v: k for k, v in CHANNEL_KIND_CODES.items()}


class MsgType(IntEnum):
    HELLO = 1
    CONFIG = 2
    UPLOAD_FEATURES = 3
    LINK_SYMBOLS = 4
    DOWNLOAD_FEATURES = 5
    SEGMENT_META = 6
    EOS = 7
    ERROR = 8


# decode failure codes, also used as ERROR message payload codes
ERR_BAD_MAGIC = 1
ERR_BAD_VERSION = 2
ERR_TRUNCATED = 3
ERR_OVERSIZED = 4
ERR_UNKNOWN_TYPE = 5
ERR_DIM_MISMATCH = 6
ERR_MALFORMED = 7
ERR_CONFIG_MISMATCH = 8
ERR_APPLICATION = 9
ERR_ORDERING = 10

_ERR_NAMES = {
    ERR_BAD_MAGIC: "bad magic",
    ERR_BAD_VERSION: "unsupported version",
    ERR_TRUNCATED: "truncated frame",
    ERR_OVERSIZED: "oversized payload",
    ERR_UNKNOWN_TYPE: "unknown message type",
    ERR_DIM_MISMATCH: "tensor dims disagree with payload",
    ERR_MALFORMED: "malformed payload",
    ERR_CONFIG_MISMATCH: "configuration mismatch",
    ERR_APPLICATION: "application error",
    ERR_ORDERING: "segment ordering violation",
}


class ProtocolError(ValueError):
    """Decode or handshake failure; ``code`` picks out the exact cause."""

    def __init__(self, code: int, detail: str = ""):
        self.code = code
        label = _ERR_NAMES.get(code, f"error {code}")
        super().__init__(f"{label}: {detail}" if detail else label)


@dataclass(frozen=True)
class Hello:
    role: str
    codec_hash: int = 0
    version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class Config:
    codec_hash: int
    feature_dim: int
    sample_rate: int
    channel_kind: str
    snr_db: float
    equalize: bool
    channel_seed: int


@dataclass(frozen=True)
class UploadFeatures:
    """Device-side compressed features: a (frames x kept-coeffs) matrix."""

    index: int
    data: np.ndarray
    frame_len: int
    n_samples: int
    sample_rate: int


@dataclass(frozen=True)
class LinkSymbols:
    index: int
    re: np.ndarray
    im: np.ndarray
    power_scale: float
    pad_flag: bool


@dataclass(frozen=True)
class DownloadFeatures:
    """Translated features headed back to the device, same layout as upload."""

    index: int
    data: np.ndarray
    frame_len: int
    n_samples: int
    sample_rate: int


@dataclass(frozen=True)
class SegmentMeta:
    index: int
    n_samples: int
    sample_rate: int
    capture_start: float
    slope: float
    silent: bool
    transmitted: bool
    fade_event: bool = False


@dataclass(frozen=True)
class Eos:
    pass


@dataclass(frozen=True)
class ErrorMessage:
    code: int
    detail: str


Message = (
    Hello | Config | UploadFeatures | LinkSymbols | DownloadFeatures
    | SegmentMeta | Eos | ErrorMessage
)


class _Cursor:
    """Bounds-checked reader; every underrun raises instead of slicing short."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.buf):
            raise ProtocolError(
                ERR_TRUNCATED,
                f"need {n} bytes at offset {self.pos}, have {len(self.buf) - self.pos}",
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "little")

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "little")

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "little")

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def flag(self) -> bool:
        v = self.u8()
        if v > 1:
            raise ProtocolError(ERR_MALFORMED, f"flag byte must be 0 or 1, got {v}")
        return bool(v)

    def text(self) -> str:
        n = self.u32()
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(ERR_MALFORMED, "invalid utf-8 string") from exc

    def expect_end(self) -> None:
        if self.pos != len(self.buf):
            raise ProtocolError(
                ERR_MALFORMED, f"{len(self.buf) - self.pos} trailing payload bytes"
            )


def _put_tensor(out: bytearray, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype=np.float64)
    out.append(arr.ndim)
    for dim in arr.shape:
        out += int(dim).to_bytes(4, "little")
    out += arr.astype("<f4").tobytes()


def _get_tensor(cur: _Cursor) -> np.ndarray:
    rank = cur.u8()
    if rank > MAX_TENSOR_RANK:
        raise ProtocolError(ERR_DIM_MISMATCH, f"tensor rank {rank} too large")
    dims = []
    count = 1
    for _ in range(rank):
        d = cur.u32()
        dims.append(d)
        count *= d
    if count * 4 > MAX_PAYLOAD:
        raise ProtocolError(ERR_DIM_MISMATCH, f"tensor of {count} values oversized")
    remaining = len(cur.buf) - cur.pos
    if count * 4 > remaining:
        raise ProtocolError(
            ERR_DIM_MISMATCH,
            f"dims promise {count * 4} data bytes, payload has {remaining}",
        )
    data = np.frombuffer(cur.take(count * 4), dtype="<f4")
    # signaling-NaN bit patterns raise the FPU invalid flag on widening;
    # garbage floats are tolerated here, not treated as a fault
    with np.errstate(invalid="ignore"):
        return data.astype(np.float64).reshape(dims)


def _put_text(out: bytearray, s: str) -> None:
    raw = s.encode("utf-8")
    out += len(raw).to_bytes(4, "little")
    out += raw


def _put_feature_block(out: bytearray, msg) -> None:
    out += int(msg.index).to_bytes(4, "little")
    out += int(msg.frame_len).to_bytes(4, "little")
    out += int(msg.n_samples).to_bytes(4, "little")
    out += int(msg.sample_rate).to_bytes(4, "little")
    _put_tensor(out, msg.data)


def _get_feature_block(cur: _Cursor):
    index = cur.u32()
    frame_len = cur.u32()
    n_samples = cur.u32()
    sample_rate = cur.u32()
    data = _get_tensor(cur)
    if data.ndim != 2:
        raise ProtocolError(ERR_DIM_MISMATCH, "feature data must be rank 2")
    return index, data, frame_len, n_samples, sample_rate


def _encode_payload(msg: Message) -> tuple[int, bytes]:
    out = bytearray()
    if isinstance(msg, Hello):
        if msg.role not in ROLES:
            raise ProtocolError(ERR_MALFORMED, f"unknown role {msg.role!r}")
        out.append(msg.version)
        out.append(ROLES.index(msg.role) + 1)
        out += int(msg.codec_hash).to_bytes(8, "little")
        return MsgType.HELLO, bytes(out)
    if isinstance(msg, Config):
        if msg.channel_kind not in CHANNEL_KIND_CODES:
            raise ProtocolError(ERR_MALFORMED, f"unknown channel {msg.channel_kind!r}")
        out += int(msg.codec_hash).to_bytes(8, "little")
        out += int(msg.feature_dim).to_bytes(4, "little")
        out += int(msg.sample_rate).to_bytes(4, "little")
        out.append(CHANNEL_KIND_CODES[msg.channel_kind])
        out += struct.pack("<d", msg.snr_db)
        out.append(1 if msg.equalize else 0)
        out += int(msg.channel_seed).to_bytes(8, "little")
        return MsgType.CONFIG, bytes(out)
    if isinstance(msg, UploadFeatures):
        _put_feature_block(out, msg)
        return MsgType.UPLOAD_FEATURES, bytes(out)
    if isinstance(msg, LinkSymbols):
        if len(msg.re) != len(msg.im):
            raise ProtocolError(ERR_DIM_MISMATCH, "re/im length mismatch")
        out += int(msg.index).to_bytes(4, "little")
        out += struct.pack("<d", msg.power_scale)
        out.append(1 if msg.pad_flag else 0)
        _put_tensor(out, np.stack([msg.re, msg.im]))
        return MsgType.LINK_SYMBOLS, bytes(out)
    if isinstance(msg, DownloadFeatures):
        _put_feature_block(out, msg)
        return MsgType.DOWNLOAD_FEATURES, bytes(out)
    if isinstance(msg, SegmentMeta):
        out += int(msg.index).to_bytes(4, "little")
        out += int(msg.n_samples).to_bytes(4, "little")
        out += int(msg.sample_rate).to_bytes(4, "little")
        out += struct.pack("<d", msg.capture_start)
        out += struct.pack("<d", msg.slope)
        out.append(1 if msg.silent else 0)
        out.append(1 if msg.transmitted else 0)
        out.append(1 if msg.fade_event else 0)
        return MsgType.SEGMENT_META, bytes(out)
    if isinstance(msg, Eos):
        return MsgType.EOS, b""
    if isinstance(msg, ErrorMessage):
        out += int(msg.code).to_bytes(2, "little")
        _put_text(out, msg.detail)
        return MsgType.ERROR, bytes(out)
    raise ProtocolError(ERR_UNKNOWN_TYPE, f"cannot encode {type(msg).__name__}")


def _decode_payload(msg_type: int, payload: bytes) -> Message:
    cur = _Cursor(payload)
    if msg_type == MsgType.HELLO:
        version = cur.u8()
        code = cur.u8()
        if not 1 <= code <= len(ROLES):
            raise ProtocolError(ERR_MALFORMED, f"unknown role code {code}")
        msg = Hello(role=ROLES[code - 1], codec_hash=cur.u64(), version=version)
    elif msg_type == MsgType.CONFIG:
        codec_hash = cur.u64()
        feature_dim = cur.u32()
        sample_rate = cur.u32()
        kind_code = cur.u8()
        if kind_code not in _CHANNEL_KIND_NAMES:
            raise ProtocolError(ERR_MALFORMED, f"unknown channel code {kind_code}")
        msg = Config(
            codec_hash=codec_hash,
            feature_dim=feature_dim,
            sample_rate=sample_rate,
            channel_kind=_CHANNEL_KIND_NAMES[kind_code],
            snr_db=cur.f64(),
            equalize=cur.flag(),
            channel_seed=cur.u64(),
        )
    elif msg_type == MsgType.UPLOAD_FEATURES:
        index, data, frame_len, n_samples, sample_rate = _get_feature_block(cur)
        msg = UploadFeatures(index=index, data=data, frame_len=frame_len,
                             n_samples=n_samples, sample_rate=sample_rate)
    elif msg_type == MsgType.LINK_SYMBOLS:
        index = cur.u32()
        power_scale = cur.f64()
        pad_flag = cur.flag()
        sym = _get_tensor(cur)
        if sym.ndim != 2 or sym.shape[0] != 2:
            raise ProtocolError(ERR_DIM_MISMATCH, "symbols must be a (2, n) tensor")
        msg = LinkSymbols(index=index, re=sym[0], im=sym[1],
                          power_scale=power_scale, pad_flag=pad_flag)
    elif msg_type == MsgType.DOWNLOAD_FEATURES:
        index, data, frame_len, n_samples, sample_rate = _get_feature_block(cur)
        msg = DownloadFeatures(index=index, data=data, frame_len=frame_len,
                               n_samples=n_samples, sample_rate=sample_rate)
    elif msg_type == MsgType.SEGMENT_META:
        msg = SegmentMeta(
            index=cur.u32(),
            n_samples=cur.u32(),
            sample_rate=cur.u32(),
            capture_start=cur.f64(),
            slope=cur.f64(),
            silent=cur.flag(),
            transmitted=cur.flag(),
            fade_event=cur.flag(),
        )
    elif msg_type == MsgType.EOS:
        msg = Eos()
    elif msg_type == MsgType.ERROR:
        msg = ErrorMessage(code=cur.u16(), detail=cur.text())
    else:
        raise ProtocolError(ERR_UNKNOWN_TYPE, f"type byte {msg_type}")
    cur.expect_end()
    return msg


def encode_message(msg: Message) -> bytes:
    """Serialize a message into one complete frame."""
    msg_type, payload = _encode_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(ERR_OVERSIZED, f"payload of {len(payload)} bytes")
    head = bytearray(MAGIC)
    head.append(PROTOCOL_VERSION)
    head.append(int(msg_type))
    head += len(payload).to_bytes(4, "big")
    return bytes(head) + payload


def decode_message(frame: bytes) -> Message:
    """Parse one complete frame; raises ProtocolError on any defect."""
    if len(frame) < HEADER_LEN:
        raise ProtocolError(ERR_TRUNCATED, f"frame of {len(frame)} bytes")
    if frame[:4] != MAGIC:
        raise ProtocolError(ERR_BAD_MAGIC, frame[:4].hex())
    if frame[4] != PROTOCOL_VERSION:
        raise ProtocolError(ERR_BAD_VERSION, f"version byte {frame[4]}")
    payload_len = int.from_bytes(frame[6:10], "big")
    if payload_len > MAX_PAYLOAD:
        raise ProtocolError(ERR_OVERSIZED, f"declared {payload_len} bytes")
    if len(frame) < HEADER_LEN + payload_len:
        raise ProtocolError(
            ERR_TRUNCATED,
            f"declared {payload_len} payload bytes, frame has {len(frame) - HEADER_LEN}",
        )
    if len(frame) > HEADER_LEN + payload_len:
        raise ProtocolError(
            ERR_MALFORMED, f"{len(frame) - HEADER_LEN - payload_len} bytes after frame"
        )
    return _decode_payload(frame[5], frame[HEADER_LEN:])


def wire_roundtrip(msg: Message) -> Message:
    """Encode then decode; applies the exact float32 quantization of a hop."""
    return decode_message(encode_message(msg))


# --- connections -------------------------------------------------------------

class TransportClosed(ConnectionError):
    """Peer went away mid-frame or mid-stream."""


class Connection:
    """One framed message stream over a connected socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock

    def send(self, msg: Message) -> None:
        self.sock.sendall(encode_message(msg))

    def recv(self) -> Message | None:
        """Next message, or None on a clean close at a frame boundary."""
        header = self._recv_exact(HEADER_LEN, allow_eof=True)
        if header is None:
            return None
        if header[:4] != MAGIC:
            raise ProtocolError(ERR_BAD_MAGIC, header[:4].hex())
        if header[4] != PROTOCOL_VERSION:
            raise ProtocolError(ERR_BAD_VERSION, f"version byte {header[4]}")
        payload_len = int.from_bytes(header[6:10], "big")
        if payload_len > MAX_PAYLOAD:
            raise ProtocolError(ERR_OVERSIZED, f"declared {payload_len} bytes")
        payload = self._recv_exact(payload_len) if payload_len else b""
        return _decode_payload(header[5], payload)

    def _recv_exact(self, n: int, allow_eof: bool = False) -> bytes | None:
        chunks = []
        got = 0
        while got < n:
            chunk = self.sock.recv(min(n - got, 1 << 16))
            if not chunk:
                if allow_eof and got == 0:
                    return None
                raise TransportClosed(f"peer closed after {got} of {n} bytes")
            chunks.append(chunk)
            got += len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()

    def __enter__(self) -> "Connection":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def loopback_pair() -> tuple[Connection, Connection]:
    """In-process connected pair, same framing code path as TCP."""
    a, b = socket.socketpair()
    return Connection(a), Connection(b)


def open_listener(host: str, port: int) -> socket.socket:
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(1)
    return srv


def accept_connection(listener: socket.socket, timeout: float = 30.0) -> Connection:
    listener.settimeout(timeout)
    sock, _addr = listener.accept()
    sock.settimeout(timeout)
    return Connection(sock)


def connect_with_retry(host: str, port: int, timeout: float = 30.0,
                       interval: float = 0.05) -> Connection:
    """Dial until the listener is up or the deadline passes."""
    deadline = time.monotonic() + timeout
    while True:
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
            sock.settimeout(timeout)
            return Connection(sock)
        except OSError:
            if time.monotonic() >= deadline:
                raise
            time.sleep(interval)


# --- session harness ----------------------------------------------------------

@dataclass
class SessionOutcome:
    role: str
    config: Config | None = None
    messages: int = 0
    last_index: int | None = None
    eos_seen: bool = False


def _abort(conn: Connection, exc: ProtocolError) -> None:
    """Best-effort ERROR frame to the peer before giving up."""
    try:
        conn.send(ErrorMessage(code=exc.code, detail=str(exc)))
    except OSError:
        pass
    conn.close()


def _checked_recv(conn: Connection, outcome: SessionOutcome) -> Message:
    try:
        msg = conn.recv()
    except ProtocolError as exc:
        _abort(conn, exc)
        raise
    if msg is None:
        raise TransportClosed(
            f"peer closed mid-session, last acknowledged segment "
            f"{outcome.last_index}"
        )
    if isinstance(msg, ErrorMessage):
        conn.close()
        raise ProtocolError(ERR_APPLICATION,
                            f"peer error {msg.code}: {msg.detail}")
    return msg


def _expect(conn: Connection, kind, outcome: SessionOutcome) -> Message:
    msg = _checked_recv(conn, outcome)
    if not isinstance(msg, kind):
        exc = ProtocolError(
            ERR_MALFORMED,
            f"expected {kind.__name__}, got {type(msg).__name__}",
        )
        _abort(conn, exc)
        raise exc
    return msg


def _verify_hello(conn: Connection, hello: Hello, codec_hash: int) -> None:
    if hello.version != PROTOCOL_VERSION:
        exc = ProtocolError(ERR_BAD_VERSION,
                            f"peer speaks version {hello.version}")
        _abort(conn, exc)
        raise exc
    if hello.codec_hash != codec_hash:
        exc = ProtocolError(
            ERR_CONFIG_MISMATCH,
            f"peer codec hash {hello.codec_hash:#x} != local {codec_hash:#x}",
        )
        _abort(conn, exc)
        raise exc


def _check_order(msg: Message, outcome: SessionOutcome, conn: Connection) -> None:
    """Metas must arrive gapless; payloads must match their meta's index."""
    expected = 0 if outcome.last_index is None else outcome.last_index + 1
    if isinstance(msg, SegmentMeta):
        if msg.index != expected:
            exc = ProtocolError(
                ERR_ORDERING,
                f"segment meta {msg.index} arrived, expected {expected}",
            )
            _abort(conn, exc)
            raise exc
        outcome.last_index = msg.index
    elif isinstance(msg, (UploadFeatures, LinkSymbols, DownloadFeatures)):
        if msg.index != outcome.last_index:
            exc = ProtocolError(
                ERR_ORDERING,
                f"payload for segment {msg.index} outside meta "
                f"{outcome.last_index}",
            )
            _abort(conn, exc)
            raise exc


def run_endpoint(
    role: str,
    handler=None,
    producer=None,
    listen=None,
    connect=None,
    config: Config | None = None,
    codec_hash: int = 0,
    timeout: float = 30.0,
    ready_callback=None,
    on_config=None,
) -> SessionOutcome:
    """Run one node of the chain: handshake, then pump or produce.

    Downstream nodes pass ``connect`` (their upstream's address) and get the
    session Config from the handshake; the origin passes ``config`` instead.
    Nodes with a ``listen`` address accept exactly one downstream peer and
    forward the Config to it. ``producer(send)`` drives the origin;
    ``handler(msg, send)`` sees every inbound message (EOS included) and does
    its own forwarding via ``send`` (None on the terminal node).
    ``on_config`` fires once the session Config is settled, before any
    segment traffic.
    """
    if role not in ROLES:
        raise ProtocolError(ERR_MALFORMED, f"unknown role {role!r}")
    if connect is None and config is None:
        raise ProtocolError(ERR_CONFIG_MISMATCH,
                            "origin endpoint needs an explicit config")
    outcome = SessionOutcome(role=role, config=config)
    listener = None
    if listen is not None:
        listener = open_listener(*listen)
        if ready_callback is not None:
            ready_callback(listener.getsockname())

    up = down = None
    try:
        if connect is not None:
            up = connect_with_retry(connect[0], connect[1], timeout=timeout)
            up.send(Hello(role=role, codec_hash=codec_hash))
            hello = _expect(up, Hello, outcome)
            _verify_hello(up, hello, codec_hash)
            outcome.config = _expect(up, Config, outcome)
        if listener is not None:
            down = accept_connection(listener, timeout=timeout)
            hello = _expect(down, Hello, outcome)
            _verify_hello(down, hello, codec_hash)
            down.send(Hello(role=role, codec_hash=codec_hash))
            down.send(outcome.config)
        if on_config is not None:
            on_config(outcome.config)

        send = down.send if down is not None else None
        if producer is not None:
            producer(send)
        if up is not None:
            while True:
                msg = _checked_recv(up, outcome)
                _check_order(msg, outcome, up)
                outcome.messages += 1
                if handler is not None:
                    handler(msg, send)
                if isinstance(msg, Eos):
                    outcome.eos_seen = True
                    break
        return outcome
    finally:
        if listener is not None:
            listener.close()
        if up is not None:
            up.close()
        if down is not None:
            down.close()
