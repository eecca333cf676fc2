"""Wire format, framed connections, and the session harness."""

import queue
import socket
import threading

import numpy as np
import pytest

from semstream.transport import (
    Config,
    Connection,
    DownloadFeatures,
    Eos,
    ErrorMessage,
    HEADER_LEN,
    Hello,
    LinkSymbols,
    MAGIC,
    MAX_PAYLOAD,
    MsgType,
    ProtocolError,
    ROLES,
    SegmentMeta,
    TransportClosed,
    UploadFeatures,
    decode_message,
    encode_message,
    loopback_pair,
    run_endpoint,
    wire_roundtrip,
    ERR_BAD_MAGIC,
    ERR_BAD_VERSION,
    ERR_DIM_MISMATCH,
    ERR_MALFORMED,
    ERR_ORDERING,
    ERR_OVERSIZED,
    ERR_TRUNCATED,
    ERR_UNKNOWN_TYPE,
)

CONFIG = Config(codec_hash=7, feature_dim=8, sample_rate=16000,
                channel_kind="clean", snr_db=0.0, equalize=False,
                channel_seed=0)


def f4(a):
    """Round to the exact binary32 grid the wire uses."""
    return np.asarray(a, dtype="<f4").astype(np.float64)


def make_meta(index, transmitted=True):
    return SegmentMeta(index=index, n_samples=320, sample_rate=16000,
                       capture_start=0.02 * index, slope=0.125, silent=False,
                       transmitted=transmitted)


def make_upload(index, shape=(2, 8), seed=0):
    rng = np.random.default_rng(seed + index)
    return UploadFeatures(index=index, data=f4(rng.standard_normal(shape)),
                          frame_len=320, n_samples=320 * shape[0],
                          sample_rate=16000)


# --- framing -----------------------------------------------------------------

def test_eos_frame_bytes():
    # magic, version 1, type 7, zero-length payload in big-endian
    assert encode_message(Eos()) == b"LSSC\x01\x07\x00\x00\x00\x00"
    assert len(encode_message(Eos())) == HEADER_LEN


def test_encoding_deterministic():
    msg = make_upload(3)
    assert encode_message(msg) == encode_message(msg)


def test_distinct_messages_distinct_frames():
    frames = set()
    n = 0
    for i in range(600):
        for msg in (make_meta(i), make_upload(i),
                    DownloadFeatures(index=i, data=f4([[float(i)]]),
                                     frame_len=320, n_samples=64,
                                     sample_rate=16000)):
            frames.add(encode_message(msg))
            n += 1
    assert len(frames) == n


@pytest.mark.parametrize("role", ROLES)
def test_hello_roundtrip(role):
    msg = Hello(role=role, codec_hash=0xDEADBEEF12345678)
    assert wire_roundtrip(msg) == msg


def test_config_roundtrip():
    cfg = Config(codec_hash=99, feature_dim=64, sample_rate=8000,
                 channel_kind="rayleigh", snr_db=-3.5, equalize=True,
                 channel_seed=2**40)
    assert wire_roundtrip(cfg) == cfg


def test_upload_roundtrip():
    msg = make_upload(11, shape=(5, 64))
    back = wire_roundtrip(msg)
    assert (back.index, back.frame_len, back.n_samples, back.sample_rate) == (
        msg.index, msg.frame_len, msg.n_samples, msg.sample_rate)
    np.testing.assert_array_equal(back.data, msg.data)


def test_link_symbols_roundtrip():
    rng = np.random.default_rng(5)
    msg = LinkSymbols(index=4, re=f4(rng.standard_normal(16)),
                      im=f4(rng.standard_normal(16)),
                      power_scale=0.7071067811865476, pad_flag=True)
    back = wire_roundtrip(msg)
    np.testing.assert_array_equal(back.re, msg.re)
    np.testing.assert_array_equal(back.im, msg.im)
    assert back.power_scale == msg.power_scale
    assert back.pad_flag is True


def test_segment_meta_roundtrip():
    msg = SegmentMeta(index=9, n_samples=12800, sample_rate=16000,
                      capture_start=7.25, slope=-0.9921875, silent=True,
                      transmitted=False, fade_event=True)
    assert wire_roundtrip(msg) == msg


def test_error_roundtrip_utf8():
    msg = ErrorMessage(code=513, detail="übertragung kaputt")
    assert wire_roundtrip(msg) == msg


def test_empty_feature_payload_roundtrip():
    msg = UploadFeatures(index=0, data=np.zeros((0, 8)), frame_len=320,
                         n_samples=0, sample_rate=16000)
    back = wire_roundtrip(msg)
    assert back.data.shape == (0, 8)


# --- decode defects ----------------------------------------------------------

def expect_code(frame, code):
    with pytest.raises(ProtocolError) as ei:
        decode_message(frame)
    assert ei.value.code == code


def test_bad_magic():
    frame = bytearray(encode_message(Eos()))
    frame[0] ^= 0xFF
    expect_code(bytes(frame), ERR_BAD_MAGIC)


def test_bad_version():
    frame = bytearray(encode_message(Eos()))
    frame[4] = 2
    expect_code(bytes(frame), ERR_BAD_VERSION)


def test_unknown_type_byte():
    frame = bytearray(encode_message(Eos()))
    frame[5] = 0x2A
    expect_code(bytes(frame), ERR_UNKNOWN_TYPE)


def test_short_header():
    expect_code(b"LSSC\x01\x07", ERR_TRUNCATED)


def test_truncated_payload():
    frame = encode_message(make_upload(0))
    expect_code(frame[:-3], ERR_TRUNCATED)


def test_trailing_garbage():
    expect_code(encode_message(Eos()) + b"x", ERR_MALFORMED)


def test_declared_payload_too_large():
    head = MAGIC + bytes([1, int(MsgType.EOS)]) + (MAX_PAYLOAD + 1).to_bytes(4, "big")
    expect_code(head, ERR_OVERSIZED)


def test_oversized_payload_refused_on_encode():
    big = UploadFeatures(index=0, data=np.zeros((1, 17 * 2**20)), frame_len=320,
                         n_samples=320, sample_rate=16000)
    with pytest.raises(ProtocolError) as ei:
        encode_message(big)
    assert ei.value.code == ERR_OVERSIZED


def test_feature_tensor_must_be_rank_two():
    payload = bytearray()
    payload += (0).to_bytes(4, "little") * 4   # index, frame_len, n, rate
    payload += bytes([1]) + (4).to_bytes(4, "little")  # rank-1 tensor of 4
    payload += np.zeros(4, dtype="<f4").tobytes()
    head = MAGIC + bytes([1, int(MsgType.UPLOAD_FEATURES)])
    head += len(payload).to_bytes(4, "big")
    expect_code(head + bytes(payload), ERR_DIM_MISMATCH)


def test_tensor_dims_exceed_payload():
    payload = bytearray()
    payload += (0).to_bytes(4, "little") * 4
    payload += bytes([2])
    payload += (1000).to_bytes(4, "little") + (1000).to_bytes(4, "little")
    payload += bytes(16)  # far short of the promised 4e6 data bytes
    head = MAGIC + bytes([1, int(MsgType.UPLOAD_FEATURES)])
    head += len(payload).to_bytes(4, "big")
    expect_code(head + bytes(payload), ERR_DIM_MISMATCH)


def test_flag_byte_must_be_binary():
    frame = bytearray(encode_message(make_meta(0)))
    # silent flag sits after index/n/rate words and two f64 fields
    frame[HEADER_LEN + 28] = 2
    expect_code(bytes(frame), ERR_MALFORMED)


def test_error_detail_must_be_utf8():
    payload = (5).to_bytes(2, "little") + (2).to_bytes(4, "little") + b"\xff\xfe"
    head = MAGIC + bytes([1, int(MsgType.ERROR)]) + len(payload).to_bytes(4, "big")
    expect_code(head + payload, ERR_MALFORMED)


def test_encode_rejects_unknown_role():
    with pytest.raises(ProtocolError) as ei:
        encode_message(Hello(role="relay"))
    assert ei.value.code == ERR_MALFORMED


def test_encode_rejects_mismatched_symbol_arrays():
    msg = LinkSymbols(index=0, re=np.zeros(4), im=np.zeros(5),
                      power_scale=1.0, pad_flag=False)
    with pytest.raises(ProtocolError) as ei:
        encode_message(msg)
    assert ei.value.code == ERR_DIM_MISMATCH


def test_fuzz_decoder_never_crashes():
    """Random bytes and mutated real frames: ProtocolError or a clean parse."""
    rng = np.random.default_rng(1234)
    seeds = [encode_message(m) for m in
             (Eos(), make_meta(1), make_upload(2, shape=(3, 16)), CONFIG,
              Hello(role="edge_b", codec_hash=5),
              ErrorMessage(code=3, detail="x"))]
    for trial in range(10_000):
        if trial % 2 == 0:
            n = int(rng.integers(0, 80))
            blob = rng.integers(0, 256, size=n, dtype=np.uint8).tobytes()
        else:
            blob = bytearray(seeds[trial % len(seeds)])
            op = trial % 3
            if op == 0 and blob:
                blob[int(rng.integers(len(blob)))] ^= int(rng.integers(1, 256))
            elif op == 1:
                blob = blob[: int(rng.integers(len(blob) + 1))]
            else:
                blob += rng.integers(0, 256, size=3, dtype=np.uint8).tobytes()
            blob = bytes(blob)
        try:
            decode_message(blob)
        except ProtocolError:
            pass


# --- size accounting ---------------------------------------------------------

def test_compressed_upload_smaller_than_raw_audio():
    """A kept-64 upload beats both raw float samples and a full-rank upload."""
    rng = np.random.default_rng(8)
    for _ in range(50):
        n_samples = int(rng.integers(320, 16001))
        frames = -(-n_samples // 320)
        lossy = make_upload(0, shape=(frames, 64))
        full = UploadFeatures(index=0, data=f4(rng.standard_normal((frames, 320))),
                              frame_len=320, n_samples=n_samples,
                              sample_rate=16000)
        wire_lossy = len(encode_message(lossy))
        assert wire_lossy < 4 * n_samples
        assert wire_lossy < len(encode_message(full))


# --- connections -------------------------------------------------------------

def test_loopback_roundtrip():
    a, b = loopback_pair()
    try:
        msg = make_upload(5, shape=(4, 32))
        a.send(msg)
        got = b.recv()
        np.testing.assert_array_equal(got.data, msg.data)
    finally:
        a.close()
        b.close()


def test_clean_close_yields_none():
    a, b = loopback_pair()
    a.send(Eos())
    a.close()
    assert isinstance(b.recv(), Eos)
    assert b.recv() is None
    b.close()


def test_midframe_close_raises():
    a, b = loopback_pair()
    frame = encode_message(make_meta(0))
    a.sock.sendall(frame[:7])
    a.close()
    with pytest.raises(TransportClosed):
        b.recv()
    b.close()


def test_fragmented_delivery_reassembles():
    a, b = loopback_pair()
    try:
        frame = encode_message(make_upload(8, shape=(3, 16)))
        for i in range(0, len(frame), 5):
            a.sock.sendall(frame[i : i + 5])
        got = b.recv()
        assert got.index == 8
    finally:
        a.close()
        b.close()


# --- session harness -----------------------------------------------------------

def spawn(fn, /, *args, **kwargs):
    box = {}

    def target():
        try:
            box["result"] = fn(*args, **kwargs)
        except BaseException as exc:
            box["error"] = exc

    t = threading.Thread(target=target, daemon=True)
    t.start()
    return t, box


def start_origin(producer, codec_hash=7, config=CONFIG):
    addr_box = queue.Queue()
    t, box = spawn(run_endpoint, "device_tx", producer=producer,
                   listen=("127.0.0.1", 0), config=config,
                   codec_hash=codec_hash, ready_callback=addr_box.put,
                   timeout=10.0)
    return t, box, addr_box.get(timeout=5)


def test_session_delivers_everything_in_order():
    def producer(send):
        for i in range(100):
            send(make_meta(i))
            send(make_upload(i))
        send(Eos())

    got = []
    t_o, box_o, addr = start_origin(producer)
    t_d, box_d = spawn(run_endpoint, "edge_a",
                       handler=lambda msg, send: got.append(msg),
                       connect=addr, codec_hash=7, timeout=10.0)
    t_o.join(10)
    t_d.join(10)
    assert "error" not in box_o and "error" not in box_d
    outcome = box_d["result"]
    assert outcome.eos_seen
    assert outcome.last_index == 99
    assert outcome.messages == 201
    assert outcome.config == CONFIG
    indices = [m.index for m in got if isinstance(m, SegmentMeta)]
    assert indices == list(range(100))


def test_config_forwarded_through_middle_node():
    def producer(send):
        send(make_meta(0))
        send(Eos())

    def relay(msg, send):
        send(msg)

    t_o, box_o, addr_o = start_origin(producer)
    mid_box = queue.Queue()
    t_m, box_m = spawn(run_endpoint, "edge_a", handler=relay,
                       connect=addr_o, listen=("127.0.0.1", 0), codec_hash=7,
                       ready_callback=mid_box.put, timeout=10.0)
    addr_m = mid_box.get(timeout=5)
    t_d, box_d = spawn(run_endpoint, "edge_b",
                       handler=lambda msg, send: None,
                       connect=addr_m, codec_hash=7, timeout=10.0)
    for t in (t_o, t_m, t_d):
        t.join(10)
    assert "error" not in box_m and "error" not in box_d
    assert box_d["result"].config == CONFIG
    assert box_d["result"].eos_seen


def test_version_mismatch_gets_error_frame():
    t, box, addr = start_origin(lambda send: None)
    conn = Connection(socket.create_connection(addr, timeout=5))
    conn.send(Hello(role="edge_a", codec_hash=7, version=2))
    reply = conn.recv()
    conn.close()
    t.join(5)
    assert isinstance(reply, ErrorMessage)
    assert reply.code == ERR_BAD_VERSION
    assert isinstance(box.get("error"), ProtocolError)
    assert box["error"].code == ERR_BAD_VERSION


def test_codec_hash_mismatch_rejected_on_both_sides():
    t_o, box_o, addr = start_origin(lambda send: None, codec_hash=1)
    t_d, box_d = spawn(run_endpoint, "edge_a",
                       handler=lambda msg, send: None,
                       connect=addr, codec_hash=2, timeout=10.0)
    t_o.join(10)
    t_d.join(10)
    assert isinstance(box_o.get("error"), ProtocolError)
    assert isinstance(box_d.get("error"), ProtocolError)
    assert "mismatch" in str(box_d["error"])


def test_meta_index_gap_detected():
    def producer(send):
        send(make_meta(0))
        send(make_meta(2))
        send(Eos())

    t_o, box_o, addr = start_origin(producer)
    t_d, box_d = spawn(run_endpoint, "edge_a",
                       handler=lambda msg, send: None,
                       connect=addr, codec_hash=7, timeout=10.0)
    t_o.join(10)
    t_d.join(10)
    err = box_d.get("error")
    assert isinstance(err, ProtocolError)
    assert err.code == ERR_ORDERING


def test_payload_outside_its_meta_detected():
    def producer(send):
        send(make_meta(0))
        send(make_upload(5))
        send(Eos())

    t_o, box_o, addr = start_origin(producer)
    t_d, box_d = spawn(run_endpoint, "edge_a",
                       handler=lambda msg, send: None,
                       connect=addr, codec_hash=7, timeout=10.0)
    t_o.join(10)
    t_d.join(10)
    err = box_d.get("error")
    assert isinstance(err, ProtocolError)
    assert err.code == ERR_ORDERING


def test_connection_loss_names_last_segment():
    def producer(send):
        for i in range(3):
            send(make_meta(i))
        # drop without EOS; run_endpoint closes the socket on the way out

    t_o, box_o, addr = start_origin(producer)
    t_d, box_d = spawn(run_endpoint, "edge_a",
                       handler=lambda msg, send: None,
                       connect=addr, codec_hash=7, timeout=10.0)
    t_o.join(10)
    t_d.join(10)
    err = box_d.get("error")
    assert isinstance(err, TransportClosed)
    assert "2" in str(err)
