"""
The wire format, byte by byte
=============================

Every hop between the four roles speaks length-prefixed binary frames:
a 4-byte magic, a version, a message type, and a payload length, then
the payload. Tensors travel as little-endian float32 with explicit
dims, so a frame is decodable with nothing but this module.
"""

import numpy as np

from semstream.transport import (Eos, SegmentMeta, UploadFeatures,
                                 decode_message, encode_message, ProtocolError)

meta = SegmentMeta(index=0, n_samples=12000, sample_rate=16000,
                   capture_start=0.0, slope=1.25, silent=False,
                   transmitted=True)
frame = encode_message(meta)
print(f"SegmentMeta frame, {len(frame)} bytes:")
print("  header:", frame[:10].hex(" "))
print("  payload:", frame[10:].hex(" "))
print("  decoded:", decode_message(frame), "\n")

rng = np.random.default_rng(3)
upload = UploadFeatures(index=0,
                        data=rng.standard_normal((38, 8)).astype("<f4")
                        .astype(np.float64),
                        frame_len=320, n_samples=12000, sample_rate=16000)
wire = encode_message(upload)
raw_bytes = upload.n_samples * 4
print(f"UploadFeatures: {upload.data.shape} floats -> {len(wire)} wire bytes "
      f"(raw float32 audio would be {raw_bytes})")
print(f"roundtrip exact: "
      f"{np.array_equal(decode_message(wire).data, upload.data)}\n")

print("end-of-stream frame:", encode_message(Eos()).hex(" "), "\n")

# a decoder never trusts the peer: garbage raises a typed error, not a crash
for blob, label in ((b"JUNK" + frame[4:], "bad magic"),
                    (frame[:-3], "truncated payload"),
                    (frame + b"\x00", "trailing bytes")):
    try:
        decode_message(blob)
    except ProtocolError as exc:
        print(f"{label}: rejected with code {exc.code} ({exc})")
