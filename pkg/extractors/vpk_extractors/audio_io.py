"""RIFF wav reading and writing for 16 kHz mono files.

The toolkit this feeds consumes PCM16 or IEEE-float32 payloads, so both
are supported here; anything else fails loudly rather than resampling.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import AudioDecodeFailure, ExtractorError

RATE = 16000


def read_wav(path):
    """Samples as float64 in [-1, 1]; rejects non-mono and non-16 kHz."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise AudioDecodeFailure(f"cannot open {path}: {e}") from e
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioDecodeFailure(f"{path} is not a RIFF/WAVE file")
    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if cid == b"fmt " and len(body) >= 16:
            fmt = struct.unpack_from("<HHIIHH", body)
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)
    if fmt is None or payload is None:
        raise AudioDecodeFailure(f"{path}: missing fmt or data chunk")
    codec, channels, rate, _, _, bits = fmt
    if channels != 1:
        raise AudioDecodeFailure(f"{path}: expected mono, got {channels} channels")
    if rate != RATE:
        raise AudioDecodeFailure(f"{path}: expected {RATE} Hz, got {rate}")
    if codec == 1 and bits == 16:
        return np.frombuffer(payload, "<i2").astype(np.float64) / 32768.0
    if codec == 3 and bits == 32:
        return np.frombuffer(payload, "<f4").astype(np.float64)
    raise AudioDecodeFailure(f"{path}: unsupported codec {codec}/{bits}-bit")


def write_wav(samples, path, encoding="float32"):
    x = np.asarray(samples, np.float64)
    if x.ndim != 1:
        raise ExtractorError("samples must be one-dimensional")
    if encoding == "pcm16":
        q = np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")
        payload, codec, bits = q.tobytes(), 1, 16
    elif encoding == "float32":
        payload, codec, bits = x.astype("<f4").tobytes(), 3, 32
    else:
        raise ExtractorError(f"unknown encoding {encoding!r}")
    block = bits // 8
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, codec, 1, RATE, RATE * block, block, bits
    )
    header += b"data" + struct.pack("<I", len(payload))
    Path(path).write_bytes(header + payload)
