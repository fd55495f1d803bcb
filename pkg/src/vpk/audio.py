"""Mono 16 kHz audio buffers and RIFF/WAVE readers and writers.

Only the two codecs the toolkit emits or consumes are supported: 16-bit
PCM and 32-bit IEEE float. Everything else is rejected up front so format
problems surface at the file boundary, not inside a metric.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptHeader, IoFailure, NonFinite, UnsupportedFormat

SAMPLE_RATE_HZ = 16000

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


@dataclass(frozen=True)
class AudioBuffer:
    """Immutable mono float32 signal at the fixed toolkit sample rate."""

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE_HZ
    channels: int = 1

    def __post_init__(self):
        if self.sample_rate_hz != SAMPLE_RATE_HZ:
            raise UnsupportedFormat(
                f"sample rate must be {SAMPLE_RATE_HZ} Hz, got {self.sample_rate_hz}"
            )
        if self.channels != 1:
            raise UnsupportedFormat(f"audio must be mono, got {self.channels} channels")
        samples = np.asarray(self.samples, dtype=np.float32).reshape(-1)
        if samples.size and not np.all(np.isfinite(samples)):
            raise NonFinite("audio samples contain NaN or infinity")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return int(self.samples.shape[0])

    @property
    def duration_s(self):
        return len(self) / self.sample_rate_hz

    def rms(self):
        if len(self) == 0:
            return 0.0
        return float(np.sqrt(np.mean(np.square(self.samples, dtype=np.float64))))


def _read_exact(f, n, what):
    data = f.read(n)
    if len(data) != n:
        raise CorruptHeader(f"truncated file while reading {what}")
    return data


def read_wav(path) -> AudioBuffer:
    """Read a mono 16 kHz PCM16 or float32 WAV file.

    PCM16 samples are scaled by 1/32768 so the integer range maps into
    [-1, 1) exactly.
    """
    try:
        f = open(path, "rb")
    except OSError as e:
        raise IoFailure(f"cannot open {path}: {e}") from e
    with f:
        riff, _, wave = struct.unpack("<4sI4s", _read_exact(f, 12, "RIFF header"))
        if riff != b"RIFF" or wave != b"WAVE":
            raise CorruptHeader(f"{path} is not a RIFF/WAVE file")
        fmt = None
        data = None
        while True:
            chunk_hdr = f.read(8)
            if len(chunk_hdr) == 0:
                break
            if len(chunk_hdr) != 8:
                raise CorruptHeader("truncated chunk header")
            cid, size = struct.unpack("<4sI", chunk_hdr)
            if cid == b"fmt ":
                if size < 16:
                    raise CorruptHeader("fmt chunk too small")
                body = _read_exact(f, size, "fmt chunk")
                fmt = struct.unpack("<HHIIHH", body[:16])
            elif cid == b"data":
                data = _read_exact(f, size, "data chunk")
            else:
                f.seek(size + (size & 1), 1)
                continue
            if size & 1:
                f.seek(1, 1)
            if fmt is not None and data is not None:
                break
        if fmt is None or data is None:
            raise CorruptHeader(f"{path} is missing a fmt or data chunk")

    audio_format, channels, rate, _, block_align, bits = fmt
    if channels != 1:
        raise UnsupportedFormat(f"{path}: expected mono, got {channels} channels")
    if rate != SAMPLE_RATE_HZ:
        raise UnsupportedFormat(f"{path}: expected {SAMPLE_RATE_HZ} Hz, got {rate}")
    if audio_format == _FMT_PCM and bits == 16:
        raw = np.frombuffer(data[: len(data) - len(data) % 2], dtype="<i2")
        samples = raw.astype(np.float32) / np.float32(32768.0)
    elif audio_format == _FMT_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(data[: len(data) - len(data) % 4], dtype="<f4")
        samples = raw.astype(np.float32)
    else:
        raise UnsupportedFormat(
            f"{path}: unsupported codec (format={audio_format}, bits={bits})"
        )
    return AudioBuffer(samples=samples)


def write_wav(buffer: AudioBuffer, path, encoding="pcm16"):
    """Write a buffer as a mono 16 kHz WAV file.

    pcm16 clamps to [-1, 1] and quantizes as clip(round(32768*x), -32768,
    32767), the inverse of read_wav's scaling; float32 stores samples
    verbatim (used where quantization error is not acceptable).
    """
    x = buffer.samples
    if encoding == "pcm16":
        q = np.clip(np.rint(np.clip(x, -1.0, 1.0) * 32768.0), -32768, 32767)
        payload = q.astype("<i2").tobytes()
        audio_format, bits = _FMT_PCM, 16
    elif encoding == "float32":
        payload = x.astype("<f4").tobytes()
        audio_format, bits = _FMT_IEEE_FLOAT, 32
    else:
        raise ValueError(f"unknown encoding {encoding!r}")

    block_align = bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        audio_format,
        1,
        SAMPLE_RATE_HZ,
        SAMPLE_RATE_HZ * block_align,
        block_align,
        bits,
        b"data",
        len(payload),
    )
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(payload)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
