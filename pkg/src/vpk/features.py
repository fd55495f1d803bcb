"""Per-utterance feature matrices and their on-disk array format.

A feature file is the standard binary array format whose header starts
with the magic bytes \\x93NUMPY (version 1.0, little-endian float32,
C-order, shape (T, D)). A sidecar `<name>.meta.json` next to the file
carries {"frame_rate_hz": <number>}; when absent, 100 Hz is assumed.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagic, CorruptHeader, IoFailure, NonFinite, WrongDtype, WrongRank

DEFAULT_FRAME_RATE_HZ = 100.0

_MAGIC = b"\x93NUMPY"


@dataclass(frozen=True)
class FeatureSequence:
    """T x D float32 frame matrix; frame i covers [i/rate, (i+1)/rate)."""

    frames: np.ndarray
    frame_rate_hz: float = DEFAULT_FRAME_RATE_HZ
    utterance_id: str = ""

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 2:
            raise WrongRank(f"frames must be 2-D, got ndim={frames.ndim}")
        if frames.shape[0] < 1 or frames.shape[1] < 1:
            raise WrongRank(f"frames must be at least 1x1, got shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise NonFinite("frames contain NaN or infinity")
        if not self.frame_rate_hz > 0:
            raise ValueError(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
        frames = np.ascontiguousarray(frames, dtype=np.float32)
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self):
        return int(self.frames.shape[0])

    @property
    def dim(self):
        return int(self.frames.shape[1])


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".meta.json")


def read_features(path) -> FeatureSequence:
    path = Path(path)
    try:
        with path.open("rb") as f:
            head = f.read(len(_MAGIC))
    except OSError as e:
        raise IoFailure(f"cannot open {path}: {e}") from e
    if head != _MAGIC:
        raise BadMagic(f"{path} does not start with the array-format magic bytes")
    try:
        arr = np.load(path, allow_pickle=False)
    except (ValueError, OSError) as e:
        raise CorruptHeader(f"{path}: unreadable array header: {e}") from e
    if arr.ndim != 2:
        raise WrongRank(f"{path}: expected a 2-D array, got ndim={arr.ndim}")
    if arr.dtype != np.dtype("<f4"):
        raise WrongDtype(f"{path}: expected little-endian float32, got {arr.dtype}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{path}: array contains NaN or infinity")

    rate = DEFAULT_FRAME_RATE_HZ
    sidecar = sidecar_path(path)
    if sidecar.exists():
        meta = json.loads(sidecar.read_text("utf-8"))
        rate = float(meta["frame_rate_hz"])
    return FeatureSequence(frames=arr, frame_rate_hz=rate, utterance_id=path.stem)


def write_features(fs: FeatureSequence, path):
    """Write the matrix and its frame-rate sidecar; inverse of read_features."""
    path = Path(path)
    try:
        with path.open("wb") as f:
            np.save(f, np.ascontiguousarray(fs.frames, dtype="<f4"))
        sidecar_path(path).write_text(
            json.dumps({"frame_rate_hz": fs.frame_rate_hz}) + "\n", "utf-8"
        )
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
