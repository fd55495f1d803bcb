"""Feature-file writing in the consumer toolkit's format.

Each utterance becomes <id>.npy (float32, shape (T, D), npy v1.0 via
numpy) plus a <id>.meta.json sidecar recording the true frame rate.
"""

import json
from pathlib import Path

import numpy as np


def write_features(frames, frame_rate_hz, path):
    path = Path(path)
    arr = np.ascontiguousarray(frames, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"expected (T, D) frames, got shape {arr.shape}")
    with path.open("wb") as f:
        np.save(f, arr)
    path.with_suffix(".meta.json").write_text(
        json.dumps({"frame_rate_hz": float(frame_rate_hz)}) + "\n", "utf-8"
    )
    return path
