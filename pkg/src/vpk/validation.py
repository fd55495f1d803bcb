"""Input validation and determinism helpers shared across modules."""

import hashlib
import json

import numpy as np

from .errors import DimMismatch, NonFinite, WrongDtype, WrongRank

SEED_MAX = 2 ** 64


def check_seed(seed):
    """Validate a seed and return it as a plain int in [0, 2**64)."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed < SEED_MAX:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return seed


def rng_from_seed(seed):
    """Build the toolkit's canonical generator for a validated seed."""
    return np.random.default_rng(check_seed(seed))


def derive_seed(seed, *parts):
    """Derive a child seed from a parent seed and a label path.

    Uses a keyed hash rather than Python's builtin ``hash`` so the result
    is stable across processes and interpreter runs.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(check_seed(seed).to_bytes(8, "little"))
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def check_feature_array(x, name="features", allow_empty=False):
    """Validate a (frames, dims) float array and return it as float32 C-order."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise WrongRank(f"{name} must be 2-D (frames, dims), got ndim={x.ndim}")
    if not np.issubdtype(x.dtype, np.floating):
        raise WrongDtype(f"{name} must be floating point, got {x.dtype}")
    if not allow_empty and x.shape[0] == 0:
        raise WrongRank(f"{name} has no frames")
    if x.size and not np.all(np.isfinite(x)):
        raise NonFinite(f"{name} contains NaN or infinity")
    return np.ascontiguousarray(x, dtype=np.float32)


def check_same_dims(a, b, name_a="a", name_b="b"):
    if a.shape[1] != b.shape[1]:
        raise DimMismatch(
            f"{name_a} has {a.shape[1]} dims but {name_b} has {b.shape[1]}"
        )


def sha256_hex(data):
    """64-char hex digest of raw bytes."""
    return hashlib.sha256(data).hexdigest()


def canonical_json_bytes(obj):
    """Serialize a JSON-safe object with a stable key order and spacing."""
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=2).encode(
        "utf-8"
    )
