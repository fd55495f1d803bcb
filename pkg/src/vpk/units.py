"""Discrete unit sequences and their text serialization.

One line per utterance: `<utterance_id> <u0> <u1> ...`.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptySequence, IoFailure, VpkError


@dataclass(frozen=True)
class UnitSequence:
    units: np.ndarray
    k: int
    utterance_id: str = ""
    deduplicated: bool = False

    def __post_init__(self):
        units = np.asarray(self.units, dtype=np.int64).reshape(-1)
        if self.k < 1:
            raise VpkError(f"k must be >= 1, got {self.k}")
        if units.size and (units.min() < 0 or units.max() >= self.k):
            raise VpkError(f"unit ids must lie in [0, {self.k})")
        if self.deduplicated and units.size > 1 and np.any(units[1:] == units[:-1]):
            raise VpkError("sequence flagged deduplicated has consecutive repeats")
        units.flags.writeable = False
        object.__setattr__(self, "units", units)

    def __len__(self):
        return int(self.units.shape[0])


def dedup_units(units) -> np.ndarray:
    """Collapse consecutive repeats, keeping one unit per run."""
    units = np.asarray(units, dtype=np.int64).reshape(-1)
    if units.size <= 1:
        return units.copy()
    keep = np.empty(units.size, dtype=bool)
    keep[0] = True
    keep[1:] = units[1:] != units[:-1]
    return units[keep]


def write_units(sequences, path):
    try:
        with Path(path).open("w", encoding="utf-8") as f:
            for us in sequences:
                f.write(us.utterance_id)
                for u in us.units.tolist():
                    f.write(f" {u}")
                f.write("\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def read_units(path, k, deduplicated=False):
    """Parse a unit file into UnitSequences, preserving line order."""
    out = []
    try:
        text = Path(path).read_text("utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    for line in text.splitlines():
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) < 2:
            raise EmptySequence(f"unit line for {fields[0]!r} has no units")
        out.append(
            UnitSequence(
                units=np.array([int(t) for t in fields[1:]], dtype=np.int64),
                k=k,
                utterance_id=fields[0],
                deduplicated=deduplicated,
            )
        )
    return out
