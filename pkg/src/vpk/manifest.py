"""Corpus manifests: JSON-lines listings that drive every stage.

Each line is one object with fields utterance_id, speaker_id, duration_s
(required) plus audio, features, transcript, labels (optional). Relative
paths resolve against the manifest's own directory. Iteration order is
the file's line order; downstream determinism relies on it.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DuplicateId, IoFailure, MissingField, UnresolvablePath

_REQUIRED = ("utterance_id", "speaker_id", "duration_s")


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    speaker_id: str
    duration_s: float
    audio: str = None
    features: str = None
    transcript: str = None
    labels: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple
    path: str = None

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, utterance_id) -> ManifestEntry:
        return self._by_id[utterance_id]

    def __contains__(self, utterance_id):
        return utterance_id in self._by_id

    def __post_init__(self):
        by_id = {}
        for e in self.entries:
            if e.utterance_id in by_id:
                raise DuplicateId(f"duplicate utterance_id {e.utterance_id!r}")
            by_id[e.utterance_id] = e
        object.__setattr__(self, "_by_id", by_id)

    def speakers(self):
        return sorted({e.speaker_id for e in self.entries})


def _entry_from_obj(obj, base: Path, lineno: int) -> ManifestEntry:
    for key in _REQUIRED:
        if key not in obj:
            raise MissingField(f"line {lineno}: missing required field {key!r}")
    paths = {}
    for key in ("audio", "features"):
        value = obj.get(key)
        if value is None:
            paths[key] = None
            continue
        resolved = Path(value)
        if not resolved.is_absolute():
            resolved = base / resolved
        if not resolved.exists():
            raise UnresolvablePath(
                f"line {lineno}: {key} path {value!r} does not exist"
            )
        paths[key] = str(resolved)
    labels = obj.get("labels") or {}
    if not isinstance(labels, dict):
        raise MissingField(f"line {lineno}: labels must be an object")
    known = {"utterance_id", "speaker_id", "duration_s", "audio", "features",
             "transcript", "labels"}
    return ManifestEntry(
        utterance_id=str(obj["utterance_id"]),
        speaker_id=str(obj["speaker_id"]),
        duration_s=float(obj["duration_s"]),
        audio=paths["audio"],
        features=paths["features"],
        transcript=obj.get("transcript"),
        labels={str(k): str(v) for k, v in labels.items()},
        extra={k: v for k, v in obj.items() if k not in known},
    )


def load_manifest(path) -> CorpusManifest:
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MissingField(f"line {lineno}: not valid JSON: {e}") from e
        entries.append(_entry_from_obj(obj, path.parent, lineno))
    return CorpusManifest(entries=tuple(entries), path=str(path))


def save_manifest(entries, path):
    """Write entries as JSON-lines; paths are stored as given."""
    path = Path(path)
    lines = []
    for e in entries:
        obj = {
            "utterance_id": e.utterance_id,
            "speaker_id": e.speaker_id,
            "duration_s": e.duration_s,
        }
        if e.audio is not None:
            obj["audio"] = e.audio
        if e.features is not None:
            obj["features"] = e.features
        if e.transcript is not None:
            obj["transcript"] = e.transcript
        if e.labels:
            obj["labels"] = e.labels
        obj.update(e.extra)
        lines.append(json.dumps(obj, sort_keys=True))
    try:
        path.write_text("\n".join(lines) + ("\n" if lines else ""), "utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
