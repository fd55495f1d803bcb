"""Manifest rows as plain dicts; paths resolved against the manifest dir."""

import json
from pathlib import Path

from .errors import ExtractorError


def load_rows(path):
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as e:
        raise ExtractorError(f"cannot read manifest {path}: {e}") from e
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ExtractorError(f"{path} line {lineno}: not valid JSON: {e}") from e
        if "utterance_id" not in obj:
            raise ExtractorError(f"{path} line {lineno}: missing utterance_id")
        rows.append(obj)
    if not rows:
        raise ExtractorError(f"{path}: empty manifest")
    return rows


def resolve(base_dir, rel):
    p = Path(rel)
    return p if p.is_absolute() else Path(base_dir) / p
