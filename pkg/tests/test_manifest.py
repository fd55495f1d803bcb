import json

import pytest

from vpk import (
    DuplicateId,
    MissingField,
    UnresolvablePath,
    load_manifest,
    save_manifest,
)


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r) + "\n")


def test_load_two_entries(tmp_path):
    p = tmp_path / "m.jsonl"
    write_jsonl(
        p,
        [
            {"utterance_id": "a", "speaker_id": "s1", "duration_s": 1.0},
            {"utterance_id": "b", "speaker_id": "s2", "duration_s": 2.0},
        ],
    )
    m = load_manifest(p)
    assert len(m) == 2
    assert [e.utterance_id for e in m] == ["a", "b"]
    assert m["b"].speaker_id == "s2"
    assert "a" in m and "zz" not in m
    assert m.speakers() == ["s1", "s2"]


def test_duplicate_id_rejected(tmp_path):
    p = tmp_path / "m.jsonl"
    write_jsonl(
        p,
        [
            {"utterance_id": "a", "speaker_id": "s1", "duration_s": 1.0},
            {"utterance_id": "a", "speaker_id": "s2", "duration_s": 2.0},
        ],
    )
    with pytest.raises(DuplicateId):
        load_manifest(p)


@pytest.mark.parametrize("missing", ["utterance_id", "speaker_id", "duration_s"])
def test_missing_required_field(tmp_path, missing):
    row = {"utterance_id": "a", "speaker_id": "s1", "duration_s": 1.0}
    del row[missing]
    p = tmp_path / "m.jsonl"
    write_jsonl(p, [row])
    with pytest.raises(MissingField):
        load_manifest(p)


def test_unresolvable_audio_path(tmp_path):
    p = tmp_path / "m.jsonl"
    write_jsonl(
        p,
        [{"utterance_id": "a", "speaker_id": "s1", "duration_s": 1.0, "audio": "gone.wav"}],
    )
    with pytest.raises(UnresolvablePath):
        load_manifest(p)


def test_relative_paths_resolve_against_manifest_dir(tmp_path):
    sub = tmp_path / "nested"
    sub.mkdir()
    (sub / "a.wav").write_bytes(b"x")
    p = sub / "m.jsonl"
    write_jsonl(
        p,
        [{"utterance_id": "a", "speaker_id": "s1", "duration_s": 1.0, "audio": "a.wav"}],
    )
    m = load_manifest(p)
    import os

    assert os.path.samefile(m["a"].audio, sub / "a.wav")


def test_labels_and_transcript_kept(tmp_path):
    p = tmp_path / "m.jsonl"
    write_jsonl(
        p,
        [
            {
                "utterance_id": "a",
                "speaker_id": "s1",
                "duration_s": 1.0,
                "transcript": "hello there",
                "labels": {"gender": "f", "age": "30s"},
            }
        ],
    )
    e = load_manifest(p)["a"]
    assert e.transcript == "hello there"
    assert e.labels["gender"] == "f"


def test_save_then_load_roundtrip(tmp_path):
    p = tmp_path / "m.jsonl"
    write_jsonl(
        p,
        [
            {
                "utterance_id": "a",
                "speaker_id": "s1",
                "duration_s": 1.5,
                "labels": {"gender": "m"},
            },
            {"utterance_id": "b", "speaker_id": "s2", "duration_s": 0.5},
        ],
    )
    m = load_manifest(p)
    out = tmp_path / "copy.jsonl"
    save_manifest(m, out)
    m2 = load_manifest(out)
    assert [e.utterance_id for e in m2] == ["a", "b"]
    assert m2["a"].labels == {"gender": "m"}
    assert m2["b"].duration_s == 0.5
