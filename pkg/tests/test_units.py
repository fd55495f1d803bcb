import numpy as np
import pytest

from vpk import UnitSequence, VpkError, dedup_units, read_units, write_units


def test_dedup_collapses_runs():
    assert list(dedup_units(np.array([3, 3, 3, 1, 1, 3]))) == [3, 1, 3]
    assert list(dedup_units(np.array([2]))) == [2]
    assert list(dedup_units(np.array([], dtype=np.int64))) == []


def test_dedup_of_dedup_is_identity():
    rng = np.random.default_rng(5)
    for _ in range(50):
        units = rng.integers(0, 6, size=int(rng.integers(1, 40)))
        once = dedup_units(units)
        twice = dedup_units(once)
        assert list(once) == list(twice)
        # a deduplicated array is a valid flagged sequence
        UnitSequence(once, k=6, deduplicated=True)


def test_rejects_out_of_range_unit():
    with pytest.raises(VpkError):
        UnitSequence(np.array([0, 4]), k=4)
    with pytest.raises(VpkError):
        UnitSequence(np.array([-1]), k=4)


def test_rejects_inconsistent_dedup_flag():
    with pytest.raises(VpkError):
        UnitSequence(np.array([2, 2]), k=4, deduplicated=True)


def test_file_roundtrip(tmp_path):
    seqs = [
        UnitSequence(np.array([0, 0, 5, 2]), k=6, utterance_id="utt1"),
        UnitSequence(np.array([1]), k=6, utterance_id="utt2"),
    ]
    p = tmp_path / "units.txt"
    write_units(seqs, p)
    back = read_units(p, k=6)
    assert [s.utterance_id for s in back] == ["utt1", "utt2"]
    assert [list(s.units) for s in back] == [[0, 0, 5, 2], [1]]


def test_file_format_is_plain_lines(tmp_path):
    p = tmp_path / "units.txt"
    write_units([UnitSequence(np.array([7, 0]), k=8, utterance_id="a")], p)
    assert p.read_text().strip() == "a 7 0"
