import math
import warnings

import numpy as np
import pytest

from vpk import (
    AbxItem,
    FeatureSequence,
    MissingFeatures,
    NoValidCells,
    SpanOutOfRange,
    UnitSequence,
    abx_cell_scores,
    abx_error,
    dtw_distance,
    frame_distance,
    read_items,
    score_triple,
    slice_item,
    units_to_features,
    write_items,
)
from vpk.abx import AbxTriple

from vpk_helpers import synth_abx_case


def dtw_oracle(a, b):
    """Enumerate every monotone path; min summed frame_distance with
    shortest-path tie-break; returns the mean along the winner."""
    ta, tb = len(a), len(b)
    cost = np.array([[frame_distance(a[i], b[j]) for j in range(tb)] for i in range(ta)])
    best = (math.inf, math.inf)

    def walk(i, j, s, n):
        nonlocal best
        s = s + cost[i, j]
        n += 1
        if i == ta - 1 and j == tb - 1:
            if (s, n) < best:
                best = (s, n)
            return
        if i + 1 < ta and j + 1 < tb:
            walk(i + 1, j + 1, s, n)
        if i + 1 < ta:
            walk(i + 1, j, s, n)
        if j + 1 < tb:
            walk(i, j + 1, s, n)

    walk(0, 0, 0.0, 0)
    return best[0] / best[1]


def index_features(n=40, rate=100.0, uid="u"):
    # frame value encodes its own index so slices are recognizable
    frames = np.repeat(np.arange(1, n + 1, dtype=np.float32)[:, None], 2, axis=1)
    return FeatureSequence(frames, rate, uid)


def test_slice_item_plain_span():
    fs = index_features()
    item = AbxItem("u", 0.10, 0.13, "ae", "k", "t", "s1")
    got = slice_item(fs, item)
    assert got.shape == (3, 2)
    np.testing.assert_array_equal(got[:, 0], [11, 12, 13])  # frames 10,11,12


def test_slice_item_subframe_span_rounds_outward():
    fs = index_features()
    item = AbxItem("u", 0.105, 0.108, "ae", "k", "t", "s1")
    got = slice_item(fs, item)
    assert got.shape == (1, 2)
    assert got[0, 0] == 11  # frame 10


def test_slice_item_out_of_range():
    fs = index_features(n=20)  # 0.2 s
    with pytest.raises(SpanOutOfRange):
        slice_item(fs, AbxItem("u", 0.15, 0.25, "ae", "k", "t", "s1"))


def test_slice_item_boundary_exclusive():
    fs = index_features(n=20)
    got = slice_item(fs, AbxItem("u", 0.18, 0.20, "ae", "k", "t", "s1"))
    assert list(got[:, 0]) == [19, 20]


def test_frame_distance_trivials():
    u = np.array([1.0, 2.0])
    assert frame_distance(u, u) == 0.0
    assert frame_distance(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == pytest.approx(0.5)
    assert frame_distance(u, -u) == pytest.approx(1.0)


def test_frame_distance_zero_vector_is_half():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = frame_distance(np.zeros(3), np.array([1.0, 0.0, 0.0]))
    assert d == pytest.approx(0.5)


def test_frame_distance_scale_invariant():
    rng = np.random.default_rng(2)
    for _ in range(100):
        u = rng.normal(size=5)
        v = rng.normal(size=5)
        assert frame_distance(3.7 * u, v) == pytest.approx(frame_distance(u, v), abs=1e-12)


def test_dtw_identity_and_single_frame():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(5, 3))
    assert dtw_distance(a, a) == 0.0
    u, v = rng.normal(size=(1, 3)), rng.normal(size=(1, 3))
    assert dtw_distance(u, v) == pytest.approx(frame_distance(u[0], v[0]))


def test_dtw_matches_path_enumeration():
    rng = np.random.default_rng(6)
    for _ in range(60):
        ta, tb = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        a = rng.normal(size=(ta, 2))
        b = rng.normal(size=(tb, 2))
        assert dtw_distance(a, b) == pytest.approx(dtw_oracle(a, b), abs=1e-9)


def test_dtw_symmetric():
    rng = np.random.default_rng(8)
    for _ in range(40):
        a = rng.normal(size=(int(rng.integers(1, 6)), 3))
        b = rng.normal(size=(int(rng.integers(1, 6)), 3))
        assert dtw_distance(a, b) == pytest.approx(dtw_distance(b, a), abs=1e-12)


def triple(condition="within", spk_x="s1"):
    a = AbxItem("u", 0.0, 0.03, "aa", "sil", "sil", "s1")
    b = AbxItem("u", 0.03, 0.06, "ee", "sil", "sil", "s1")
    x = AbxItem("u", 0.06, 0.09, "aa", "sil", "sil", spk_x)
    return AbxTriple(a=a, b=b, x=x, condition=condition)


def test_score_triple_a_matches_x():
    feats = np.zeros((9, 4), np.float32)
    feats[0:3, 0] = 1.0  # a
    feats[3:6, 1] = 1.0  # b
    feats[6:9, 0] = 1.0  # x identical to a
    fs = {"u": FeatureSequence(feats, 100.0, "u")}
    assert score_triple(triple(), fs) == 1.0


def test_score_triple_all_identical_is_tie():
    fs = {"u": FeatureSequence(np.ones((9, 4), np.float32), 100.0, "u")}
    assert score_triple(triple(), fs) == 0.5


def test_score_triple_missing_features():
    with pytest.raises(MissingFeatures):
        score_triple(triple(), {})


def test_score_triple_depends_only_on_ordering():
    # magnitudes scaled per-slice must not change the outcome
    feats = np.zeros((9, 4), np.float32)
    feats[0:3, 0] = 0.001
    feats[3:6, 1] = 900.0
    feats[6:9, 0] = 42.0
    fs = {"u": FeatureSequence(feats, 100.0, "u")}
    assert score_triple(triple(), fs) == 1.0


def test_score_triple_one_dimensional_zero_vector_semantics():
    # all positive 1-D frames are parallel (angular distance 0) and the
    # zero frame sits at 0.5 from everything, so b wins here
    feats = np.array([[0.0], [0.1], [1.0]], np.float32)
    fs = {"u": FeatureSequence(feats, 100.0, "u")}
    a = AbxItem("u", 0.00, 0.01, "aa", "sil", "sil", "s1")
    x = AbxItem("u", 0.01, 0.02, "aa", "sil", "sil", "s1")
    b = AbxItem("u", 0.02, 0.03, "ee", "sil", "sil", "s1")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        got = score_triple(AbxTriple(a=a, b=b, x=x, condition="within"), fs)
    assert got == 0.0
    # 2-D variant with no zero vectors behaves as the magnitudes suggest
    feats2 = np.array([[1.0, 0.1], [1.0, 0.12], [0.1, 1.0]], np.float32)
    fs2 = {"u": FeatureSequence(feats2, 100.0, "u")}
    assert score_triple(AbxTriple(a=a, b=b, x=x, condition="within"), fs2) == 1.0


def test_triple_validates_speaker_constraints():
    with pytest.raises(Exception):
        AbxTriple(
            a=AbxItem("u", 0.0, 0.01, "aa", "sil", "sil", "s1"),
            b=AbxItem("u", 0.01, 0.02, "ee", "sil", "sil", "s1"),
            x=AbxItem("u", 0.02, 0.03, "aa", "sil", "sil", "s1"),
            condition="across",  # x must come from a different speaker
        )


def test_units_to_features_one_hot():
    us = UnitSequence(np.array([0, 2]), k=3, utterance_id="u")
    fs = units_to_features(us)
    np.testing.assert_array_equal(fs.frames, [[1, 0, 0], [0, 0, 1]])
    assert fs.frame_rate_hz == 100.0
    d = frame_distance(fs.frames[0], fs.frames[1])
    assert d == pytest.approx(0.5)


def test_units_to_features_keeps_dedup_length():
    us = UnitSequence(np.array([3, 1, 3]), k=4, deduplicated=True, utterance_id="u")
    assert units_to_features(us).n_frames == 3


def test_item_file_roundtrip(tmp_path):
    items = [
        AbxItem("utt1", 0.10, 0.25, "ae", "k", "t", "spk1"),
        AbxItem("utt2", 1.00, 1.06, "ih", "sil", "z", "spk2"),
    ]
    p = tmp_path / "dev.item"
    write_items(items, p)
    back = read_items(p)
    assert back == items


def test_item_file_parses_convention(tmp_path):
    p = tmp_path / "x.item"
    p.write_text(
        "#file onset offset #phone prev-phone next-phone speaker\n"
        "u1 0.10 0.13 ae k t s1\n"
        "u2 0.50 0.62 ih sil z s2\n"
    )
    items = read_items(p)
    assert len(items) == 2
    assert items[0] == AbxItem("u1", 0.10, 0.13, "ae", "k", "t", "s1")
    assert items[1].speaker_id == "s2"


def test_abx_error_one_hot_is_zero():
    items, feats = synth_abx_case("phone-onehot", tokens=3)
    for cond in ("within", "across"):
        score = abx_error(items, feats, cond, seed=1)
        assert score.error_rate == 0.0
        assert score.condition == cond
        assert score.n_triples > 0 and score.n_cells > 0


def test_abx_error_noise_is_near_half():
    items, feats = synth_abx_case("noise", tokens=6, seed=3)
    for cond in ("within", "across"):
        score = abx_error(items, feats, cond, seed=5)
        assert score.n_triples >= 200
        assert abs(score.error_rate - 0.5) <= 0.05, score


def test_abx_error_single_speaker_across():
    items, feats = synth_abx_case("phone-onehot", n_speakers=1, tokens=3)
    with pytest.raises(NoValidCells):
        abx_error(items, feats, "across")
    # within still works
    assert abx_error(items, feats, "within").error_rate == 0.0


def test_abx_error_missing_features():
    items, feats = synth_abx_case("phone-onehot", tokens=2)
    feats.pop(items[0].utterance_id)
    with pytest.raises(MissingFeatures):
        abx_error(items, feats, "within")


def test_abx_error_scale_invariance():
    items, feats = synth_abx_case("noise", tokens=4, seed=9)
    scaled = {
        uid: FeatureSequence(fs.frames * np.float32(3.7), fs.frame_rate_hz, uid)
        for uid, fs in feats.items()
    }
    for cond in ("within", "across"):
        base_cells, _ = abx_cell_scores(items, feats, cond, seed=2)
        new_cells, _ = abx_cell_scores(items, scaled, cond, seed=2)
        assert base_cells == new_cells
        assert abx_error(items, feats, cond, seed=2) == abx_error(items, scaled, cond, seed=2)


def test_abx_error_phone_swap_invariance():
    items, feats = synth_abx_case("noise", tokens=4, seed=12)
    swap = {"p0": "p1", "p1": "p0", "p2": "p2"}
    renamed = [
        AbxItem(i.utterance_id, i.onset_s, i.offset_s, swap[i.phone], i.prev_phone, i.next_phone, i.speaker_id)
        for i in items
    ]
    for cond in ("within", "across"):
        a = abx_error(items, feats, cond, seed=4)
        b = abx_error(renamed, feats, cond, seed=4)
        assert a.error_rate == pytest.approx(b.error_rate, abs=1e-12)


def test_abx_error_deterministic_and_seed_sensitive_when_subsampling():
    items, feats = synth_abx_case("noise", tokens=6, seed=21)
    a = abx_error(items, feats, "within", max_triples_per_cell=20, seed=7)
    b = abx_error(items, feats, "within", max_triples_per_cell=20, seed=7)
    assert a == b
    c = abx_error(items, feats, "within", max_triples_per_cell=20, seed=8)
    assert a.error_rate != c.error_rate  # different subsample of a noisy cell


def test_abx_cell_keys_reflect_condition():
    items, feats = synth_abx_case("phone-onehot", tokens=2)
    within_cells, _ = abx_cell_scores(items, feats, "within")
    across_cells, _ = abx_cell_scores(items, feats, "across")
    assert all(len(k) == 5 for k in within_cells)
    assert all(len(k) == 6 for k in across_cells)
    # across keys carry distinct (s_ab, s_x)
    assert all(k[4] != k[5] for k in across_cells)
