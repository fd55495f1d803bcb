import json

import numpy as np
import pytest
from sklearn.base import clone

from vpk import (
    Codebook,
    DegenerateData,
    DimMismatch,
    FeatureSequence,
    KMeansQuantizer,
    TooFewFrames,
    assign,
    fit_kmeans,
    load_codebook,
    save_codebook,
    unit_bitrate,
)


def nearest_oracle(frames, centers):
    """Expanded-form nearest centroid, a different computation path than
    the library's explicit-difference scan."""
    x = np.asarray(frames, np.float64)
    c = np.asarray(centers, np.float64)
    d2 = (x * x).sum(1)[:, None] - 2.0 * (x @ c.T) + (c * c).sum(1)[None, :]
    return np.argmin(d2, axis=1)


def fs_of(x, uid="u"):
    return FeatureSequence(np.asarray(x, np.float32), 100.0, uid)


def cb_of(cents):
    cents = np.asarray(cents, np.float32)
    return Codebook(centroids=cents, k=cents.shape[0], feature_dim=cents.shape[1])


def test_fit_n_equals_k_recovers_rows():
    rows = np.array([[0.0, 0.0], [5.0, 5.0], [-3.0, 4.0]], np.float32)
    cb = fit_kmeans(rows, k=3, seed=0)
    got = sorted(map(tuple, cb.centroids.tolist()))
    want = sorted(map(tuple, rows.tolist()))
    assert got == want
    assert cb.training_meta["final_inertia"] == 0.0


def test_fit_two_blobs():
    rng = np.random.default_rng(42)
    a = rng.normal(0.0, 1.0, (100, 2))
    b = rng.normal(10.0, 1.0, (100, 2))
    cb = fit_kmeans(np.vstack([a, b]), k=2, seed=3)
    cents = sorted(cb.centroids.tolist(), key=lambda r: r[0])
    np.testing.assert_allclose(cents[0], a.mean(0), atol=0.5)
    np.testing.assert_allclose(cents[1], b.mean(0), atol=0.5)


def test_fit_rejects_too_few_distinct_rows():
    rows = np.tile(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], np.float32), (10, 1))
    with pytest.raises(DegenerateData):
        fit_kmeans(rows, k=4, seed=0)


def test_fit_rejects_too_few_frames():
    with pytest.raises(TooFewFrames):
        fit_kmeans(np.array([[1.0, 2.0]], np.float32), k=2, seed=0)


def test_fit_is_deterministic_per_seed():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(300, 4)).astype(np.float32)
    a = fit_kmeans(x, k=5, seed=11)
    b = fit_kmeans(x, k=5, seed=11)
    assert np.array_equal(a.centroids, b.centroids)
    assert a.training_meta == b.training_meta


def test_fit_inertia_path_non_increasing():
    rng = np.random.default_rng(17)
    for trial in range(10):
        n = int(rng.integers(50, 200))
        d = int(rng.integers(2, 6))
        # clumpy data exercises the empty-cluster reseed path
        centers = rng.normal(0, 5, (3, d))
        x = centers[rng.integers(0, 3, n)] + rng.normal(0, 0.4, (n, d))
        est = KMeansQuantizer(k=int(rng.integers(2, 9)), seed=int(rng.integers(1 << 16)))
        est.fit(x.astype(np.float32))
        path = est.inertia_path_
        assert len(path) >= 1
        assert all(b <= a + 1e-9 for a, b in zip(path, path[1:]))
        assert est.inertia_ == path[-1]


def test_prototype_data_reaches_zero_inertia():
    rng = np.random.default_rng(23)
    protos = rng.normal(size=(4, 3)).astype(np.float32)
    x = protos[rng.integers(0, 4, 500)]
    cb = fit_kmeans(x, k=4, seed=5)
    assert cb.training_meta["final_inertia"] == 0.0
    units = assign(cb, fs_of(x)).units
    # same prototype always maps to the same unit, distinct ones differ
    for p in range(4):
        rows = np.flatnonzero((x == protos[p]).all(1))
        assert len(set(units[rows].tolist())) == 1
    assert len(set(units.tolist())) == 4


def test_assign_trivial_and_dedup():
    cents = np.array([[0, 0], [10, 0], [0, 10]], np.float32)
    cb = cb_of(cents)
    frames = fs_of(cents[[2, 0, 0, 1]])
    assert list(assign(cb, frames).units) == [2, 0, 0, 1]
    d = assign(cb, frames, dedup=True)
    assert list(d.units) == [2, 0, 1]
    assert d.deduplicated


def test_assign_tie_goes_to_lowest_index():
    cents = np.array([[-1.0, 0.0], [1.0, 0.0]], np.float32)
    cb = cb_of(cents)
    units = assign(cb, fs_of([[0.0, 0.0], [0.0, 5.0]])).units
    assert list(units) == [0, 0]


def test_assign_matches_oracle_on_random_frames():
    rng = np.random.default_rng(31)
    cents = rng.normal(size=(16, 8)).astype(np.float32)
    cb = cb_of(cents)
    frames = rng.normal(size=(2000, 8)).astype(np.float32)
    got = assign(cb, fs_of(frames)).units
    want = nearest_oracle(frames, cents)
    assert np.array_equal(got, want)


def test_assign_dim_mismatch():
    cb = cb_of(np.eye(3, dtype=np.float32))
    with pytest.raises(DimMismatch):
        assign(cb, fs_of(np.ones((4, 2))))


def test_codebook_rejects_duplicate_centroids():
    cents = np.array([[1.0, 2.0], [1.0, 2.0]], np.float32)
    with pytest.raises(DegenerateData):
        cb_of(cents)


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    x = rng.normal(size=(200, 5)).astype(np.float32)
    cb = fit_kmeans(x, k=4, seed=9)
    save_codebook(cb, tmp_path / "cb")
    back = load_codebook(tmp_path / "cb")
    assert np.array_equal(back.centroids, cb.centroids)
    assert back.training_meta["seed"] == 9
    assert back.training_meta["final_inertia"] == cb.training_meta["final_inertia"]


def test_load_rejects_meta_dim_mismatch(tmp_path):
    rng = np.random.default_rng(4)
    x = rng.normal(size=(100, 3)).astype(np.float32)
    cb = fit_kmeans(x, k=3, seed=1)
    save_codebook(cb, tmp_path / "cb")
    meta_path = tmp_path / "cb" / "codebook.json"
    meta = json.loads(meta_path.read_text())
    meta["feature_dim"] = 7
    meta_path.write_text(json.dumps(meta))
    with pytest.raises(DimMismatch):
        load_codebook(tmp_path / "cb")


def test_estimator_api():
    est = KMeansQuantizer(k=3, seed=2)
    params = est.get_params()
    assert params["k"] == 3 and params["seed"] == 2
    est2 = clone(est)
    assert est2.get_params() == params
    rng = np.random.default_rng(5)
    x = rng.normal(size=(60, 2)).astype(np.float32)
    est.fit(x)
    labels = est.predict(x)
    assert labels.shape == (60,)
    assert set(labels.tolist()) <= {0, 1, 2}


def test_unit_bitrate_values():
    from vpk import UnitSequence

    us = UnitSequence(np.zeros(100, np.int64), k=64)
    assert unit_bitrate(us, 1.0) == pytest.approx(600.0)
    us2 = UnitSequence(np.zeros(50, np.int64), k=2)
    assert unit_bitrate(us2, 2.0) == pytest.approx(25.0)


def test_dedup_never_increases_bitrate():
    rng = np.random.default_rng(6)
    cents = rng.normal(size=(4, 2)).astype(np.float32)
    cb = cb_of(cents)
    for _ in range(30):
        frames = cents[rng.integers(0, 4, int(rng.integers(2, 60)))]
        full = assign(cb, fs_of(frames))
        dd = assign(cb, fs_of(frames), dedup=True)
        assert unit_bitrate(dd, 1.7) <= unit_bitrate(full, 1.7)
