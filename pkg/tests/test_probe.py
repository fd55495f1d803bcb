import dataclasses

import numpy as np
import pytest
from sklearn.base import clone

from vpk import (
    AttributeMismatch,
    ClassTooSmall,
    EmptySequence,
    FeatureSequence,
    KnnProbe,
    KTooLarge,
    NonFinite,
    ProbeDataset,
    ProbeReport,
    SoftmaxProbe,
    UnitSequence,
    evaluate,
    leakage_delta,
    pool_continuous,
    pool_units,
    split_stratified,
    train_knn,
    train_softmax,
)


def make_dataset(X, y, test_mask, attribute="attr", classes=None, pooling="frame-mean"):
    n_classes = int(np.max(y)) + 1
    if classes is None:
        classes = [f"c{i}" for i in range(n_classes)]
    return ProbeDataset(
        X=np.asarray(X, np.float64),
        y=np.asarray(y, np.int64),
        attribute_name=attribute,
        class_names=list(classes),
        test_mask=np.asarray(test_mask, bool),
        pooling_id=pooling,
    )


def blob_dataset(n_per_class=60, n_classes=3, dim=4, sep=6.0, seed=0, test_fraction=0.25):
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for c in range(n_classes):
        center = np.zeros(dim)
        center[c % dim] = sep
        xs.append(rng.normal(center, 1.0, (n_per_class, dim)))
        ys.append(np.full(n_per_class, c))
    X = np.vstack(xs)
    y = np.concatenate(ys)
    mask = split_stratified(y, test_fraction, seed=seed + 1)
    return make_dataset(X, y, mask)


def test_pool_continuous_mean():
    fs = FeatureSequence(np.array([[1, 3], [3, 5]], np.float32), 100.0, "u")
    np.testing.assert_allclose(pool_continuous(fs), [2.0, 4.0])
    one = FeatureSequence(np.array([[7, 9]], np.float32), 100.0, "u")
    np.testing.assert_allclose(pool_continuous(one), [7.0, 9.0])


def test_pool_continuous_order_invariant():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(30, 5)).astype(np.float32)
    a = pool_continuous(FeatureSequence(x, 100.0, "u"))
    b = pool_continuous(FeatureSequence(x[::-1].copy(), 100.0, "u"))
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_pool_units_histogram():
    us = UnitSequence(np.array([0, 0, 1]), k=3)
    np.testing.assert_allclose(pool_units(us), [2 / 3, 1 / 3, 0.0])


def test_pool_units_sums_to_one():
    rng = np.random.default_rng(2)
    for _ in range(20):
        us = UnitSequence(rng.integers(0, 7, int(rng.integers(1, 50))), k=7)
        h = pool_units(us)
        assert h.shape == (7,)
        assert h.sum() == pytest.approx(1.0)


def test_pool_units_empty_rejected():
    us = UnitSequence(np.array([], dtype=np.int64), k=3)
    with pytest.raises(EmptySequence):
        pool_units(us)


def test_split_sizes_and_determinism():
    y = np.array([0] * 10 + [1] * 10)
    m = split_stratified(y, 0.2, seed=3)
    assert m.sum() == 4
    assert m[:10].sum() == 2 and m[10:].sum() == 2
    assert np.array_equal(m, split_stratified(y, 0.2, seed=3))
    assert not np.array_equal(m, split_stratified(y, 0.2, seed=4))


def test_split_clamps_to_leave_train_and_test():
    # 2-sample classes always get exactly one test row
    y = np.array([0, 0, 1, 1, 1, 1])
    m = split_stratified(y, 0.01, seed=0)
    assert m[:2].sum() == 1
    assert m[2:].sum() == 1  # round(4*0.01)=0 clamped up
    m = split_stratified(y, 0.99, seed=0)
    assert m[:2].sum() == 1  # clamped down, one row stays in train
    assert m[2:].sum() == 3


def test_split_rejects_singleton_class():
    with pytest.raises(ClassTooSmall):
        split_stratified(np.array([0, 0, 1]), 0.2, seed=0)


def test_split_property_loop():
    rng = np.random.default_rng(9)
    for _ in range(30):
        counts = rng.integers(2, 30, size=int(rng.integers(2, 6)))
        y = np.repeat(np.arange(len(counts)), counts)
        frac = float(rng.uniform(0.05, 0.6))
        m = split_stratified(y, frac, seed=int(rng.integers(1 << 32)))
        for c, n in enumerate(counts):
            got = m[y == c].sum()
            assert 1 <= got <= n - 1
            assert abs(got - n * frac) <= 1.0


def test_softmax_separable_blobs():
    ds = blob_dataset(seed=5)
    clf = train_softmax(ds)
    rep = evaluate(clf, ds)
    assert rep.accuracy >= 0.98
    assert rep.classifier_id == "softmax"


def test_softmax_loss_path_non_increasing():
    ds = blob_dataset(seed=6, n_per_class=30)
    clf = train_softmax(ds)
    path = clf.loss_path_
    assert all(b <= a + 1e-12 for a, b in zip(path, path[1:]))


def test_softmax_shuffled_labels_near_chance():
    rng = np.random.default_rng(77)
    X = rng.normal(size=(400, 8))
    y = rng.integers(0, 4, 400)  # labels independent of features
    mask = split_stratified(y, 0.25, seed=1)
    ds = make_dataset(X, y, mask)
    rep = evaluate(train_softmax(ds), ds)
    assert abs(rep.accuracy - 0.25) <= 0.08


def test_softmax_constant_features_equal_majority():
    y = np.array([0] * 30 + [1] * 14 + [2] * 6)
    X = np.ones((len(y), 5))
    mask = split_stratified(y, 0.3, seed=2)
    ds = make_dataset(X, y, mask)
    rep = evaluate(train_softmax(ds), ds)
    assert rep.accuracy == rep.majority_baseline


def test_softmax_rejects_nonfinite_input():
    y = np.array([0, 0, 1, 1])
    X = np.array([[1.0], [2.0], [np.inf], [3.0]])
    ds = make_dataset(X, y, np.array([True, False, False, True]))
    with pytest.raises(NonFinite):
        train_softmax(ds)


def test_softmax_deterministic():
    ds = blob_dataset(seed=8, n_per_class=25)
    a = train_softmax(ds, seed=3)
    b = train_softmax(ds, seed=3)
    assert np.array_equal(a.coef_, b.coef_)
    assert a.loss_path_ == b.loss_path_


def test_knn_memorizes_training_points():
    X = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]])
    y = np.array([0, 1, 0, 1])
    ds = make_dataset(X, y, np.array([False, False, True, True]))
    clf = train_knn(ds, n_neighbors=1)
    pred = clf.predict(X)
    assert list(pred[:2]) == [0, 1]


def test_knn_separable_blobs():
    ds = blob_dataset(seed=9)
    rep = evaluate(train_knn(ds, n_neighbors=5), ds)
    assert rep.accuracy >= 0.98
    assert rep.classifier_id == "knn"


def test_knn_k_equals_train_size_predicts_majority():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [50.0]])
    y = np.array([1, 1, 1, 0, 0])
    mask = np.array([False, False, False, False, True])
    ds = make_dataset(X, y, mask)
    clf = train_knn(ds, n_neighbors=4)
    assert clf.predict(np.array([[100.0]]))[0] == 1


def test_knn_rejects_k_larger_than_train():
    ds = blob_dataset(seed=10, n_per_class=4)
    with pytest.raises(KTooLarge):
        train_knn(ds, n_neighbors=1000)


def test_knn_tie_breaks_to_lowest_label():
    X = np.array([[0.0], [2.0], [1.0]])
    y = np.array([1, 0, 0])
    ds = make_dataset(X, y, np.array([False, False, True]))
    clf = train_knn(ds, n_neighbors=2)
    # neighbors of 1.0 are 0.0 (label 1) and 2.0 (label 0): tie -> 0
    assert clf.predict(np.array([[1.0]]))[0] == 0


def test_evaluate_baselines():
    ds = blob_dataset(n_classes=2, seed=11)
    rep = evaluate(train_softmax(ds), ds)
    assert rep.random_guess == 0.5
    ds7 = blob_dataset(n_classes=7, dim=8, seed=12)
    rep7 = evaluate(train_softmax(ds7), ds7)
    assert rep7.random_guess == pytest.approx(1 / 7)
    assert round(rep7.random_guess, 3) == 0.143


def test_evaluate_majority_baseline_imbalanced():
    y = np.array([0] * 40 + [1] * 10)
    rng = np.random.default_rng(13)
    X = rng.normal(size=(50, 3))
    mask = split_stratified(y, 0.2, seed=5)
    ds = make_dataset(X, y, mask)
    rep = evaluate(train_softmax(ds), ds)
    assert rep.majority_baseline == pytest.approx(8 / 10)
    assert rep.n_test == 10


def test_dataset_requires_all_classes_in_train():
    X = np.zeros((4, 2))
    y = np.array([0, 0, 1, 1])
    with pytest.raises(ClassTooSmall):
        make_dataset(X, y, np.array([False, False, True, True]))


def test_leakage_delta_fixture():
    kw = dict(
        attribute_name="gender",
        random_guess=0.5,
        majority_baseline=0.5,
        n_test=100,
        classifier_id="softmax",
        pooling_id="frame-mean",
    )
    before = ProbeReport(accuracy=0.8265, **kw)
    after = ProbeReport(accuracy=0.4451, **kw)
    assert leakage_delta(before, after) == pytest.approx(38.14)
    assert leakage_delta(before, before) == 0.0


def test_leakage_delta_speaker_fixture():
    kw = dict(
        attribute_name="speaker",
        random_guess=1 / 251,
        majority_baseline=0.01,
        n_test=200,
        classifier_id="softmax",
        pooling_id="frame-mean",
    )
    before = ProbeReport(accuracy=0.4511, **kw)
    after = ProbeReport(accuracy=0.1704, **kw)
    assert leakage_delta(before, after) == pytest.approx(28.07)


def test_leakage_delta_rejects_mismatch():
    a = ProbeReport(
        attribute_name="gender",
        accuracy=0.8,
        random_guess=0.5,
        majority_baseline=0.5,
        n_test=100,
        classifier_id="softmax",
        pooling_id="frame-mean",
    )
    b = dataclasses.replace(a, attribute_name="speaker")
    with pytest.raises(AttributeMismatch):
        leakage_delta(a, b)
    c = dataclasses.replace(a, n_test=99)
    with pytest.raises(AttributeMismatch):
        leakage_delta(a, c)


def test_estimator_api():
    est = SoftmaxProbe(lr=0.2, epochs=10, l2=0.01, seed=4)
    assert clone(est).get_params() == est.get_params()
    knn = KnnProbe(n_neighbors=3)
    assert clone(knn).get_params()["n_neighbors"] == 3
