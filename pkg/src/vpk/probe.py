"""Paralinguistic leakage probes over pooled utterance embeddings.

An attribute (speaker, gender, emotion, ...) leaks from a representation
to the extent a shallow classifier beats chance at recovering it. Both a
multinomial logistic probe and a nearest-neighbor probe are provided,
with every tie-break pinned so identical inputs give identical reports.
Reports carry the 1/C random-guess rate and the majority-class baseline;
leakage deltas between two settings are expressed in percentage points.
"""

from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import (
    AttributeMismatch,
    ClassTooSmall,
    EmptySequence,
    KTooLarge,
    NonFinite,
)
from .features import FeatureSequence
from .units import UnitSequence
from .validation import rng_from_seed

DEFAULT_LR = 0.1
DEFAULT_EPOCHS = 500
DEFAULT_L2 = 1e-3
DEFAULT_TEST_FRACTION = 0.2


def pool_continuous(fs: FeatureSequence) -> np.ndarray:
    """Per-dimension mean over frames (order-invariant summary)."""
    return np.asarray(fs.frames, dtype=np.float64).mean(axis=0)


def pool_units(us: UnitSequence, k=None) -> np.ndarray:
    """Normalized unit histogram; entries sum to 1."""
    k = us.k if k is None else int(k)
    if len(us) == 0:
        raise EmptySequence(f"cannot pool empty unit sequence {us.utterance_id!r}")
    counts = np.bincount(us.units, minlength=k).astype(np.float64)
    return counts / counts.sum()


@dataclass(frozen=True)
class ProbeDataset:
    X: np.ndarray
    y: np.ndarray
    attribute_name: str
    class_names: tuple
    test_mask: np.ndarray
    pooling_id: str = ""

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        mask = np.asarray(self.test_mask, dtype=bool).reshape(-1)
        if x.ndim != 2 or x.shape[0] != y.shape[0] or y.shape[0] != mask.shape[0]:
            raise ValueError("X, y and test_mask must agree on the row count")
        c = len(self.class_names)
        if y.size and (y.min() < 0 or y.max() >= c):
            raise ValueError(f"labels must lie in [0, {c})")
        if not mask.any():
            raise ValueError("test split is empty")
        train_classes = set(np.unique(y[~mask]).tolist())
        if train_classes != set(range(c)):
            raise ClassTooSmall(
                "every class must appear in the train split; missing "
                f"{sorted(set(range(c)) - train_classes)}"
            )
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "test_mask", mask)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_classes(self):
        return len(self.class_names)


@dataclass(frozen=True)
class ProbeReport:
    attribute_name: str
    accuracy: float
    random_guess: float
    majority_baseline: float
    n_test: int
    classifier_id: str
    pooling_id: str = ""

    def to_json_obj(self):
        return dict(vars(self))


def split_stratified(y, test_fraction, seed) -> np.ndarray:
    """Seeded per-class split; returns a boolean test mask.

    Each class contributes clamp(round(count * fraction), 1, count - 1)
    test rows, which keeps the share within one sample of the request
    while guaranteeing every class stays in train and the test split is
    nonempty.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    rng = rng_from_seed(seed)
    mask = np.zeros(y.shape[0], dtype=bool)
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < 2:
            raise ClassTooSmall(
                f"class {int(cls)} has {members.size} sample(s); need >= 2"
            )
        n_test = int(np.clip(round(members.size * test_fraction), 1, members.size - 1))
        picked = rng.permutation(members)[:n_test]
        mask[picked] = True
    return mask


def _standardize_fit(x):
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0.0] = 1.0
    return mean, scale


class SoftmaxProbe(BaseEstimator, ClassifierMixin):
    """Multinomial logistic regression by full-batch gradient descent.

    Weights start at zero and each step is backtracked (halve the step
    size) until the regularized loss does not increase, so loss_path_ is
    non-increasing by construction and training is deterministic. Inputs
    are standardized with train-split statistics inside fit.
    """

    classifier_id = "softmax"

    def __init__(self, lr=DEFAULT_LR, epochs=DEFAULT_EPOCHS, l2=DEFAULT_L2, seed=0):
        self.lr = lr
        self.epochs = epochs
        self.l2 = l2
        self.seed = seed

    def _loss(self, xs, onehot, w, b):
        logits = xs @ w + b
        m = logits.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
        ce = float(np.mean(lse - logits[onehot]))
        return ce + self.l2 * float(np.sum(w * w)) / 2.0, logits

    def fit(self, X, y):
        x = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        if not np.all(np.isfinite(x)):
            raise NonFinite("training features contain NaN or infinity")
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        self.classes_ = np.unique(y)
        yi = np.searchsorted(self.classes_, y)
        n, f = x.shape
        c = self.classes_.shape[0]
        self.scaler_mean_, self.scaler_scale_ = _standardize_fit(x)
        xs = (x - self.scaler_mean_) / self.scaler_scale_
        onehot = (np.arange(n), yi)
        target = np.zeros((n, c))
        target[onehot] = 1.0

        w = np.zeros((f, c))
        b = np.zeros(c)
        lr = float(self.lr)
        loss, logits = self._loss(xs, onehot, w, b)
        if not np.isfinite(loss):
            raise NonFinite("initial training loss is not finite")
        path = [loss]
        for _ in range(int(self.epochs)):
            z = logits - logits.max(axis=1, keepdims=True)
            p = np.exp(z)
            p /= p.sum(axis=1, keepdims=True)
            g = p - target
            gw = xs.T @ g / n + self.l2 * w
            gb = g.mean(axis=0)
            while True:
                w2 = w - lr * gw
                b2 = b - lr * gb
                new_loss, new_logits = self._loss(xs, onehot, w2, b2)
                if not np.isfinite(new_loss):
                    raise NonFinite("training loss diverged; rescale the features")
                if new_loss <= loss or lr < 1e-12:
                    break
                lr /= 2.0
            if new_loss > loss:
                break
            w, b, loss, logits = w2, b2, new_loss, new_logits
            path.append(loss)
        self.coef_ = w
        self.intercept_ = b
        self.loss_path_ = path
        return self

    def decision_function(self, X):
        x = np.asarray(X, dtype=np.float64)
        xs = (x - self.scaler_mean_) / self.scaler_scale_
        return xs @ self.coef_ + self.intercept_

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]


class KnnProbe(BaseEstimator, ClassifierMixin):
    """Euclidean majority vote with lowest-index tie-breaks on both the
    neighbor ordering and the vote."""

    classifier_id = "knn"

    def __init__(self, n_neighbors=5):
        self.n_neighbors = n_neighbors

    def fit(self, X, y):
        x = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        if self.n_neighbors > x.shape[0]:
            raise KTooLarge(
                f"n_neighbors={self.n_neighbors} exceeds train size {x.shape[0]}"
            )
        self.classes_ = np.unique(y)
        self._x = x
        self._yi = np.searchsorted(self.classes_, y)
        return self

    def predict(self, X):
        x = np.asarray(X, dtype=np.float64)
        out = np.empty(x.shape[0], dtype=np.int64)
        for i in range(x.shape[0]):
            diff = self._x - x[i]
            d2 = np.einsum("ij,ij->i", diff, diff)
            order = np.argsort(d2, kind="stable")[: self.n_neighbors]
            votes = np.bincount(self._yi[order], minlength=self.classes_.shape[0])
            out[i] = np.argmax(votes)
        return self.classes_[out]


def train_softmax(ds: ProbeDataset, l2=DEFAULT_L2, epochs=DEFAULT_EPOCHS,
                  lr=DEFAULT_LR, seed=0) -> SoftmaxProbe:
    tr = ~ds.test_mask
    return SoftmaxProbe(lr=lr, epochs=epochs, l2=l2, seed=seed).fit(
        ds.X[tr], ds.y[tr]
    )


def train_knn(ds: ProbeDataset, n_neighbors=5) -> KnnProbe:
    tr = ~ds.test_mask
    return KnnProbe(n_neighbors=n_neighbors).fit(ds.X[tr], ds.y[tr])


def evaluate(classifier, ds: ProbeDataset) -> ProbeReport:
    """Accuracy on the test split, with 1/C and majority baselines.

    The majority baseline is the test-split accuracy of always
    predicting the train-split majority class (lowest index on count
    ties), so a probe that collapses to the prior matches it exactly.
    """
    te = ds.test_mask
    pred = np.asarray(classifier.predict(ds.X[te]))
    accuracy = float(np.mean(pred == ds.y[te]))
    counts = np.bincount(ds.y[~te], minlength=ds.n_classes)
    majority_class = int(np.argmax(counts))
    return ProbeReport(
        attribute_name=ds.attribute_name,
        accuracy=accuracy,
        random_guess=1.0 / ds.n_classes,
        majority_baseline=float(np.mean(ds.y[te] == majority_class)),
        n_test=int(te.sum()),
        classifier_id=getattr(classifier, "classifier_id", type(classifier).__name__),
        pooling_id=ds.pooling_id,
    )


def leakage_delta(before: ProbeReport, after: ProbeReport) -> float:
    """Accuracy drop in percentage points attributable to a privacy
    stage; positive when the stage reduced leakage."""
    if before.attribute_name != after.attribute_name:
        raise AttributeMismatch(
            f"cannot compare {before.attribute_name!r} with {after.attribute_name!r}"
        )
    if before.n_test != after.n_test:
        raise AttributeMismatch(
            f"test splits differ ({before.n_test} vs {after.n_test} rows)"
        )
    return (before.accuracy - after.accuracy) * 100.0
