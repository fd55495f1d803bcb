"""K-means codebooks and nearest-centroid discretization.

The clustering is written out in full rather than delegated because the
codebook contract pins details a library would hide: the per-iteration
inertia trace (asserted non-increasing), the empty-cluster rule (reseed
to the farthest point from the dead centroid), lowest-index tie-breaks,
and bit-reproducibility from a single integer seed.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .errors import DegenerateData, DimMismatch, IoFailure, TooFewFrames
from .features import FeatureSequence, read_features, write_features
from .units import UnitSequence, dedup_units
from .validation import check_feature_array, check_seed, rng_from_seed

DEFAULT_K = 50
DEFAULT_MAX_ITERS = 100
DEFAULT_TOL = 1e-4
DEFAULT_MAX_FRAMES = 2_000_000


@dataclass(frozen=True)
class Codebook:
    centroids: np.ndarray
    k: int
    feature_dim: int
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.centroids), dtype=np.float32)
        if c.ndim != 2:
            raise DimMismatch(f"centroids must be 2-D, got ndim={c.ndim}")
        if c.shape != (self.k, self.feature_dim):
            raise DimMismatch(
                f"centroids shape {c.shape} != (k={self.k}, D={self.feature_dim})"
            )
        if self.k < 2:
            raise DegenerateData(f"codebook needs k >= 2, got {self.k}")
        if not np.all(np.isfinite(c)):
            raise DegenerateData("centroids contain NaN or infinity")
        if _count_distinct_rows(c) != self.k:
            raise DegenerateData("codebook contains duplicate centroids")
        c.flags.writeable = False
        object.__setattr__(self, "centroids", c)


def _count_distinct_rows(x):
    x = np.ascontiguousarray(x)
    view = x.view([("", x.dtype)] * x.shape[1])
    return int(np.unique(view).shape[0])


def _nearest(x, centers, budget=4_000_000):
    """Exact nearest-centroid scan: labels and squared distances.

    Distances are computed from explicit differences (not the expanded
    quadratic form) so results match a brute-force oracle bit for bit,
    including tie behavior (lowest index wins via argmin). budget bounds
    the temporary (rows x k x D) difference tensor, in elements.
    """
    n = x.shape[0]
    labels = np.empty(n, dtype=np.int64)
    d2 = np.empty(n, dtype=np.float64)
    step = max(1, budget // max(1, centers.shape[0] * x.shape[1]))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        diff = x[lo:hi, None, :] - centers[None, :, :]
        dist = np.einsum("ijk,ijk->ij", diff, diff)
        labels[lo:hi] = np.argmin(dist, axis=1)
        d2[lo:hi] = dist[np.arange(hi - lo), labels[lo:hi]]
    return labels, d2


class KMeansQuantizer(BaseEstimator):
    """Plain Lloyd k-means with k-means++ init and a fixed seed.

    Parameters are stored verbatim; fitting sets cluster_centers_,
    inertia_, inertia_path_, n_iter_ and n_frames_.
    """

    def __init__(self, k=DEFAULT_K, seed=0, max_iters=DEFAULT_MAX_ITERS,
                 tol=DEFAULT_TOL, max_frames=DEFAULT_MAX_FRAMES):
        self.k = k
        self.seed = seed
        self.max_iters = max_iters
        self.tol = tol
        self.max_frames = max_frames

    def _init_plusplus(self, x, rng):
        n = x.shape[0]
        centers = np.empty((self.k, x.shape[1]), dtype=np.float64)
        centers[0] = x[int(rng.integers(0, n))]
        diff = x - centers[0]
        closest = np.einsum("ij,ij->i", diff, diff)
        for c in range(1, self.k):
            total = closest.sum()
            if total <= 0:
                # all mass on already-chosen points; fall back to uniform
                idx = int(rng.integers(0, n))
            else:
                idx = int(rng.choice(n, p=closest / total))
            centers[c] = x[idx]
            diff = x - centers[c]
            np.minimum(closest, np.einsum("ij,ij->i", diff, diff), out=closest)
        return centers

    def fit(self, X, y=None):
        if self.k < 2:
            raise DegenerateData(f"k must be >= 2, got {self.k}")
        x = check_feature_array(X, "training frames").astype(np.float64)
        check_seed(self.seed)
        if x.shape[0] < self.k:
            raise TooFewFrames(f"need at least k={self.k} frames, got {x.shape[0]}")
        rng = rng_from_seed(self.seed)
        if x.shape[0] > self.max_frames:
            keep = np.sort(rng.choice(x.shape[0], self.max_frames, replace=False))
            x = x[keep]
        if _count_distinct_rows(x.astype(np.float32)) < self.k:
            raise DegenerateData(
                f"fewer than k={self.k} distinct frames; clustering is ill-posed"
            )

        centers = self._init_plusplus(x, rng)
        inertia_path = []
        n_iter = 0
        for n_iter in range(1, self.max_iters + 1):
            labels, d2 = _nearest(x, centers)
            inertia_path.append(float(d2.sum()))
            sums = np.zeros_like(centers)
            np.add.at(sums, labels, x)
            counts = np.bincount(labels, minlength=self.k)
            new_centers = centers.copy()
            nonempty = counts > 0
            new_centers[nonempty] = sums[nonempty] / counts[nonempty, None]
            for c in np.flatnonzero(~nonempty):
                diff = x - centers[c]
                far = int(np.argmax(np.einsum("ij,ij->i", diff, diff)))
                new_centers[c] = x[far]
            shift = np.linalg.norm(new_centers - centers) / max(
                np.linalg.norm(centers), np.finfo(np.float64).tiny
            )
            centers = new_centers
            if shift < self.tol:
                break
        _, d2 = _nearest(x, centers)
        inertia_path.append(float(d2.sum()))

        self.cluster_centers_ = centers.astype(np.float32)
        self.inertia_ = inertia_path[-1]
        self.inertia_path_ = inertia_path
        self.n_iter_ = n_iter
        self.n_frames_ = int(x.shape[0])
        return self

    def predict(self, X):
        x = check_feature_array(X, "frames").astype(np.float64)
        if x.shape[1] != self.cluster_centers_.shape[1]:
            raise DimMismatch(
                f"frames have dim {x.shape[1]}, codebook expects "
                f"{self.cluster_centers_.shape[1]}"
            )
        labels, _ = _nearest(x, self.cluster_centers_.astype(np.float64))
        return labels

    def to_codebook(self) -> Codebook:
        return Codebook(
            centroids=self.cluster_centers_,
            k=self.cluster_centers_.shape[0],
            feature_dim=self.cluster_centers_.shape[1],
            training_meta={
                "n_frames": self.n_frames_,
                "n_iterations": self.n_iter_,
                "final_inertia": self.inertia_,
                "seed": int(self.seed),
            },
        )


def fit_kmeans(frames, k, seed, max_iters=DEFAULT_MAX_ITERS, tol=DEFAULT_TOL,
               max_frames=DEFAULT_MAX_FRAMES) -> Codebook:
    est = KMeansQuantizer(k=k, seed=seed, max_iters=max_iters, tol=tol,
                          max_frames=max_frames).fit(frames)
    return est.to_codebook()


def assign(cb: Codebook, fs: FeatureSequence, dedup=False) -> UnitSequence:
    """Per-frame nearest centroid (squared Euclidean, lowest index on
    ties); optionally collapse consecutive repeats."""
    if fs.dim != cb.feature_dim:
        raise DimMismatch(
            f"features have dim {fs.dim}, codebook expects {cb.feature_dim}"
        )
    labels, _ = _nearest(
        fs.frames.astype(np.float64), cb.centroids.astype(np.float64)
    )
    if dedup:
        labels = dedup_units(labels)
    return UnitSequence(
        units=labels, k=cb.k, utterance_id=fs.utterance_id, deduplicated=dedup
    )


def save_codebook(cb: Codebook, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_features(
        FeatureSequence(frames=cb.centroids, utterance_id="centroids"),
        out_dir / "centroids.npy",
    )
    meta = {"k": cb.k, "feature_dim": cb.feature_dim,
            "training_meta": cb.training_meta}
    try:
        (out_dir / "codebook.json").write_text(
            json.dumps(meta, sort_keys=True, indent=2) + "\n", "utf-8"
        )
    except OSError as e:
        raise IoFailure(f"cannot write codebook meta: {e}") from e


def load_codebook(path) -> Codebook:
    path = Path(path)
    fs = read_features(path / "centroids.npy")
    meta_path = path / "codebook.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text("utf-8"))
        if (meta["k"], meta["feature_dim"]) != fs.frames.shape:
            raise DimMismatch(
                f"codebook meta declares ({meta['k']}, {meta['feature_dim']}), "
                f"centroids are {fs.frames.shape}"
            )
        training_meta = meta.get("training_meta", {})
    else:
        training_meta = {}
    return Codebook(
        centroids=fs.frames,
        k=fs.frames.shape[0],
        feature_dim=fs.frames.shape[1],
        training_meta=training_meta,
    )


def unit_bitrate(us: UnitSequence, duration_s) -> float:
    """log2(k) * len(units) / duration, in bits per second."""
    if not duration_s > 0:
        raise ValueError(f"duration must be positive, got {duration_s}")
    return math.log2(us.k) * len(us) / duration_s
