"""ABX phoneme discriminability over frame representations.

An ABX triple takes two tokens a, x of the same phone and a token b of a
different phone sharing the same (prev, next) context; the triple scores
1 when x is closer to a than to b under DTW-aligned angular frame
distance, 0 when farther, 0.5 on a tie. Triples are grouped into cells
(phone pair, context, speaker assignment), cell scores are averaged
without weighting, phone order is symmetrized, and the reported error is
1 minus the mean cell score.

Two conditions are supported: within (a, b, x share one speaker) and
across (a, b share a speaker, x comes from a different one).
"""

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    CorruptHeader,
    MissingFeatures,
    NoValidCells,
    SpanOutOfRange,
)
from .features import FeatureSequence
from .units import UnitSequence
from .validation import derive_seed, rng_from_seed

_EPS = 1e-9


@dataclass(frozen=True)
class AbxItem:
    """One annotated phone token inside an utterance."""

    utterance_id: str
    onset_s: float
    offset_s: float
    phone: str
    prev_phone: str
    next_phone: str
    speaker_id: str

    def __post_init__(self):
        if not self.onset_s < self.offset_s:
            raise ValueError(
                f"item onset must precede offset, got [{self.onset_s}, {self.offset_s})"
            )

    @property
    def context(self):
        return (self.prev_phone, self.next_phone)


@dataclass(frozen=True)
class AbxTriple:
    a: AbxItem
    b: AbxItem
    x: AbxItem
    condition: str

    def __post_init__(self):
        if self.a.phone != self.x.phone:
            raise ValueError("a and x must share a phone")
        if self.b.phone == self.a.phone:
            raise ValueError("b must differ from a in phone")
        if self.a.context != self.b.context or self.a.context != self.x.context:
            raise ValueError("all three items must share (prev, next) context")
        if self.condition == "within":
            if not (self.a.speaker_id == self.b.speaker_id == self.x.speaker_id):
                raise ValueError("within condition requires one shared speaker")
        elif self.condition == "across":
            if self.a.speaker_id != self.b.speaker_id:
                raise ValueError("across condition requires speaker(a) == speaker(b)")
            if self.x.speaker_id == self.a.speaker_id:
                raise ValueError("across condition requires speaker(x) != speaker(a)")
        else:
            raise ValueError(f"unknown condition {self.condition!r}")


class AbxScore(NamedTuple):
    error_rate: float
    n_triples: int
    n_cells: int
    condition: str


def read_items(path):
    """Parse an item file: a `#...` header line, then one token per row
    (file onset offset phone prev next speaker)."""
    lines = Path(path).read_text("utf-8").splitlines()
    rows = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    items = []
    for lineno, ln in enumerate(rows, start=1):
        fields = ln.split()
        if len(fields) != 7:
            raise CorruptHeader(
                f"{path}: item row {lineno} has {len(fields)} fields, expected 7"
            )
        f, onset, offset, phone, prev, nxt, spk = fields
        items.append(
            AbxItem(
                utterance_id=f,
                onset_s=float(onset),
                offset_s=float(offset),
                phone=phone,
                prev_phone=prev,
                next_phone=nxt,
                speaker_id=spk,
            )
        )
    return items


def write_items(items, path):
    with Path(path).open("w", encoding="utf-8") as f:
        f.write("#file onset offset #phone prev-phone next-phone speaker\n")
        for it in items:
            f.write(
                f"{it.utterance_id} {it.onset_s} {it.offset_s} "
                f"{it.phone} {it.prev_phone} {it.next_phone} {it.speaker_id}\n"
            )


def slice_item(fs: FeatureSequence, item: AbxItem):
    """Frames i with i/rate in [onset, offset); rounds outward to one
    frame when the span is shorter than a frame period."""
    rate = fs.frame_rate_hz
    t = fs.n_frames
    start = math.ceil(item.onset_s * rate - _EPS)
    stop = math.ceil(item.offset_s * rate - _EPS)
    if start >= stop:
        start = math.floor(item.onset_s * rate + _EPS)
        stop = start + 1
    if start < 0 or stop > t:
        raise SpanOutOfRange(
            f"item [{item.onset_s}, {item.offset_s})s maps to frames "
            f"[{start}, {stop}) outside 0..{t} of {fs.utterance_id!r}"
        )
    return fs.frames[start:stop]


def _normalized_rows(a):
    a = np.asarray(a, dtype=np.float64)
    norms = np.linalg.norm(a, axis=1, keepdims=True)
    zero = norms[:, 0] == 0.0
    safe = np.where(norms == 0.0, 1.0, norms)
    return a / safe, zero


def _angular_matrix(a, b):
    """Pairwise arccos(cosine)/pi; cosine with a zero vector is defined
    as 0 so the distance stays total (flagged by the caller)."""
    a = np.asarray(a)
    b = np.asarray(b)
    an, za = _normalized_rows(a)
    bn, zb = _normalized_rows(b)
    cos = np.clip(an @ bn.T, -1.0, 1.0)
    if za.any():
        cos[za, :] = 0.0
    if zb.any():
        cos[:, zb] = 0.0
    dist = np.arccos(cos) / np.pi
    # rounding in the normalization leaves identical nonzero rows a few
    # ulp short of cosine 1; pin exact equality to distance 0
    near = (cos > 0.999) & ~za[:, None] & ~zb[None, :]
    for i, j in zip(*np.nonzero(near)):
        if np.array_equal(a[i], b[j]):
            dist[i, j] = 0.0
    n_zero = int(za.sum() + zb.sum())
    return dist, n_zero


def frame_distance(u, v):
    """Angular distance between two frames, in [0, 1]."""
    d, _ = _angular_matrix(np.atleast_2d(u), np.atleast_2d(v))
    return float(d[0, 0])


def dtw_distance(a, b):
    """Mean angular distance along the optimal DTW path.

    Steps are (1,0), (0,1), (1,1); the path minimizes summed frame
    distance, ties broken toward the shorter path, and the returned
    value is that path's sum divided by its length.
    """
    d, _ = _angular_matrix(a, b)
    return _dtw_from_cost(d)


def _dtw_from_cost(d):
    ta, tb = d.shape
    gsum = np.empty((ta, tb), dtype=np.float64)
    glen = np.empty((ta, tb), dtype=np.int64)
    gsum[0, 0] = d[0, 0]
    glen[0, 0] = 1
    for j in range(1, tb):
        gsum[0, j] = gsum[0, j - 1] + d[0, j]
        glen[0, j] = j + 1
    for i in range(1, ta):
        gsum[i, 0] = gsum[i - 1, 0] + d[i, 0]
        glen[i, 0] = i + 1
        row = d[i]
        for j in range(1, tb):
            bs, bl = gsum[i - 1, j - 1], glen[i - 1, j - 1]
            if gsum[i - 1, j] < bs or (gsum[i - 1, j] == bs and glen[i - 1, j] < bl):
                bs, bl = gsum[i - 1, j], glen[i - 1, j]
            if gsum[i, j - 1] < bs or (gsum[i, j - 1] == bs and glen[i, j - 1] < bl):
                bs, bl = gsum[i, j - 1], glen[i, j - 1]
            gsum[i, j] = bs + row[j]
            glen[i, j] = bl + 1
    return float(gsum[-1, -1] / glen[-1, -1])


def _score_from_distances(d_ax, d_bx):
    if d_ax < d_bx:
        return 1.0
    if d_ax > d_bx:
        return 0.0
    return 0.5


def score_triple(triple: AbxTriple, features) -> float:
    """1 if dtw(a,x) < dtw(b,x), 0 if greater, 0.5 on an exact tie."""
    slices = []
    for it in (triple.a, triple.b, triple.x):
        fs = features.get(it.utterance_id)
        if fs is None:
            raise MissingFeatures(f"no features for utterance {it.utterance_id!r}")
        slices.append(slice_item(fs, it))
    sa, sb, sx = slices
    return _score_from_distances(dtw_distance(sa, sx), dtw_distance(sb, sx))


def units_to_features(us: UnitSequence, k=None, frame_rate_hz=100.0) -> FeatureSequence:
    """One-hot encode units so discretized systems score under the same
    frame metric (distinct units sit at angular distance 0.5)."""
    k = us.k if k is None else int(k)
    frames = np.zeros((len(us), k), dtype=np.float32)
    frames[np.arange(len(us)), us.units] = 1.0
    return FeatureSequence(
        frames=frames, frame_rate_hz=frame_rate_hz, utterance_id=us.utterance_id
    )


def _decode_within(flat, n_a, n_b):
    ib = flat % n_b
    pair = flat // n_b
    ia = pair // (n_a - 1)
    ir = pair % (n_a - 1)
    ix = ir + (1 if ir >= ia else 0)
    return ia, ib, ix


def _decode_across(flat, n_b, n_x):
    ix = flat % n_x
    rest = flat // n_x
    ib = rest % n_b
    ia = rest // n_b
    return ia, ib, ix


def _build_cells(items, condition):
    """Group item indices into cells keyed by phone pair, context, and
    speaker assignment; returns {key: (a_indices, b_indices, x_indices)}."""
    cells = {}
    if condition == "within":
        groups = {}
        for idx, it in enumerate(items):
            groups.setdefault((it.context, it.speaker_id), {}).setdefault(
                it.phone, []
            ).append(idx)
        for (ctx, spk), by_phone in groups.items():
            phones = sorted(by_phone)
            for pa in phones:
                if len(by_phone[pa]) < 2:
                    continue
                for pb in phones:
                    if pb == pa:
                        continue
                    key = (pa, pb, ctx[0], ctx[1], spk)
                    cells[key] = (by_phone[pa], by_phone[pb], by_phone[pa])
    elif condition == "across":
        groups = {}
        for idx, it in enumerate(items):
            groups.setdefault(it.context, {}).setdefault(it.phone, {}).setdefault(
                it.speaker_id, []
            ).append(idx)
        for ctx, by_phone in groups.items():
            phones = sorted(by_phone)
            for pa in phones:
                for pb in phones:
                    if pb == pa:
                        continue
                    for s_ab, a_idx in by_phone[pa].items():
                        b_idx = by_phone[pb].get(s_ab)
                        if not b_idx:
                            continue
                        for s_x, x_idx in by_phone[pa].items():
                            if s_x == s_ab:
                                continue
                            key = (pa, pb, ctx[0], ctx[1], s_ab, s_x)
                            cells[key] = (a_idx, b_idx, x_idx)
    else:
        raise ValueError(f"unknown condition {condition!r}")
    return cells


def abx_cell_scores(items, features, condition, max_triples_per_cell=1000, seed=0):
    """Raw per-cell mean triple scores, keyed by (phone_a, phone_b, prev,
    next, speaker assignment); returns (cell_scores, n_triples)."""
    items = list(items)
    slices = []
    n_zero = 0
    for it in items:
        fs = features.get(it.utterance_id)
        if fs is None:
            raise MissingFeatures(f"no features for utterance {it.utterance_id!r}")
        slices.append(slice_item(fs, it))

    cells = _build_cells(items, condition)
    if not cells:
        raise NoValidCells(
            f"no scoreable {condition} cells (need 2+ same-phone tokens per cell"
            + (", 2+ speakers" if condition == "across" else "")
            + ")"
        )

    dtw_cache = {}

    def cached_dtw(i, j):
        nonlocal n_zero
        key = (i, j) if i <= j else (j, i)
        hit = dtw_cache.get(key)
        if hit is None:
            cost, nz = _angular_matrix(slices[key[0]], slices[key[1]])
            n_zero += nz
            hit = _dtw_from_cost(cost)
            dtw_cache[key] = hit
        return hit

    cell_scores = {}
    n_triples = 0
    for key in sorted(cells):
        a_idx, b_idx, x_idx = cells[key]
        n_a, n_b, n_x = len(a_idx), len(b_idx), len(x_idx)
        if condition == "within":
            count = n_a * (n_a - 1) * n_b
            decode = lambda f: _decode_within(f, n_a, n_b)
        else:
            count = n_a * n_b * n_x
            decode = lambda f: _decode_across(f, n_b, n_x)
        if count > max_triples_per_cell:
            cell_rng = rng_from_seed(derive_seed(seed, "cell", condition, *key))
            flats = np.sort(
                cell_rng.choice(count, size=max_triples_per_cell, replace=False)
            )
        else:
            flats = range(count)
        total = 0.0
        n = 0
        for flat in flats:
            ia, ib, ix = decode(int(flat))
            a, b, x = a_idx[ia], b_idx[ib], x_idx[ix]
            total += _score_from_distances(cached_dtw(a, x), cached_dtw(b, x))
            n += 1
        cell_scores[key] = total / n
        n_triples += n

    if n_zero:
        warnings.warn(
            f"{n_zero} zero-norm frame(s) encountered; their cosine was taken as 0",
            stacklevel=2,
        )
    return cell_scores, n_triples


def abx_error(
    items,
    features,
    condition,
    max_triples_per_cell=1000,
    seed=0,
) -> AbxScore:
    """ABX error over all valid cells.

    Cells larger than max_triples_per_cell are subsampled uniformly with
    a per-cell seed derived from (seed, cell key) so evaluation order
    cannot change results. Cell scores for phone pairs (A,B) and (B,A)
    under the same speaker assignment are averaged before the final
    unweighted mean; the error is 1 minus that mean.
    """
    cell_scores, n_triples = abx_cell_scores(
        items, features, condition, max_triples_per_cell, seed
    )

    # symmetrize phone order within the same context and speaker assignment
    sym = {}
    for key, score in cell_scores.items():
        pa, pb, rest = key[0], key[1], key[2:]
        canon = (min(pa, pb), max(pa, pb)) + rest
        sym.setdefault(canon, []).append(score)
    mean_cells = [sum(v) / len(v) for _, v in sorted(sym.items())]
    error = 1.0 - (sum(mean_cells) / len(mean_cells))
    return AbxScore(
        error_rate=float(error),
        n_triples=int(n_triples),
        n_cells=len(mean_cells),
        condition=condition,
    )
