"""Word error rate from minimal edit-distance alignment.

Alignment uses unit costs for substitution, deletion, and insertion with
a fixed tie-break (substitution, then deletion, then insertion) so the
breakdown counts are reproducible; the total edit count is tie-free.
Corpus WER pools the integer counts over utterances, it is not a mean of
per-utterance rates.
"""

import math
import warnings
from typing import NamedTuple

import numpy as np

from .errors import EmptyCorpus


class WerBreakdown(NamedTuple):
    substitutions: int
    deletions: int
    insertions: int
    ref_word_count: int
    wer: float

    @classmethod
    def from_counts(cls, s, d, i, n):
        if n > 0:
            rate = (s + d + i) / n
        else:
            # empty reference: any hypothesis word is pure insertion
            rate = math.inf if i > 0 else 0.0
        return cls(int(s), int(d), int(i), int(n), rate)

    @property
    def total_edits(self):
        return self.substitutions + self.deletions + self.insertions


def tokenize(text):
    """Uppercase, drop punctuation except apostrophes, split on whitespace."""
    kept = []
    for ch in text.upper():
        if ch.isalnum() or ch == "'" or ch.isspace():
            kept.append(ch)
    return "".join(kept).split()


def _align_counts_py(ref_ids, hyp_ids):
    rl, hl = len(ref_ids), len(hyp_ids)
    width = hl + 1
    d = list(range(width))
    grid = [d[:]]
    for i in range(1, rl + 1):
        prev = d
        d = [i] + [0] * hl
        ri = ref_ids[i - 1]
        for j in range(1, width):
            sub = prev[j - 1] + (ri != hyp_ids[j - 1])
            dele = prev[j] + 1
            ins = d[j - 1] + 1
            best = sub
            if dele < best:
                best = dele
            if ins < best:
                best = ins
            d[j] = best
        grid.append(d)
    s = dele = ins = 0
    i, j = rl, hl
    while i > 0 or j > 0:
        cur = grid[i][j]
        if i > 0 and j > 0 and cur == grid[i - 1][j - 1] + (ref_ids[i - 1] != hyp_ids[j - 1]):
            s += ref_ids[i - 1] != hyp_ids[j - 1]
            i -= 1
            j -= 1
        elif i > 0 and cur == grid[i - 1][j] + 1:
            dele += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return s, dele, ins


_fast_counts = None
_fast_ready = False


def _get_fast_counts():
    # jit-compiled kernel, loaded on first use; pure-python fallback keeps
    # the module importable without the compiler
    global _fast_counts, _fast_ready
    if not _fast_ready:
        _fast_ready = True
        try:
            from ._wer_fast import align_counts

            align_counts(np.zeros(1, np.int64), np.zeros(1, np.int64))
            _fast_counts = align_counts
        except Exception:
            _fast_counts = None
    return _fast_counts


def align(ref, hyp) -> WerBreakdown:
    """Alignment counts between tokenized reference and hypothesis."""
    ids = {}
    n, m = len(ref), len(hyp)
    fast = _fast_counts if _fast_ready else _get_fast_counts()
    if fast is not None:
        # one allocation for both sequences; slices stay contiguous
        sd = ids.setdefault
        both = np.array(
            [sd(w, len(ids)) for w in ref] + [sd(w, len(ids)) for w in hyp],
            np.int64,
        )
        s, d, i = fast(both[:n], both[n:])
    else:
        r = [ids.setdefault(w, len(ids)) for w in ref]
        h = [ids.setdefault(w, len(ids)) for w in hyp]
        s, d, i = _align_counts_py(r, h)
    return WerBreakdown.from_counts(s, d, i, n)


def corpus_wer(pairs) -> WerBreakdown:
    """Pooled WER over (ref, hyp) token-list pairs.

    Utterances with an empty reference are excluded from pooling (with a
    warning); their per-utterance rate would be undefined.
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyCorpus("no utterance pairs to score")
    ts = td = ti = tn = 0
    skipped = 0
    for ref, hyp in pairs:
        if len(ref) == 0:
            skipped += 1
            continue
        b = align(ref, hyp)
        ts += b.substitutions
        td += b.deletions
        ti += b.insertions
        tn += b.ref_word_count
    if skipped:
        warnings.warn(
            f"excluded {skipped} empty-reference utterance(s) from pooled WER",
            stacklevel=2,
        )
    if tn == 0:
        raise EmptyCorpus("no scoreable utterances (all references empty)")
    return WerBreakdown.from_counts(ts, td, ti, tn)
