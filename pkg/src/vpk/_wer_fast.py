"""Compiled edit-distance kernel; logic mirrors wer._align_counts_py."""

import numpy as np
from numba import njit


@njit("UniTuple(int64, 3)(int64[::1], int64[::1])", cache=True, nogil=True)
def align_counts(ref_ids, hyp_ids):
    rl = ref_ids.shape[0]
    hl = hyp_ids.shape[0]
    width = hl + 1
    grid = np.empty((rl + 1, width), np.int64)
    for j in range(width):
        grid[0, j] = j
    for i in range(1, rl + 1):
        grid[i, 0] = i
        ri = ref_ids[i - 1]
        for j in range(1, width):
            sub = grid[i - 1, j - 1] + (0 if ri == hyp_ids[j - 1] else 1)
            dele = grid[i - 1, j] + 1
            ins = grid[i, j - 1] + 1
            best = sub
            if dele < best:
                best = dele
            if ins < best:
                best = ins
            grid[i, j] = best
    s = 0
    d = 0
    ins_n = 0
    i = rl
    j = hl
    while i > 0 or j > 0:
        cur = grid[i, j]
        if i > 0 and j > 0:
            miss = 0 if ref_ids[i - 1] == hyp_ids[j - 1] else 1
            if cur == grid[i - 1, j - 1] + miss:
                s += miss
                i -= 1
                j -= 1
                continue
        if i > 0 and cur == grid[i - 1, j] + 1:
            d += 1
            i -= 1
        else:
            ins_n += 1
            j -= 1
    return s, d, ins_n
