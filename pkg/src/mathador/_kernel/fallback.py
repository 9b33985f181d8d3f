"""Vectorized fallback kernel, used when the compiled extension is absent.

Evaluates the expression space one (size, shape) block at a time as dense
(selection rows x operator tuples) integer arrays. Invalid lanes (negative
differences, inexact divisions) are masked rather than skipped; their
values keep flowing through later nodes as garbage, which is harmless
because the mask travels with them and magnitudes stay far below int64.
"""

from __future__ import annotations

import numpy as np

from .. import skeletons

NAME = "fallback"


def _eval_shape(leaf_vals: np.ndarray, program, k: int, n_tuples: int):
    """Final-value and validity arrays of shape (rows, n_tuples)."""
    t = np.arange(n_tuples, dtype=np.int64)
    valid = np.ones((leaf_vals.shape[0], n_tuples), dtype=bool)
    nodes: list[np.ndarray] = []

    def operand(ref: int) -> np.ndarray:
        if ref < k:
            return leaf_vals[:, ref : ref + 1]  # (rows, 1), broadcasts over tuples
        return nodes[ref - k]

    for n in range(k - 1):
        ops = (t >> int(program.shift[n])) & 3
        a = operand(int(program.left[n]))
        b = operand(int(program.right[n]))
        add = a + b
        sub = a - b
        mul = a * b
        bsafe = np.where(b == 0, 1, b)  # dodge the hardware trap only; masked below
        quot = a // bsafe
        value = np.select([ops == 0, ops == 1, ops == 2], [add, sub, mul], default=quot)
        valid &= np.where(ops == 1, sub >= 0, True)
        valid &= np.where(ops == 3, (b != 0) & (quot * bsafe == a), True)
        nodes.append(value)
    return nodes[-1], valid


def profile_targets(values, lo: int, hi: int):
    """Per-target (count, score sum, max score) arrays for targets in [lo, hi]."""
    span = hi - lo + 1
    counts = np.zeros(span, dtype=np.int64)
    sums = np.zeros(span, dtype=np.float64)  # bincount weights; exact well below 2**53
    maxs = np.zeros(span, dtype=np.int64)
    vals = np.asarray(values, dtype=np.int64)
    for st in skeletons.tables():
        leaf_vals = vals[st.perms]
        for program in st.programs:
            final, valid = _eval_shape(leaf_vals, program, st.k, st.n_tuples)
            ok = valid & (final >= lo) & (final <= hi)
            if not ok.any():
                continue
            idx = final[ok] - lo
            sc = np.broadcast_to(st.tuple_scores, final.shape)[ok]
            counts += np.bincount(idx, minlength=span)
            sums += np.bincount(idx, weights=sc, minlength=span)
            np.maximum.at(maxs, idx, sc)
    return counts, sums.astype(np.int64), maxs


def solution_hits(values, target: int):
    """(skeleton ids, scores) of every expression evaluating to target, id order."""
    vals = np.asarray(values, dtype=np.int64)
    all_ids = []
    all_scores = []
    for st in skeletons.tables():
        leaf_vals = vals[st.perms]
        for si, program in enumerate(st.programs):
            final, valid = _eval_shape(leaf_vals, program, st.k, st.n_tuples)
            rows, tups = np.nonzero(valid & (final == target))
            if rows.size == 0:
                continue
            ids = st.base_id + (rows.astype(np.int64) * st.n_shapes + si) * st.n_tuples + tups
            all_ids.append(ids)
            all_scores.append(st.tuple_scores[tups])
    if not all_ids:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    ids = np.concatenate(all_ids)
    scores = np.concatenate(all_scores)
    order = np.argsort(ids, kind="stable")
    return ids[order], scores[order]
