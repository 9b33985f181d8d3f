"""Backend API over the compiled streaming kernel."""

from __future__ import annotations

import numpy as np

from .. import skeletons
from . import _engine

NAME = "compiled"


def profile_targets(values, lo: int, hi: int):
    """Per-target (count, score sum, max score) arrays for targets in [lo, hi]."""
    span = hi - lo + 1
    counts = np.zeros(span, dtype=np.int64)
    sums = np.zeros(span, dtype=np.int64)
    maxs = np.zeros(span, dtype=np.int64)
    vals = np.ascontiguousarray(values, dtype=np.int64)
    for st in skeletons.tables():
        _engine.profile_k(vals, st.k, st.perms, st.lefts, st.rights, st.shifts,
                          lo, hi, counts, sums, maxs)
    return counts, sums, maxs


def solution_hits(values, target: int):
    """(skeleton ids, scores) of every expression evaluating to target, id order."""
    vals = np.ascontiguousarray(values, dtype=np.int64)
    ids: list[int] = []
    scores: list[int] = []
    for st in skeletons.tables():
        i, s = _engine.collect_k(vals, st.k, st.perms, st.lefts, st.rights, st.shifts,
                                 target, st.base_id)
        ids.extend(i)
        scores.extend(s)
    return np.array(ids, dtype=np.int64), np.array(scores, dtype=np.int64)
