"""Canonical enumeration tables for the expression space.

Every candidate expression over the five operand slots factors into three
value-independent choices: an ordered selection of k slots (k = 2..5), a
binary tree shape with k leaves, and an operator for each of the k-1
internal nodes. This module builds those tables once; the compiled and
fallback kernels, the expression stream, and skeleton-id round trips all
read the same arrays, so there is exactly one definition of the order.

Canonical order, which fixes skeleton ids and every "deterministic order"
promise downstream: k ascending; slot selections in
itertools.permutations(range(5), k) order; shapes in left-subtree-size-major
recursive order; operator tuples as base-4 integers where the root
(preorder index 0) holds the most significant digit and the digit values
follow Operation (ADD=0, SUB=1, MUL=2, DIV=3).

Totals per k: 20/60/120/120 selections, 1/2/5/14 shapes, 4^(k-1) operator
tuples — 80 + 1 920 + 38 400 + 430 080 = 470 480 expressions overall.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cache
from itertools import permutations
from typing import Iterator

import numpy as np

from .game import NUM_SLOTS, Expression, OpNode, Operation

_OPS = (Operation.ADD, Operation.SUB, Operation.MUL, Operation.DIV)
_DIGIT_POINTS = np.array([op.points for op in _OPS], dtype=np.int64)

# Nested-tuple tree shape: None is a leaf, (left, right) an internal node.
Shape = object


@cache
def shapes_with_leaves(n: int) -> tuple[Shape, ...]:
    if n == 1:
        return (None,)
    out = []
    for left in range(1, n):
        for ls in shapes_with_leaves(left):
            for rs in shapes_with_leaves(n - left):
                out.append((ls, rs))
    return tuple(out)


@dataclass(frozen=True)
class ShapeProgram:
    """One tree shape compiled to a node program.

    Nodes are listed children-first (evaluation order). ``left``/``right``
    are operand references: values < k name a leaf (index into the slot
    selection, left-to-right), values >= k name the result of node
    ``ref - k``. ``shift`` is the bit offset of the node's operator digit
    inside an operator-tuple integer.
    """

    structure: Shape
    left: np.ndarray
    right: np.ndarray
    shift: np.ndarray


def _compile_shape(structure: Shape, k: int) -> ShapeProgram:
    nops = k - 1
    left, right, shift = [], [], []
    counters = {"leaf": 0, "pre": 0}

    def walk(node: Shape) -> int:
        if node is None:
            ref = counters["leaf"]
            counters["leaf"] += 1
            return ref
        pre = counters["pre"]
        counters["pre"] += 1
        lref = walk(node[0])
        rref = walk(node[1])
        left.append(lref)
        right.append(rref)
        shift.append(2 * (nops - 1 - pre))
        return k + len(left) - 1

    walk(structure)
    return ShapeProgram(
        structure,
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.array(shift, dtype=np.int32),
    )


@dataclass(frozen=True)
class SizeTables:
    """Everything the kernels need for one expression size k."""

    k: int
    base_id: int
    perms: np.ndarray              # (rows, k) int32 slot indices
    programs: tuple[ShapeProgram, ...]
    lefts: np.ndarray              # (shapes, k-1) int32, stacked programs
    rights: np.ndarray
    shifts: np.ndarray
    n_tuples: int                  # 4**(k-1)
    tuple_scores: np.ndarray       # (n_tuples,) int64: 5 + op points (+6 bonus)

    @property
    def n_rows(self) -> int:
        return self.perms.shape[0]

    @property
    def n_shapes(self) -> int:
        return len(self.programs)

    @property
    def span(self) -> int:
        return self.n_rows * self.n_shapes * self.n_tuples


def _tuple_scores(k: int) -> np.ndarray:
    nops = k - 1
    t = np.arange(4 ** nops, dtype=np.int64)
    digits = np.stack([(t >> (2 * d)) & 3 for d in range(nops)])
    scores = 5 + _DIGIT_POINTS[digits].sum(axis=0)
    if k == NUM_SLOTS:
        one_of_each = np.ones(t.shape, dtype=bool)
        for op in range(4):
            one_of_each &= (digits == op).sum(axis=0) == 1
        scores += 6 * one_of_each
    return scores


@cache
def tables() -> tuple[SizeTables, ...]:
    out = []
    base = 0
    for k in range(2, NUM_SLOTS + 1):
        perms = np.array(list(permutations(range(NUM_SLOTS), k)), dtype=np.int32)
        programs = tuple(_compile_shape(s, k) for s in shapes_with_leaves(k))
        st = SizeTables(
            k=k,
            base_id=base,
            perms=perms,
            programs=programs,
            lefts=np.stack([p.left for p in programs]),
            rights=np.stack([p.right for p in programs]),
            shifts=np.stack([p.shift for p in programs]),
            n_tuples=4 ** (k - 1),
            tuple_scores=_tuple_scores(k),
        )
        out.append(st)
        base += st.span
    return tuple(out)


def total_count() -> int:
    return sum(st.span for st in tables())


# ======================================================================
# Skeleton ids <-> expressions
# ======================================================================


def decode_id(skeleton_id: int) -> tuple[int, int, int, int]:
    """Split a skeleton id into (k, selection row, shape index, op tuple)."""
    for st in tables():
        if skeleton_id < st.base_id + st.span:
            local = skeleton_id - st.base_id
            if local < 0:
                break
            tup = local % st.n_tuples
            local //= st.n_tuples
            return st.k, local // st.n_shapes, local % st.n_shapes, tup
    raise ValueError(f"skeleton id out of range: {skeleton_id}")


def encode_id(k: int, row: int, shape_idx: int, tup: int) -> int:
    st = tables()[k - 2]
    return st.base_id + ((row * st.n_shapes) + shape_idx) * st.n_tuples + tup


def _build(structure: Shape, slots, tup: int, nops: int) -> Expression:
    counters = {"leaf": 0, "pre": 0}

    def walk(node: Shape) -> Expression:
        if node is None:
            slot = slots[counters["leaf"]]
            counters["leaf"] += 1
            return int(slot)
        pre = counters["pre"]
        counters["pre"] += 1
        op = _OPS[(tup >> (2 * (nops - 1 - pre))) & 3]
        return OpNode(op, walk(node[0]), walk(node[1]))

    return walk(structure)


def expression_for(skeleton_id: int) -> Expression:
    """Materialize the expression tree for a skeleton id."""
    k, row, shape_idx, tup = decode_id(skeleton_id)
    st = tables()[k - 2]
    return _build(st.programs[shape_idx].structure, st.perms[row], tup, k - 1)


def iter_expressions(sizes: tuple[int, ...] | None = None) -> Iterator[Expression]:
    """Every expression skeleton, in canonical (id) order."""
    for st in tables():
        if sizes is not None and st.k not in sizes:
            continue
        nops = st.k - 1
        for slots in st.perms.tolist():
            for program in st.programs:
                for tup in range(st.n_tuples):
                    yield _build(program.structure, slots, tup, nops)
