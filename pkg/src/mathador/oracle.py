"""Exhaustive solver: what is reachable, how, and how hard it is.

Everything here is a view over one enumeration of the 470,480 expression
skeletons (see skeletons). `reachable_targets` profiles an entire target
range in a single kernel pass; `solve` materializes the expressions that
hit one target. Results are deterministic: solutions come back in
canonical skeleton order regardless of kernel backend.

Difficulty of a target t with solution set E_t is
``sum(scores) / len(E_t)**2`` — the mean solution score diluted by how
many solutions exist, so rich targets rank easy even when individual
solutions score high. Kept exact as a Fraction; callers serialize as
float.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from . import _kernel, skeletons
from .game import (
    Expression,
    Instance,
    expression_to_steps,
    render_steps,
    validate_operands,
)

DEFAULT_TARGET_RANGE = (1, 100)


@dataclass(frozen=True)
class TargetProfile:
    """Aggregate solution statistics for one target over one operand set."""

    target: int
    count: int
    score_sum: int
    max_score: int

    @property
    def difficulty(self) -> Fraction:
        if self.count == 0:
            raise ValueError(f"target {self.target} is unreachable; difficulty undefined")
        return Fraction(self.score_sum, self.count * self.count)


@dataclass(frozen=True)
class SolutionSet:
    """Every expression reaching a target, with scores, in canonical order.

    ``best`` indexes a maximum-score solution; among equals the one whose
    rendered step list is lexicographically smallest wins, then canonical
    order. Empty set (unreachable target) has ``best`` None.
    """

    target: int
    solutions: tuple[tuple[Expression, int], ...]
    best: int | None

    @property
    def count(self) -> int:
        return len(self.solutions)

    @property
    def score_sum(self) -> int:
        return sum(score for _, score in self.solutions)

    @property
    def max_score(self) -> int:
        return self.solutions[self.best][1] if self.solutions else 0

    @property
    def best_expression(self) -> Expression | None:
        return self.solutions[self.best][0] if self.solutions else None

    def profile(self) -> TargetProfile:
        return TargetProfile(self.target, self.count, self.score_sum, self.max_score)


def enumerate_expressions(
    operands: Sequence[int], sizes: tuple[int, ...] | None = None
) -> Iterator[Expression]:
    """Stream every expression skeleton (optionally only given sizes).

    The stream is value-independent — leaves are slot indices — but the
    operand set is validated here because callers zip the two together.
    """
    validate_operands(operands)
    return skeletons.iter_expressions(sizes)


def solve(instance: Instance) -> SolutionSet:
    """All expressions over the instance's operands that hit its target."""
    ids, scores = _kernel.solution_hits(instance.operands, instance.target)
    solutions = tuple(
        (skeletons.expression_for(int(sid)), int(score))
        for sid, score in zip(ids, scores)
    )
    best = None
    if solutions:
        top = max(score for _, score in solutions)
        best = min(
            (i for i, (_, score) in enumerate(solutions) if score == top),
            key=lambda i: render_steps(
                expression_to_steps(solutions[i][0], instance.operands)
            ),
        )
    return SolutionSet(instance.target, solutions, best)


def reachable_targets(
    operands: Sequence[int],
    target_range: tuple[int, int] = DEFAULT_TARGET_RANGE,
) -> list[TargetProfile]:
    """Profiles of every reachable target in the range, ascending, one pass."""
    operands = validate_operands(operands)
    lo, hi = target_range
    if lo < 1 or hi < lo:
        raise ValueError(f"target range must satisfy 1 <= lo <= hi, got {target_range}")
    counts, sums, maxs = _kernel.profile_targets(operands, lo, hi)
    return [
        TargetProfile(lo + i, int(c), int(s), int(m))
        for i, (c, s, m) in enumerate(zip(counts, sums, maxs))
        if c > 0
    ]


def difficulty(profile: TargetProfile) -> Fraction:
    return profile.difficulty


def total_expressions() -> int:
    """Size of the full enumeration space (all operand sets share it)."""
    return skeletons.total_count()
