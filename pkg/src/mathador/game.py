"""Core rules of the Mathador arithmetic game.

An instance gives five base numbers and a target. A play is a chain of
binary arithmetic steps: each step combines two available numbers (a base
number not yet consumed, or the result of an earlier step) and makes its
result available. Every intermediate must be a non-negative integer —
subtraction may not go below zero and division must be exact.

Scoring: reaching the target is worth 5 points plus per-operation points
(addition 1, multiplication 1, subtraction 2, division 3), and a solution
that consumes all five base numbers while using each of the four operators
exactly once earns a 6-point bonus. Anything invalid scores 0, so valid
totals lie in [6, 18] and 18 is exactly the bonus case.

Expressions are binary trees whose leaves are operand *slot indices*
(0..4), so the same tree can be evaluated against any concrete operand
set. Step lists are the wire format: what a model prints, what the prompt
shows, and what `score_steps` judges.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

TARGET_POINTS = 5
BONUS_POINTS = 6
MIN_VALID_SCORE = 6   # target + one addition
MAX_SCORE = 18        # target + Add+Mul+Sub+Div points + bonus
NUM_SLOTS = 5


class Operation(enum.IntEnum):
    """The four operators, in canonical digit order."""

    ADD = 0
    SUB = 1
    MUL = 2
    DIV = 3

    @property
    def points(self) -> int:
        return _POINTS[self]

    @property
    def symbol(self) -> str:
        return _SYMBOLS[self]


_POINTS = {Operation.ADD: 1, Operation.SUB: 2, Operation.MUL: 1, Operation.DIV: 3}
_SYMBOLS = {Operation.ADD: "+", Operation.SUB: "-", Operation.MUL: "*", Operation.DIV: "/"}


class InvalidReason(enum.Enum):
    """Why a step list scores zero."""

    MISSED_TARGET = "missed_target"
    REUSE_OF_NUMBERS = "reuse_of_numbers"
    NEGATIVE_INTERMEDIATE = "negative_intermediate"
    NON_INTEGER_INTERMEDIATE = "non_integer_intermediate"
    NO_STEPS = "no_steps"


class OpNode(NamedTuple):
    op: Operation
    left: "Expression"
    right: "Expression"


# A leaf is an operand slot index (0..4); an internal node applies its
# operator to the two subtree values.
Expression = Union[OpNode, int]


class Step(NamedTuple):
    """One printed line of play: ``lhs op rhs = result``.

    ``result`` is whatever the author of the step wrote. Steps rendered
    from an expression carry true results; scoring never trusts the field
    and recomputes.
    """

    lhs: int
    op: Operation
    rhs: int
    result: int


def validate_operands(values: Sequence[int]) -> tuple[int, int, int, int, int]:
    """Check and normalize an operand set: exactly five positive integers."""
    operands = tuple(values)
    if len(operands) != NUM_SLOTS:
        raise ValueError(f"expected {NUM_SLOTS} operands, got {len(operands)}")
    for v in operands:
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ValueError(f"operands must be positive integers, got {v!r}")
    return operands


@dataclass(frozen=True)
class Instance:
    """Five base numbers plus a target."""

    operands: tuple[int, int, int, int, int]
    target: int

    def __post_init__(self):
        object.__setattr__(self, "operands", validate_operands(self.operands))
        if not isinstance(self.target, int) or isinstance(self.target, bool) or self.target < 1:
            raise ValueError(f"target must be a positive integer, got {self.target!r}")


@dataclass(frozen=True)
class ScoreBreakdown:
    target_points: int
    op_points: int
    bonus: bool

    @property
    def total(self) -> int:
        return self.target_points + self.op_points + (BONUS_POINTS if self.bonus else 0)


@dataclass(frozen=True)
class Verdict:
    """Outcome of scoring a step list: a breakdown, or a zero with a reason."""

    breakdown: ScoreBreakdown | None
    reason: InvalidReason | None

    @property
    def valid(self) -> bool:
        return self.breakdown is not None

    @property
    def total(self) -> int:
        return self.breakdown.total if self.breakdown else 0

    @staticmethod
    def invalid(reason: InvalidReason) -> "Verdict":
        return Verdict(None, reason)


class InvalidExpressionError(ValueError):
    """Raised when rendering an expression that does not evaluate validly."""

    def __init__(self, reason: InvalidReason):
        super().__init__(reason.value)
        self.reason = reason


# ======================================================================
# Arithmetic
# ======================================================================


def apply_operation(op: Operation, lhs: int, rhs: int) -> int | InvalidReason:
    """Apply one operator under game rules.

    Returns the integer result, or the reason the step is illegal
    (negative difference, or a division that is not exact).
    """
    if op is Operation.ADD:
        return lhs + rhs
    if op is Operation.SUB:
        diff = lhs - rhs
        return diff if diff >= 0 else InvalidReason.NEGATIVE_INTERMEDIATE
    if op is Operation.MUL:
        return lhs * rhs
    if rhs == 0 or lhs % rhs != 0:
        return InvalidReason.NON_INTEGER_INTERMEDIATE
    return lhs // rhs


# ======================================================================
# Expressions
# ======================================================================


def evaluate_expression(expr: Expression, operands: Sequence[int]) -> int | InvalidReason:
    """Value of the expression over concrete operands, or why it is invalid.

    Leaves index into ``operands``; a slot out of range is a caller bug and
    raises IndexError.
    """
    if isinstance(expr, int):
        return operands[expr]
    left = evaluate_expression(expr.left, operands)
    if isinstance(left, InvalidReason):
        return left
    right = evaluate_expression(expr.right, operands)
    if isinstance(right, InvalidReason):
        return right
    return apply_operation(expr.op, left, right)


def expression_slots(expr: Expression) -> list[int]:
    """Leaf slot indices in left-to-right order."""
    if isinstance(expr, int):
        return [expr]
    return expression_slots(expr.left) + expression_slots(expr.right)


def expression_to_steps(expr: Expression, operands: Sequence[int]) -> list[Step]:
    """Render an expression as its step list (children before parents).

    Each internal node becomes one line with true operand values and the
    true result. Raises InvalidExpressionError if any node is illegal.
    """
    steps: list[Step] = []

    def walk(node: Expression) -> int:
        if isinstance(node, int):
            return operands[node]
        lhs = walk(node.left)
        rhs = walk(node.right)
        value = apply_operation(node.op, lhs, rhs)
        if isinstance(value, InvalidReason):
            raise InvalidExpressionError(value)
        steps.append(Step(lhs, node.op, rhs, value))
        return value

    walk(expr)
    return steps


def expression_score(expr: Expression) -> int:
    """Score the expression earns when its value is the target (assuming it
    evaluates validly over its operand set)."""
    ops = Counter()

    def walk(node: Expression) -> int:
        if isinstance(node, int):
            return 1
        ops[node.op] += 1
        return walk(node.left) + walk(node.right)

    leaves = walk(expr)
    bonus = leaves == NUM_SLOTS and all(ops[op] == 1 for op in Operation)
    op_points = sum(op.points * n for op, n in ops.items())
    return TARGET_POINTS + op_points + (BONUS_POINTS if bonus else 0)


def render_steps(steps: Sequence[Step]) -> str:
    """Canonical one-step-per-line text form."""
    return "\n".join(f"{s.lhs} {s.op.symbol} {s.rhs} = {s.result}" for s in steps)


# ======================================================================
# Step-list scoring
# ======================================================================


def dependency_closure(
    steps: Sequence,
    produced: Sequence[int | None],
    base_values: Sequence[int],
) -> list[int]:
    """Indices of the steps the final step transitively depends on.

    Each step's inputs (``.lhs``/``.rhs`` attributes) are resolved against
    the base numbers plus earlier steps' ``produced`` values, preferring the
    most recently produced unconsumed intermediate over a base number.
    Prefer-intermediate keeps rendered expression chains intact (an
    intermediate that happens to equal a base value must still link to its
    producing step, or render→score round trips break); scratch work that
    feeds nothing is left out. An input that matches nothing consumes
    nothing — legality is the replay's job, not ours.

    ``produced[i]`` is step i's usable output value, or None if it has none
    (e.g. its true result is not a non-negative integer).
    """
    base_pool = Counter(base_values)
    open_results: list[tuple[int, int]] = []  # (producer index, value), oldest first
    deps: list[set[int]] = []
    for i, step in enumerate(steps):
        used: set[int] = set()
        for value in (step.lhs, step.rhs):
            for j in range(len(open_results) - 1, -1, -1):
                if open_results[j][1] == value:
                    used.add(open_results.pop(j)[0])
                    break
            else:
                if base_pool[value] > 0:
                    base_pool[value] -= 1
        deps.append(used)
        if produced[i] is not None:
            open_results.append((i, produced[i]))

    keep: set[int] = set()
    stack = [len(steps) - 1]
    while stack:
        i = stack.pop()
        if i in keep:
            continue
        keep.add(i)
        stack.extend(deps[i])
    return sorted(keep)


def score_steps(steps: Sequence[Step], instance: Instance) -> Verdict:
    """Judge a step list against an instance.

    The list is pruned to the dependency closure of its final step, then
    replayed: every input must be available (base numbers at most once,
    intermediates only after production), every result must be a
    non-negative integer, and the last result must equal the target.
    Results are recomputed — the ``result`` fields are ignored.

    Accepts any step list; garbage comes back as an invalid Verdict.
    """
    if not steps:
        return Verdict.invalid(InvalidReason.NO_STEPS)

    produced = []
    for s in steps:
        value = apply_operation(s.op, s.lhs, s.rhs)
        produced.append(None if isinstance(value, InvalidReason) else value)
    kept = dependency_closure(steps, produced, instance.operands)

    available = Counter(instance.operands)
    ops = Counter()
    op_points = 0
    final = None
    for i in kept:
        s = steps[i]
        for value in (s.lhs, s.rhs):
            if available[value] <= 0:
                return Verdict.invalid(InvalidReason.REUSE_OF_NUMBERS)
            available[value] -= 1
        result = apply_operation(s.op, s.lhs, s.rhs)
        if isinstance(result, InvalidReason):
            return Verdict.invalid(result)
        available[result] += 1
        ops[s.op] += 1
        op_points += s.op.points
        final = result

    if final != instance.target:
        return Verdict.invalid(InvalidReason.MISSED_TARGET)

    # A valid 4-step closure consumes 8 inputs, and every non-final step's
    # result is consumed within the chain (that is what put it in the
    # closure), so 3 inputs are intermediates and the other 5 are
    # necessarily all five base numbers. Hence no base-usage bookkeeping:
    bonus = len(kept) == 4 and all(ops[op] == 1 for op in Operation)
    return Verdict(ScoreBreakdown(TARGET_POINTS, op_points, bonus), None)


def accuracy(score: int, max_score: int) -> float:
    """Score as a fraction of the best achievable score for the instance."""
    if max_score < MIN_VALID_SCORE:
        raise ValueError(f"max_score must be at least {MIN_VALID_SCORE}, got {max_score}")
    return score / max_score
