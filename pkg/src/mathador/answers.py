"""Scoring free-text model answers.

A completion is reduced to its last block of step-shaped lines ("only the
last answer counts"), parsed, pruned to the dependency closure of its
final step, and judged. Dependencies resolve through the model's *claimed*
results — the narrative the model wrote is what gets audited, wrong
arithmetic and all — and the first offending step in sequence order
decides the error category:

  Formatting       no step block parses at all
  IllegalOperand   a step consumes a number that is not available
  Calculation      a step's claim is wrong, fractional, or its true
                   result is illegal (negative / inexact division)
  MissedTarget     every step is clean but the final result is not the
                   target

Within a step, availability is checked before arithmetic. Scoring a clean
chain is delegated to the game rules; the category is NONE exactly when
the answer scores.
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .game import (
    Instance,
    InvalidReason,
    Operation,
    Step,
    accuracy,
    apply_operation,
    dependency_closure,
    score_steps,
)

_STEP_RE = re.compile(
    r"^\s*(\d+)\s*([-+*/xX×÷−])\s*(\d+)\s*=\s*(-?\d+(?:\.\d+)?)\s*$"
)

_SYMBOL_TO_OP = {
    "+": Operation.ADD,
    "-": Operation.SUB,
    "−": Operation.SUB,
    "*": Operation.MUL,
    "x": Operation.MUL,
    "X": Operation.MUL,
    "×": Operation.MUL,
    "/": Operation.DIV,
    "÷": Operation.DIV,
}


class ErrorCategory(enum.Enum):
    FORMATTING = "formatting"
    ILLEGAL_OPERAND = "illegal_operand"
    CALCULATION = "calculation"
    MISSED_TARGET = "missed_target"
    NONE = "none"


FAILURE_CATEGORIES = (
    ErrorCategory.FORMATTING,
    ErrorCategory.ILLEGAL_OPERAND,
    ErrorCategory.CALCULATION,
    ErrorCategory.MISSED_TARGET,
)


class ParsedStep(NamedTuple):
    lhs: int
    op: Operation
    rhs: int
    claimed: int | None  # None: the claim has a decimal point (non-integer)
    text: str


@dataclass(frozen=True)
class ParsedAnswer:
    steps: tuple[ParsedStep, ...]
    span: tuple[int, int]  # character offsets of the block in the completion


class ScoredAnswer(NamedTuple):
    score: int
    accuracy: float
    category: ErrorCategory


def extract_solution_block(text: str):
    """Locate the last maximal run of step-shaped lines.

    Blank lines inside a run are tolerated; any other line ends it. Returns
    (lines, (start, end)) or None when no line in the completion is
    step-shaped.
    """
    last = None
    current = None  # [lines, start, end], mutated in place
    pos = 0
    for line in text.split("\n"):
        end = pos + len(line)
        if _STEP_RE.match(line):
            if current is None:
                current = [[line], pos, end]
                last = current
            else:
                current[0].append(line)
                current[2] = end
        elif line.strip():
            current = None
        pos = end + 1
    if last is None:
        return None
    return last[0], (last[1], last[2])


def parse_steps(lines: Sequence[str]):
    """Parse step lines into ParsedSteps; None if any line is not a step."""
    steps = []
    for line in lines:
        m = _STEP_RE.match(line)
        if m is None:
            return None
        claim_text = m.group(4)
        claimed = None if "." in claim_text else int(claim_text)
        steps.append(
            ParsedStep(int(m.group(1)), _SYMBOL_TO_OP[m.group(2)], int(m.group(3)),
                       claimed, line.strip())
        )
    return tuple(steps)


def parse_completion(text: str) -> ParsedAnswer | None:
    """Extract and parse a completion's answer block; None means Formatting."""
    block = extract_solution_block(text)
    if block is None:
        return None
    steps = parse_steps(block[0])
    if not steps:
        return None
    return ParsedAnswer(steps, block[1])


def classify_and_score(
    parsed: ParsedAnswer | None, instance: Instance, max_score: int
) -> ScoredAnswer:
    """Judge a parsed answer; see the module docstring for the priority rule."""
    if parsed is None or not parsed.steps:
        return ScoredAnswer(0, 0.0, ErrorCategory.FORMATTING)

    steps = parsed.steps
    # Dependencies follow the claims: a wrong claim feeds later steps as
    # written. (Resolving through true values instead can splice scratch
    # steps into the audited chain and flip its verdict.)
    kept = dependency_closure(steps, [s.claimed for s in steps], instance.operands)

    available = Counter(instance.operands)
    final = None
    for i in kept:
        s = steps[i]
        for value in (s.lhs, s.rhs):
            if available[value] <= 0:
                return ScoredAnswer(0, 0.0, ErrorCategory.ILLEGAL_OPERAND)
            available[value] -= 1
        true = apply_operation(s.op, s.lhs, s.rhs)
        if isinstance(true, InvalidReason) or s.claimed != true:
            return ScoredAnswer(0, 0.0, ErrorCategory.CALCULATION)
        available[true] += 1
        final = true

    if final != instance.target:
        return ScoredAnswer(0, 0.0, ErrorCategory.MISSED_TARGET)

    # The kept chain replayed cleanly with claims == true values, so the
    # game verdict over exactly these steps must be valid.
    verdict = score_steps([Step(steps[i].lhs, steps[i].op, steps[i].rhs, steps[i].claimed)
                           for i in kept], instance)
    assert verdict.valid, "clean chain must score"
    return ScoredAnswer(verdict.total, accuracy(verdict.total, max_score), ErrorCategory.NONE)


def score_completion(text: str, instance: Instance, max_score: int) -> ScoredAnswer:
    return classify_and_score(parse_completion(text), instance, max_score)
