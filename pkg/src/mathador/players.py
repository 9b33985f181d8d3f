"""Deterministic in-process players.

These satisfy the same complete(prompt, decoding) protocol as the HTTP
client, so the harness, the CLI, and the tests can run full evaluations
hermetically. Each player parses the query instance back out of the
rendered prompt (the last "Base numbers" / "Target" block — earlier ones
are few-shot examples). All are marked LOCAL so the harness records a 0.0
latency and evaluation output stays byte-reproducible.
"""

from __future__ import annotations

import hashlib
import re
import threading
from bisect import insort
from collections import Counter

from . import oracle
from .game import (
    Instance,
    InvalidReason,
    Operation,
    apply_operation,
    expression_to_steps,
    render_steps,
)
from .rng import SplitMix64, derive

_BASE_RE = re.compile(r"^Base numbers:\s*(.+?)\s*$", re.MULTILINE)
_TARGET_RE = re.compile(r"^Target:\s*(\d+)\s*$", re.MULTILINE)


def instance_from_prompt(prompt: str) -> Instance:
    bases = _BASE_RE.findall(prompt)
    targets = _TARGET_RE.findall(prompt)
    if not bases or not targets:
        raise ValueError("prompt carries no instance block")
    operands = tuple(int(tok) for tok in re.split(r"[,\s]+", bases[-1]) if tok)
    return Instance(operands, int(targets[-1]))


class OracleBestPlayer:
    """Always answers with a maximum-score solution."""

    LOCAL = True

    def complete(self, prompt, decoding):
        instance = instance_from_prompt(prompt)
        solved = oracle.solve(instance)
        if not solved.solutions:
            return "This target cannot be reached."
        return render_steps(expression_to_steps(solved.best_expression, instance.operands))


class IllegalOperandPlayer:
    """Reaches the target with correct arithmetic over numbers it was never given."""

    LOCAL = True

    def complete(self, prompt, decoding):
        t = instance_from_prompt(prompt).target
        # both inputs of the first step are far outside any operand range
        return f"777 + {t + 222} = {t + 999}\n{t + 999} - 999 = {t}"


class FormattingPlayer:
    """Never produces a parseable step."""

    LOCAL = True

    def complete(self, prompt, decoding):
        return "After some thought, no clean derivation presents itself."


class GreedyPlayer:
    """One-step-lookahead baseline: always plays the legal operation whose
    result lands closest to the target, stopping on a hit.

    Ties break toward the smaller result, then operator order, then operand
    pair order over the sorted pool — fully deterministic. Every emitted
    step is legal, so it fails only by missing the target.
    """

    LOCAL = True

    def complete(self, prompt, decoding):
        instance = instance_from_prompt(prompt)
        pool = sorted(instance.operands)
        lines = []
        while len(pool) >= 2:
            lhs, op, rhs, value = self._best_step(pool, instance.target)
            lines.append(f"{lhs} {op.symbol} {rhs} = {value}")
            pool.remove(lhs)
            pool.remove(rhs)
            insort(pool, value)
            if value == instance.target:
                break
        return "\n".join(lines)

    @staticmethod
    def _best_step(pool, target):
        best = None
        best_key = None
        for i in range(len(pool)):
            for j in range(i + 1, len(pool)):
                lo, hi = pool[i], pool[j]
                for op in Operation:
                    lhs, rhs = (hi, lo) if op in (Operation.SUB, Operation.DIV) else (lo, hi)
                    value = apply_operation(op, lhs, rhs)
                    if isinstance(value, InvalidReason):
                        continue
                    key = (abs(target - value), value, int(op), i, j)
                    if best_key is None or key < best_key:
                        best, best_key = (lhs, op, rhs, value), key
        return best


class StochasticPlayer:
    """Best answer with probability p, garbage otherwise.

    Draws are keyed on (seed, prompt digest, per-prompt attempt number), so
    outcomes do not depend on the order threads happen to call in.
    """

    LOCAL = True

    def __init__(self, p: float, seed: int):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {p}")
        self.p = p
        self.seed = seed
        self._good = OracleBestPlayer()
        self._bad = FormattingPlayer()
        self._attempts = Counter()
        self._lock = threading.Lock()

    def complete(self, prompt, decoding):
        with self._lock:
            attempt = self._attempts[prompt]
            self._attempts[prompt] += 1
        digest = int.from_bytes(hashlib.blake2s(prompt.encode()).digest()[:8], "big")
        rng = SplitMix64(derive(self.seed, digest, attempt))
        player = self._good if rng.random() < self.p else self._bad
        return player.complete(prompt, decoding)


class ScriptedPlayer:
    """Canned completions per instance, for tests with known expected output.

    `script` maps (operands tuple, target) to a completion or a list of
    per-attempt completions (the last entry repeats); unknown instances get
    the default text.
    """

    LOCAL = True

    def __init__(self, script: dict, default: str = "no idea"):
        self.script = {}
        for key, value in script.items():
            operands, target = key
            texts = [value] if isinstance(value, str) else list(value)
            self.script[(tuple(operands), int(target))] = texts
        self.default = default
        self._attempts = Counter()
        self._lock = threading.Lock()

    def complete(self, prompt, decoding):
        instance = instance_from_prompt(prompt)
        key = (instance.operands, instance.target)
        texts = self.script.get(key)
        if texts is None:
            return self.default
        with self._lock:
            attempt = self._attempts[key]
            self._attempts[key] += 1
        return texts[min(attempt, len(texts) - 1)]
