"""Mathador arithmetic-game toolkit.

Game rules and scoring (game), an exhaustive solver with per-target
difficulty (oracle, skeletons, _kernel), a difficulty-tiered dataset
generator (generator), a free-text answer scorer (answers), a
chat-completions evaluation harness with built-in mock players (harness,
players), and reporting plus a CLI (reporting, cli).
"""

__version__ = "0.1.0"

from .game import (  # noqa: F401
    Instance,
    InvalidReason,
    OpNode,
    Operation,
    Step,
    Verdict,
    score_steps,
)
