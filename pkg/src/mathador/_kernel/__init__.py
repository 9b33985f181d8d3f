"""Kernel backend selection.

The compiled extension is used when importable, the vectorized fallback
otherwise. Set MATHADOR_KERNEL to "compiled" or "fallback" to force one;
forcing "compiled" without the built extension fails loudly rather than
silently degrading. Both backends expose the same two functions and are
pinned equal by differential tests.
"""

from __future__ import annotations

import os

from . import fallback

try:
    from . import compiled as _compiled
except ImportError:
    _compiled = None

_requested = os.environ.get("MATHADOR_KERNEL", "").strip().lower()
if _requested == "fallback":
    _active = fallback
elif _requested == "compiled":
    if _compiled is None:
        raise ImportError("MATHADOR_KERNEL=compiled, but the compiled kernel is not built")
    _active = _compiled
elif _requested:
    raise ImportError(f"unknown MATHADOR_KERNEL value {_requested!r} "
                      "(expected 'compiled' or 'fallback')")
else:
    _active = _compiled if _compiled is not None else fallback

BACKEND = _active.NAME


def profile_targets(values, lo: int, hi: int):
    return _active.profile_targets(values, lo, hi)


def solution_hits(values, target: int):
    return _active.solution_hits(values, target)


def available_backends() -> tuple[str, ...]:
    return ("compiled", "fallback") if _compiled is not None else ("fallback",)


def get_backend(name: str):
    """Fetch a specific backend module (for benchmarks and parity tests)."""
    if name == "fallback":
        return fallback
    if name == "compiled":
        if _compiled is None:
            raise ValueError("compiled kernel not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
