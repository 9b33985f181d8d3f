"""Seeded generation of difficulty-tiered benchmark datasets.

Operands are sampled one die per slot — uniform over [1,4], [1,6], [1,8],
[1,12], [1,20] — then the full target range is profiled in one solver pass
and targets are split into difficulty terciles (easy / medium / hard) per
operand set. An operand set with fewer than three reachable targets cannot
fill three tiers and is resampled.

Every dataset instance draws from its own derived random stream
(seed, instance index), so the same seed always yields the same dataset,
prefixes are stable under size changes, and generation order is free to
parallelize without changing output.

Datasets persist as JSONL: a header line carrying the schema tag and the
generation config echo, then one instance per line. Difficulty is exact in
memory (Fraction) and serialized as its nearest float64; the integer score
sum is recovered exactly on load (it is far below 2**53).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Sequence

from . import oracle
from .game import MAX_SCORE, MIN_VALID_SCORE, Instance, validate_operands
from .oracle import DEFAULT_TARGET_RANGE, TargetProfile
from .rng import NS_DATASET, SplitMix64, derive

log = logging.getLogger(__name__)

SLOT_BOUNDS = ((1, 4), (1, 6), (1, 8), (1, 12), (1, 20))
TIERS = ("easy", "medium", "hard")
DATASET_SCHEMA = "mathador-dataset-v1"


class GenerationError(RuntimeError):
    pass


class DatasetFormatError(ValueError):
    pass


class DatasetVerifyError(ValueError):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    seed: int
    size: int
    tier: str = "mixed"
    target_range: tuple[int, int] = DEFAULT_TARGET_RANGE
    tier_fractions: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    min_reachable: int = 3
    max_resamples: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "target_range", tuple(self.target_range))
        object.__setattr__(self, "tier_fractions", tuple(self.tier_fractions))
        if self.size < 1:
            raise ValueError(f"size must be positive, got {self.size}")
        if self.tier not in TIERS + ("mixed",):
            raise ValueError(f"unknown tier {self.tier!r}")
        lo, hi = self.target_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad target range {self.target_range}")
        if len(self.tier_fractions) != 3 or any(f < 0 for f in self.tier_fractions):
            raise ValueError(f"bad tier fractions {self.tier_fractions}")
        if abs(sum(self.tier_fractions) - 1.0) > 1e-9:
            raise ValueError("tier fractions must sum to 1")
        if self.min_reachable < 3:
            raise ValueError("tiering needs at least 3 reachable targets")


@dataclass(frozen=True)
class DatasetItem:
    instance: Instance
    tier: str
    profile: TargetProfile


@dataclass(frozen=True)
class Dataset:
    config: GenerationConfig
    items: tuple[DatasetItem, ...]

    def __len__(self) -> int:
        return len(self.items)


# ======================================================================
# Sampling
# ======================================================================


def sample_operands(rng: SplitMix64) -> tuple[int, ...]:
    """One operand per slot, uniform over that slot's die range."""
    return tuple(rng.randint(lo, hi) for lo, hi in SLOT_BOUNDS)


@lru_cache(maxsize=4096)
def _profiles_for_multiset(sorted_values, target_range):
    return tuple(oracle.reachable_targets(sorted_values, target_range))


def target_profiles(
    operands: Sequence[int], target_range=DEFAULT_TARGET_RANGE
) -> tuple[TargetProfile, ...]:
    """Cached reachable-target profiles.

    Expressions reference slot indices, so reordering operand values is a
    bijection on the expression space: profiles depend only on the value
    multiset, and the cache can key on the sorted tuple.
    """
    return _profiles_for_multiset(tuple(sorted(validate_operands(operands))), tuple(target_range))


def tier_targets(profiles: Sequence[TargetProfile]) -> dict[str, list[TargetProfile]]:
    """Split targets into difficulty terciles (ascending difficulty = easy first).

    Sorted by exact (difficulty, target); cuts at floor(n/3) and floor(2n/3).
    """
    ordered = sorted(profiles, key=lambda p: (p.difficulty, p.target))
    n = len(ordered)
    return {
        "easy": ordered[: n // 3],
        "medium": ordered[n // 3 : 2 * n // 3],
        "hard": ordered[2 * n // 3 :],
    }


def _draw_tier(rng: SplitMix64, fractions) -> str:
    u = rng.random()
    edge = 0.0
    for tier, f in zip(TIERS, fractions):
        edge += f
        if u < edge:
            return tier
    return TIERS[-1]


def _sample_item(rng: SplitMix64, config: GenerationConfig) -> DatasetItem:
    for _ in range(config.max_resamples):
        operands = sample_operands(rng)
        profiles = target_profiles(operands, config.target_range)
        if len(profiles) < config.min_reachable:
            continue
        pools = tier_targets(profiles)
        tier = config.tier if config.tier != "mixed" else _draw_tier(rng, config.tier_fractions)
        profile = rng.choice(pools[tier])
        return DatasetItem(Instance(operands, profile.target), tier, profile)
    raise GenerationError(
        f"no viable operand set after {config.max_resamples} attempts "
        f"(target range {config.target_range})"
    )


def assemble_dataset(config: GenerationConfig) -> Dataset:
    items = tuple(
        _sample_item(SplitMix64(derive(config.seed, NS_DATASET, i)), config)
        for i in range(config.size)
    )
    return Dataset(config, items)


# ======================================================================
# Persistence
# ======================================================================


def config_to_json(config: GenerationConfig) -> dict:
    return {
        "seed": config.seed,
        "size": config.size,
        "tier": config.tier,
        "target_range": list(config.target_range),
        "tier_fractions": list(config.tier_fractions),
        "min_reachable": config.min_reachable,
        "max_resamples": config.max_resamples,
    }


def config_from_json(obj: dict) -> GenerationConfig:
    try:
        return GenerationConfig(
            seed=int(obj["seed"]),
            size=int(obj["size"]),
            tier=obj.get("tier", "mixed"),
            target_range=tuple(obj.get("target_range", DEFAULT_TARGET_RANGE)),
            tier_fractions=tuple(obj.get("tier_fractions", (1 / 3, 1 / 3, 1 / 3))),
            min_reachable=int(obj.get("min_reachable", 3)),
            max_resamples=int(obj.get("max_resamples", 1000)),
        )
    except KeyError as exc:
        raise DatasetFormatError(f"generation config is missing {exc}") from None


def dataset_to_lines(dataset: Dataset) -> list[str]:
    lines = [json.dumps({"schema": DATASET_SCHEMA, "config": config_to_json(dataset.config)},
                        separators=(",", ":"))]
    for item in dataset.items:
        lines.append(json.dumps({
            "operands": list(item.instance.operands),
            "target": item.instance.target,
            "difficulty": float(item.profile.difficulty),
            "tier": item.tier,
            "max_score": item.profile.max_score,
            "solution_count": item.profile.count,
        }, separators=(",", ":")))
    return lines


def save_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text("\n".join(dataset_to_lines(dataset)) + "\n", encoding="utf-8")


def _item_from_json(obj: dict, config: GenerationConfig, line_no: int) -> DatasetItem:
    def fail(msg):
        raise DatasetFormatError(f"line {line_no}: {msg}")

    try:
        operands = validate_operands([int(v) for v in obj["operands"]])
        target = int(obj["target"])
        difficulty = float(obj["difficulty"])
        tier = obj["tier"]
        max_score = int(obj["max_score"])
        count = int(obj["solution_count"])
    except (KeyError, TypeError, ValueError) as exc:
        fail(f"bad instance record ({exc})")
    if tier not in TIERS:
        fail(f"unknown tier {tier!r}")
    if not (config.target_range[0] <= target <= config.target_range[1]):
        fail(f"target {target} outside configured range {config.target_range}")
    if count < 1:
        fail("solution_count must be positive")
    if not (MIN_VALID_SCORE <= max_score <= MAX_SCORE):
        fail(f"max_score {max_score} out of range")
    score_sum = round(difficulty * count * count)  # exact: sums are far below 2**53
    if float(Fraction(score_sum, count * count)) != difficulty:
        fail("difficulty inconsistent with solution_count")
    if not (MIN_VALID_SCORE * count <= score_sum <= MAX_SCORE * count):
        fail("difficulty outside the feasible per-solution score range")
    return DatasetItem(Instance(operands, target), tier,
                       TargetProfile(target, count, score_sum, max_score))


def load_dataset(path, verify: str = "none") -> Dataset:
    """Read a dataset file; `verify` is "none", "warn", or "strict".

    Structural checks (field types/ranges, difficulty/count consistency)
    always apply. "warn"/"strict" additionally re-derive each instance's
    profile and tier with the solver; mismatches are logged or fatal.
    """
    if verify not in ("none", "warn", "strict"):
        raise ValueError(f"unknown verify mode {verify!r}")
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise DatasetFormatError("empty dataset file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"line 1: not JSON ({exc})") from None
    if not isinstance(header, dict) or header.get("schema") != DATASET_SCHEMA:
        raise DatasetFormatError(f"line 1: missing schema tag {DATASET_SCHEMA!r}")
    config = config_from_json(header.get("config", {}))

    items = []
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"line {line_no}: not JSON ({exc})") from None
        items.append(_item_from_json(obj, config, line_no))

    if verify != "none":
        _verify_items(items, config, strict=verify == "strict")
    return Dataset(config, tuple(items))


def _verify_items(items, config, strict: bool) -> None:
    bad = []
    for i, item in enumerate(items):
        profiles = target_profiles(item.instance.operands, config.target_range)
        truth = {p.target: p for p in profiles}
        true_profile = truth.get(item.instance.target)
        pools = tier_targets(profiles)
        true_tier = next(
            (t for t in TIERS if any(p.target == item.instance.target for p in pools[t])), None
        )
        if true_profile != item.profile or true_tier != item.tier:
            bad.append(i)
    if bad:
        msg = f"{len(bad)} instance(s) fail re-verification (first at index {bad[0]})"
        if strict:
            raise DatasetVerifyError(msg)
        log.warning("%s", msg)
