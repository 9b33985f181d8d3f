"""Aggregation of evaluation records into reports.

A report carries the mean accuracy with a seeded bootstrap confidence
interval (percentile method over resampled means), the best-score
histogram over the only scores the game can produce ({0} and 6..18),
error-category percentages over the zero-score records, per-tier
accuracy, and the endpoint failure rate. Reports serialize to JSON
(machine) and to an aligned text table (humans); both renderings are
deterministic functions of the records and the bootstrap seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from statistics import fmean
from typing import Sequence

import numpy as np

from .answers import FAILURE_CATEGORIES
from .game import MAX_SCORE, MIN_VALID_SCORE
from .rng import NS_BOOTSTRAP, derive, index_array

REPORT_SCHEMA = "mathador-report-v1"
BOOTSTRAP_RESAMPLES = 10_000
_CHUNK = 1_000  # resamples per derived stream; fixed, part of the CI's determinism

SCORE_BUCKETS = (0,) + tuple(range(MIN_VALID_SCORE, MAX_SCORE + 1))


@dataclass(frozen=True)
class Report:
    n: int
    mean_accuracy_pct: float
    ci_low_pct: float
    ci_high_pct: float
    mean_best_score: float
    histogram: dict
    tier_accuracy_pct: dict
    error_percentages: dict  # over zero-score records; sums to 100 when any exist
    invalid_count: int
    failure_rate_pct: float
    bootstrap_resamples: int
    bootstrap_seed: int
    config: dict | None = None


def bootstrap_ci(
    accuracies: Sequence[float], seed: int, resamples: int = BOOTSTRAP_RESAMPLES
) -> tuple[float, float]:
    """95% percentile bootstrap CI of the mean, seeded and chunk-stable."""
    acc = np.asarray(accuracies, dtype=np.float64)
    n = acc.size
    means = np.empty(resamples, dtype=np.float64)
    stream = derive(seed, NS_BOOTSTRAP)
    for start in range(0, resamples, _CHUNK):
        m = min(_CHUNK, resamples - start)
        idx = index_array(derive(stream, start), m * n, n).reshape(m, n)
        means[start : start + m] = acc[idx].mean(axis=1)
    lo, hi = np.quantile(means, [0.025, 0.975])
    return float(lo), float(hi)


def aggregate(
    records: Sequence,
    bootstrap_seed: int = 0,
    resamples: int = BOOTSTRAP_RESAMPLES,
    config: dict | None = None,
) -> Report:
    """Fold evaluation records into a Report.

    Raises on an impossible best score — a scorer that emits one is broken
    and must not be papered over by reporting.
    """
    if not records:
        raise ValueError("cannot aggregate zero records")

    histogram = {bucket: 0 for bucket in SCORE_BUCKETS}
    for r in records:
        if r.best_score not in histogram:
            raise ValueError(f"impossible best score {r.best_score} in record {r.index}")
        histogram[r.best_score] += 1

    invalid = [r for r in records if r.best_score == 0]
    error_percentages = {c.value: 0.0 for c in FAILURE_CATEGORIES}
    for r in invalid:
        error_percentages[r.category.value] += 1
    if invalid:
        for key in error_percentages:
            error_percentages[key] *= 100.0 / len(invalid)

    tiers: dict[str, list[float]] = {}
    for r in records:
        tiers.setdefault(r.tier, []).append(r.accuracy)
    tier_accuracy = {tier: 100.0 * fmean(vals) for tier, vals in sorted(tiers.items())}

    accs = [r.accuracy for r in records]
    lo, hi = bootstrap_ci(accs, bootstrap_seed, resamples)
    return Report(
        n=len(records),
        mean_accuracy_pct=100.0 * fmean(accs),
        ci_low_pct=100.0 * lo,
        ci_high_pct=100.0 * hi,
        mean_best_score=fmean(r.best_score for r in records),
        histogram=histogram,
        tier_accuracy_pct=tier_accuracy,
        error_percentages=error_percentages,
        invalid_count=len(invalid),
        failure_rate_pct=100.0 * sum(r.failed for r in records) / len(records),
        bootstrap_resamples=resamples,
        bootstrap_seed=bootstrap_seed,
        config=config,
    )


def report_to_json(report: Report) -> str:
    obj = {
        "schema": REPORT_SCHEMA,
        "n": report.n,
        "mean_accuracy_pct": report.mean_accuracy_pct,
        "ci95_pct": [report.ci_low_pct, report.ci_high_pct],
        "mean_best_score": report.mean_best_score,
        "histogram": {str(k): v for k, v in report.histogram.items()},
        "tier_accuracy_pct": report.tier_accuracy_pct,
        "error_percentages": report.error_percentages,
        "invalid_count": report.invalid_count,
        "failure_rate_pct": report.failure_rate_pct,
        "bootstrap": {"resamples": report.bootstrap_resamples, "seed": report.bootstrap_seed},
    }
    if report.config is not None:
        obj["config"] = report.config
    return json.dumps(obj, indent=2)


def format_report(report: Report) -> str:
    """Aligned text rendering for terminals."""
    lines = [
        f"records           {report.n}",
        f"mean accuracy     {report.mean_accuracy_pct:.2f}%  "
        f"(95% CI {report.ci_low_pct:.2f}–{report.ci_high_pct:.2f}, "
        f"bootstrap n={report.bootstrap_resamples}, seed={report.bootstrap_seed})",
        f"mean best score   {report.mean_best_score:.2f}",
        f"endpoint failures {report.failure_rate_pct:.2f}%",
        "",
        "score histogram",
    ]
    peak = max(report.histogram.values()) or 1
    for bucket, count in report.histogram.items():
        bar = "#" * round(30 * count / peak)
        lines.append(f"  {bucket:>4}  {count:>6}  {bar}")
    if report.tier_accuracy_pct:
        lines.append("")
        lines.append("accuracy by tier")
        for tier, pct in report.tier_accuracy_pct.items():
            lines.append(f"  {tier:<8} {pct:.2f}%")
    lines.append("")
    lines.append(f"error breakdown over {report.invalid_count} zero-score answers")
    for key, pct in report.error_percentages.items():
        lines.append(f"  {key:<16} {pct:.2f}%")
    return "\n".join(lines)
