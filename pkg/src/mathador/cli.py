"""Command-line interface.

Subcommands: generate (sample a dataset), solve (exhaustive search on one
instance), score (judge a step file), eval (run a model or mock over a
dataset), sweep (decoding grid), stability (regeneration spread), report
(re-aggregate saved records), play (interactive game). Exit codes: 0 on
success, 1 with a categorized message on runtime errors, 2 on usage
errors (argparse).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

from . import answers, generator, harness, oracle, reporting
from .game import (
    Instance,
    InvalidReason,
    Step,
    apply_operation,
    expression_to_steps,
    render_steps,
    score_steps,
)
from .generator import (
    DatasetFormatError,
    DatasetVerifyError,
    GenerationConfig,
    GenerationError,
)
from .harness import ConfigError, EndpointError

log = logging.getLogger(__name__)


def _parse_operands(text: str) -> tuple[int, ...]:
    tokens = [tok for tok in text.replace(",", " ").split() if tok]
    return tuple(int(tok) for tok in tokens)


def _parse_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    return int(lo), int(hi)


def _read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _load_run(args) -> harness.RunConfig:
    if not args.config:
        raise ConfigError("--config with a run config JSON is required")
    run = harness.run_config_from_json(_read_json(args.config))
    if args.seed is not None:
        run = replace(run, seed=args.seed)
    return run


# ======================================================================
# Subcommands
# ======================================================================


def cmd_generate(args) -> int:
    if args.config:
        config = generator.config_from_json(_read_json(args.config))
    elif args.size is not None:
        config = GenerationConfig(seed=0, size=args.size)
    else:
        raise ConfigError("generate needs --size or --config")
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.size is not None:
        updates["size"] = args.size
    if args.tier:
        updates["tier"] = args.tier
    if args.target_range:
        updates["target_range"] = _parse_range(args.target_range)
    if args.tier_fractions:
        updates["tier_fractions"] = tuple(float(x) for x in args.tier_fractions.split(","))
    config = replace(config, **updates)

    dataset = generator.assemble_dataset(config)
    if args.output:
        generator.save_dataset(dataset, args.output)
        log.info("wrote %d instances to %s", len(dataset), args.output)
    else:
        print("\n".join(generator.dataset_to_lines(dataset)))
    return 0


def cmd_solve(args) -> int:
    instance = Instance(_parse_operands(args.operands), args.target)
    solved = oracle.solve(instance)
    print(f"operands: {', '.join(map(str, instance.operands))}")
    print(f"target: {instance.target}")
    if not solved.count:
        print("solutions: 0 (unreachable)")
        return 0
    profile = solved.profile()
    print(f"solutions: {profile.count}")
    print(f"max score: {profile.max_score}")
    print(f"difficulty: {float(profile.difficulty):.6g} "
          f"({profile.score_sum}/{profile.count}^2)")
    expr, score = solved.solutions[solved.best]
    bonus = " (bonus)" if score == 18 else ""
    print(f"best solution, {score} points{bonus}:")
    for line in render_steps(expression_to_steps(expr, instance.operands)).split("\n"):
        print(f"  {line}")
    return 0


def cmd_score(args) -> int:
    instance = Instance(_parse_operands(args.operands), args.target)
    text = sys.stdin.read() if args.steps == "-" else Path(args.steps).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    steps = answers.parse_steps(lines)
    if steps is None:
        bad = next(ln for ln in lines if not answers.parse_steps([ln]))
        raise ValueError(f"not a step line: {bad.strip()!r} (want: a + b = c)")
    verdict = score_steps(
        [Step(s.lhs, s.op, s.rhs, s.claimed if s.claimed is not None else 0) for s in steps],
        instance,
    )
    if verdict.valid:
        b = verdict.breakdown
        bonus = " + bonus 6" if b.bonus else ""
        print(f"score: {verdict.total} (target {b.target_points} + operations {b.op_points}{bonus})")
    else:
        print(f"score: 0 ({verdict.reason.value})")
    return 0


def cmd_eval(args) -> int:
    run = _load_run(args)
    records, summary = harness.evaluate_dataset(run)
    if args.output:
        harness.save_records(records, run, args.output)
        log.info("wrote %d records to %s", len(records), args.output)
    report = reporting.aggregate(
        records, bootstrap_seed=run.seed, config=harness.run_config_to_json(run)
    )
    print(reporting.format_report(report))
    if args.report:
        Path(args.report).write_text(reporting.report_to_json(report) + "\n", encoding="utf-8")
    return 0


def cmd_sweep(args) -> int:
    run = _load_run(args)
    temperatures = (
        tuple(float(x) for x in args.temperatures.split(","))
        if args.temperatures else harness.SWEEP_TEMPERATURES
    )
    top_ps = (
        tuple(float(x) for x in args.top_ps.split(","))
        if args.top_ps else harness.SWEEP_TOP_PS
    )
    cells = harness.decoding_sweep(run, temperatures, top_ps)

    by_key = {(c.temperature, c.top_p): c for c in cells}
    header = "temp\\top_p " + " ".join(f"{tp:>7.2f}" for tp in top_ps)
    print(header)
    for t in temperatures:
        row = [f"{t:<10.2f}"]
        for tp in top_ps:
            cell = by_key[(t, tp)]
            row.append(f"{cell.mean_accuracy_pct:>7.2f}" if cell.error is None else "    ERR")
        print(" ".join(row))
    if args.output:
        obj = {
            "schema": "mathador-sweep-v1",
            "cells": [
                {"temperature": c.temperature, "top_p": c.top_p,
                 "mean_accuracy_pct": c.mean_accuracy_pct, "error": c.error}
                for c in cells
            ],
        }
        Path(args.output).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_stability(args) -> int:
    run = _load_run(args)
    result = harness.stability_run(run, args.repetitions, reseed=not args.no_reseed)
    for i, acc in enumerate(result.accuracies_pct):
        print(f"repetition {i}: {acc:.2f}%")
    print(f"mean: {result.mean_pct:.2f}%  std: {result.std_pct:.2f}")
    if args.output:
        obj = {
            "schema": "mathador-stability-v1",
            "accuracies_pct": list(result.accuracies_pct),
            "mean_pct": result.mean_pct,
            "std_pct": result.std_pct,
        }
        Path(args.output).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_report(args) -> int:
    records, config = harness.load_records(args.records)
    if args.rescore:
        changed = 0
        for r in records:
            scored = [answers.score_completion(c, r.instance, r.max_score)
                      for c in r.completions]
            scores = [s.score for s in scored]
            if scores != r.attempt_scores:
                changed += 1
            r.attempt_scores = scores
            r.attempt_categories = [s.category for s in scored]
            if scores:
                best_idx = max(range(len(scores)), key=lambda i: (scores[i], -i))
                r.best_score = scores[best_idx]
                r.category = r.attempt_categories[best_idx]
            else:
                r.best_score = 0
                r.category = answers.ErrorCategory.FORMATTING
            r.accuracy = r.best_score / r.max_score
        if changed:
            print(f"rescore changed {changed} of {len(records)} records")
    report = reporting.aggregate(records, bootstrap_seed=args.seed or 0, config=config)
    print(reporting.format_report(report))
    if args.output:
        Path(args.output).write_text(reporting.report_to_json(report) + "\n", encoding="utf-8")
    return 0


def cmd_play(args) -> int:
    if args.operands:
        if args.target is None:
            raise ConfigError("--target is required with --operands")
        instance = Instance(_parse_operands(args.operands), args.target)
        profiles = generator.target_profiles(instance.operands)
    else:
        item = generator.assemble_dataset(
            GenerationConfig(seed=args.seed or 0, size=1)
        ).items[0]
        instance = item.instance
        profiles = generator.target_profiles(instance.operands)
        print(f"sampled a {item.tier} instance (seed {args.seed or 0})")
    best = next((p.max_score for p in profiles if p.target == instance.target), None)

    print(f"Base numbers: {', '.join(map(str, instance.operands))}")
    print(f"Target: {instance.target}" + (f"  (best possible: {best})" if best else ""))
    print("One step per line like '8 + 4 = 12'; 'done' scores, 'quit' abandons.")

    available = Counter(instance.operands)
    steps: list[Step] = []
    for raw in sys.stdin:
        line = raw.strip()
        if line == "quit":
            print("abandoned")
            return 0
        if line == "done":
            break
        if not line:
            continue
        parsed = answers.parse_steps([line])
        if not parsed:
            print("not a step (want: a + b = c); try again")
            continue
        s = parsed[0]
        need = Counter((s.lhs, s.rhs))
        short = [v for v, c in need.items() if available[v] < c]
        if short:
            print(f"{short[0]} is not available; try again")
            continue
        true = apply_operation(s.op, s.lhs, s.rhs)
        if isinstance(true, InvalidReason):
            print(f"illegal step ({true.value}); try again")
            continue
        if s.claimed != true:
            print(f"check the arithmetic: {s.lhs} {s.op.symbol} {s.rhs} = {true}; try again")
            continue
        available[s.lhs] -= 1
        available[s.rhs] -= 1
        available[true] += 1
        steps.append(Step(s.lhs, s.op, s.rhs, true))
        print(f"ok — remaining: {', '.join(map(str, sorted(available.elements())))}")

    verdict = score_steps(steps, instance)
    if verdict.valid:
        b = verdict.breakdown
        bonus = " + bonus 6" if b.bonus else ""
        print(f"score: {verdict.total} (target {b.target_points} + operations {b.op_points}{bonus})")
    else:
        print(f"score: 0 ({verdict.reason.value})")
    return 0


# ======================================================================
# Parser
# ======================================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mathador",
        description="Arithmetic-game benchmark toolkit: solve, generate, evaluate.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for anything randomized")
    common.add_argument("--config", type=Path, default=None, help="JSON config file")
    common.add_argument("--output", type=Path, default=None, help="output file path")
    common.add_argument("-v", "--verbosity", action="count", default=0,
                        help="-v for info, -vv for debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="sample a difficulty-tiered dataset")
    p.add_argument("--size", type=int, help="number of instances")
    p.add_argument("--tier", choices=("easy", "medium", "hard", "mixed"))
    p.add_argument("--target-range", help="lo:hi (default 1:100)")
    p.add_argument("--tier-fractions", help="easy,medium,hard fractions for mixed draws")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", parents=[common], help="exhaustively solve one instance")
    p.add_argument("--operands", required=True, help="five numbers, e.g. 2,4,8,11,17")
    p.add_argument("--target", type=int, required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("score", parents=[common], help="score a step file against an instance")
    p.add_argument("--operands", required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--steps", default="-", help="step file, or - for stdin (default)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", parents=[common], help="evaluate a model over a dataset")
    p.add_argument("--report", type=Path, help="also write the report JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="decoding-parameter grid sweep")
    p.add_argument("--temperatures", help="comma list (default: the standard grid)")
    p.add_argument("--top-ps", help="comma list (default: the standard grid)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stability", parents=[common],
                       help="accuracy spread over dataset regenerations")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--no-reseed", action="store_true",
                   help="reuse the identical dataset every repetition")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("report", parents=[common], help="re-aggregate saved run records")
    p.add_argument("records", help="records JSONL file from eval")
    p.add_argument("--rescore", action="store_true",
                   help="re-run the answer pipeline on the stored completions first")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("play", parents=[common], help="play one instance interactively")
    p.add_argument("--operands", help="five numbers; omit to sample by seed")
    p.add_argument("--target", type=int)
    p.set_defaults(func=cmd_play)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbosity, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, EndpointError, GenerationError, DatasetFormatError,
            DatasetVerifyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
