"""Model evaluation harness.

Renders few-shot prompts, queries a completer (an OpenAI-style
chat-completions endpoint over HTTP, or an in-process mock player), scores
each completion through the answer pipeline, and aggregates per-instance
records. Everything seeded is derived from the run seed through tagged
streams, so runs reproduce exactly; in-process completers record 0.0
latency so record files are byte-identical across repeats.

Endpoints: `base_url` of the form ``mock:<name>`` selects a built-in
player (oracle-best, greedy, illegal-operand, formatting,
stochastic:<p>:<seed>); anything else is treated as an HTTP base URL and
"/chat/completions" is appended if absent. Transient failures (timeouts,
429, 5xx) retry with exponential backoff; other HTTP errors are permanent.
A request that exhausts its retries marks the record failed — it scores 0
with category "formatting" unless an earlier attempt already scored.
"""

from __future__ import annotations

import json
import logging
import os
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from statistics import fmean, stdev
from typing import Protocol, Sequence

import requests

from . import answers, generator, oracle, players
from .answers import ErrorCategory
from .game import Instance, Step, accuracy, expression_to_steps, render_steps
from .generator import Dataset, GenerationConfig
from .rng import NS_SHOTS, NS_STABILITY, SplitMix64, derive

log = logging.getLogger(__name__)

RECORDS_SCHEMA = "mathador-records-v1"

# Decoding grid used by the sweep command by default.
SWEEP_TEMPERATURES = (0.0, 0.3, 0.5, 0.7, 0.9)
SWEEP_TOP_PS = (0.1, 0.3, 0.5, 0.7, 1.0)

SYSTEM_MESSAGE = (
    "You are playing an arithmetic puzzle. Follow the rules and the answer "
    "format exactly."
)

RULES_V1 = """\
Let's play Mathador. You get five base numbers and a target number. Reach the \
target by combining the base numbers with the four basic operations.

Rules:
- Use each base number at most once. You may reuse the result of an earlier step.
- Every step must produce a non-negative integer: no negative differences, and \
divisions must be exact.
- Write one step per line, in exactly this form: a + b = c (operators: + - * /).
- The result of your final step must be the target number.

Scoring: reaching the target is worth 5 points, plus 1 point per addition, \
1 per multiplication, 2 per subtraction, and 3 per division. Using all five \
base numbers and each of the four operations exactly once earns a 6-point \
bonus. The maximum score is 18.

Aim for the highest score. Only your last block of step lines is scored."""


class ConfigError(ValueError):
    pass


class EndpointError(RuntimeError):
    pass


class Completer(Protocol):
    def complete(self, prompt: str, decoding: "DecodingParams") -> str: ...


# ======================================================================
# Configuration
# ======================================================================


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.0
    top_p: float = 1.0
    max_tokens: int = 512


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 3
    backoff_base: float = 0.5  # seconds; doubled after each retry


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str = ""
    auth_env: str | None = None  # env var holding the bearer token
    timeout: float = 60.0
    max_in_flight: int = 4
    retry: RetryPolicy = RetryPolicy()


@dataclass(frozen=True)
class PromptTemplate:
    name: str = "v1"
    rules: str = RULES_V1
    annotate: bool = False  # suffix shot steps with the remaining operands


@dataclass(frozen=True)
class ShotExample:
    instance: Instance
    steps: tuple[Step, ...]


@dataclass(frozen=True)
class RunConfig:
    """One evaluation run: dataset source, prompt shape, decoding, endpoint."""

    seed: int
    endpoint: EndpointConfig
    dataset_path: str | None = None
    generation: GenerationConfig | None = None
    shots: int = 2
    attempts: int = 1
    decoding: DecodingParams = DecodingParams()
    template: PromptTemplate = PromptTemplate()

    def __post_init__(self):
        if (self.dataset_path is None) == (self.generation is None):
            raise ConfigError("exactly one of dataset_path / generation is required")
        if self.shots < 0:
            raise ConfigError("shots must be non-negative")
        if self.attempts < 1:
            raise ConfigError("attempts must be at least 1")


# ======================================================================
# Prompt rendering
# ======================================================================


def _instance_block(instance: Instance) -> str:
    numbers = ", ".join(str(v) for v in instance.operands)
    return f"Base numbers: {numbers}\nTarget: {instance.target}"


def _shot_lines(shot: ShotExample, annotate: bool) -> str:
    if not annotate:
        return render_steps(shot.steps)
    remaining = Counter(shot.instance.operands)
    lines = []
    for s in shot.steps:
        remaining[s.lhs] -= 1
        remaining[s.rhs] -= 1
        remaining[s.result] += 1
        pool = sorted(remaining.elements())
        lines.append(
            f"{s.lhs} {s.op.symbol} {s.rhs} = {s.result}"
            f"  (remaining: {', '.join(map(str, pool))})"
        )
    return "\n".join(lines)


def render_prompt(
    instance: Instance,
    shots: Sequence[ShotExample] = (),
    template: PromptTemplate = PromptTemplate(),
) -> str:
    """Rules, worked shot blocks, then the query block awaiting completion."""
    parts = [template.rules]
    for shot in shots:
        parts.append(
            _instance_block(shot.instance) + "\nSolution:\n" + _shot_lines(shot, template.annotate)
        )
    parts.append(_instance_block(instance) + "\nSolution:")
    return "\n\n".join(parts)


def build_shot_bank(
    seed: int, count: int, target_range=oracle.DEFAULT_TARGET_RANGE
) -> list[ShotExample]:
    """Deterministic worked examples, one derived stream per shot.

    Each shot shows a *minimum*-score solution (lexicographically smallest
    rendering on ties): demonstrates the format without demonstrating
    high-scoring play.
    """
    shots = []
    for i in range(count):
        rng = SplitMix64(derive(seed, NS_SHOTS, i))
        for _ in range(1000):
            operands = generator.sample_operands(rng)
            profiles = generator.target_profiles(operands, target_range)
            if len(profiles) >= 3:
                break
        else:  # pragma: no cover - the operand dice make this unreachable
            raise RuntimeError("could not sample a usable shot instance")
        profile = rng.choice(profiles)
        instance = Instance(operands, profile.target)
        solved = oracle.solve(instance)
        low = min(score for _, score in solved.solutions)
        expr = min(
            (e for e, score in solved.solutions if score == low),
            key=lambda e: render_steps(expression_to_steps(e, operands)),
        )
        shots.append(ShotExample(instance, tuple(expression_to_steps(expr, operands))))
    return shots


# ======================================================================
# Completers
# ======================================================================


class ChatCompletionsClient:
    """Minimal chat-completions client with bounded retries."""

    def __init__(self, config: EndpointConfig):
        self.config = config
        self._headers = {"Content-Type": "application/json"}
        if config.auth_env:
            token = os.environ.get(config.auth_env, "")
            if not token:
                raise ConfigError(
                    f"endpoint auth variable {config.auth_env!r} is not set; no request sent"
                )
            self._headers["Authorization"] = f"Bearer {token}"
        self._url = config.base_url.rstrip("/")
        if not self._url.endswith("/chat/completions"):
            self._url += "/chat/completions"
        self._session = requests.Session()

    def complete(self, prompt: str, decoding: DecodingParams) -> str:
        body = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": SYSTEM_MESSAGE},
                {"role": "user", "content": prompt},
            ],
            "temperature": decoding.temperature,
            "top_p": decoding.top_p,
            "max_tokens": decoding.max_tokens,
        }
        retry = self.config.retry
        delay = retry.backoff_base
        reason = "no attempt made"
        for attempt in range(retry.max_retries + 1):
            if attempt:
                time.sleep(delay)
                delay *= 2
            try:
                resp = self._session.post(
                    self._url, json=body, headers=self._headers, timeout=self.config.timeout
                )
            except requests.RequestException as exc:
                reason = f"{type(exc).__name__}: {exc}"
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                reason = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise EndpointError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, LookupError, TypeError) as exc:
                raise EndpointError(f"malformed completion payload: {exc}") from None
        raise EndpointError(f"gave up after {retry.max_retries + 1} attempts ({reason})")


def make_completer(endpoint: EndpointConfig) -> Completer:
    """HTTP client, or a built-in player for mock: URLs."""
    url = endpoint.base_url
    if not url.startswith("mock:"):
        return ChatCompletionsClient(endpoint)
    name = url[len("mock:"):]
    if name == "oracle-best":
        return players.OracleBestPlayer()
    if name == "greedy":
        return players.GreedyPlayer()
    if name == "illegal-operand":
        return players.IllegalOperandPlayer()
    if name == "formatting":
        return players.FormattingPlayer()
    if name.startswith("stochastic:"):
        try:
            _, p, seed = name.split(":")
            return players.StochasticPlayer(float(p), int(seed))
        except ValueError:
            raise ConfigError(f"bad stochastic mock spec {url!r} "
                              "(want mock:stochastic:<p>:<seed>)") from None
    raise ConfigError(f"unknown mock endpoint {url!r}")


# ======================================================================
# Evaluation
# ======================================================================


@dataclass
class RunRecord:
    index: int
    instance: Instance
    tier: str
    max_score: int
    difficulty: float
    prompt: str
    completions: list[str]
    attempt_scores: list[int]
    attempt_categories: list[ErrorCategory]
    best_score: int
    accuracy: float
    category: ErrorCategory
    latency: float
    failed: bool


@dataclass(frozen=True)
class EvalSummary:
    n: int
    mean_accuracy_pct: float
    mean_best_score: float
    category_counts: dict
    failures: int

    @property
    def failure_rate_pct(self) -> float:
        return 100.0 * self.failures / self.n if self.n else 0.0


def _evaluate_instance(index, item, shots, run: RunConfig, completer) -> RunRecord:
    prompt = render_prompt(item.instance, shots, run.template)
    local = bool(getattr(completer, "LOCAL", False))
    completions, scores, categories = [], [], []
    latency = 0.0
    failed = False
    for attempt in range(run.attempts):
        start = time.perf_counter()
        try:
            text = completer.complete(prompt, run.decoding)
        except EndpointError as exc:
            log.warning("instance %d attempt %d: %s", index, attempt, exc)
            failed = True
            break
        if not local:
            latency += time.perf_counter() - start
        completions.append(text)
        scored = answers.score_completion(text, item.instance, item.profile.max_score)
        scores.append(scored.score)
        categories.append(scored.category)
        if scored.score >= item.profile.max_score:
            break

    if scores:
        best_idx = max(range(len(scores)), key=lambda i: (scores[i], -i))
        best = scores[best_idx]
        category = categories[best_idx]
    else:
        best = 0
        category = ErrorCategory.FORMATTING
    return RunRecord(
        index=index,
        instance=item.instance,
        tier=item.tier,
        max_score=item.profile.max_score,
        difficulty=float(item.profile.difficulty),
        prompt=prompt,
        completions=completions,
        attempt_scores=scores,
        attempt_categories=categories,
        best_score=best,
        accuracy=accuracy(best, item.profile.max_score),
        category=category,
        latency=latency,
        failed=failed,
    )


def load_run_dataset(run: RunConfig) -> Dataset:
    if run.dataset_path is not None:
        return generator.load_dataset(run.dataset_path)
    return generator.assemble_dataset(run.generation)


def evaluate_dataset(
    run: RunConfig,
    completer: Completer | None = None,
    dataset: Dataset | None = None,
) -> tuple[list[RunRecord], EvalSummary]:
    """Evaluate every dataset instance; records come back in dataset order.

    Requests fan out over at most endpoint.max_in_flight threads; record
    assembly and aggregation are order-independent.
    """
    if dataset is None:
        dataset = load_run_dataset(run)
    if completer is None:
        completer = make_completer(run.endpoint)
    shots = build_shot_bank(run.seed, run.shots) if run.shots else []

    records: list[RunRecord | None] = [None] * len(dataset.items)

    def work(i: int) -> None:
        records[i] = _evaluate_instance(i, dataset.items[i], shots, run, completer)

    workers = max(1, min(run.endpoint.max_in_flight, len(dataset.items) or 1))
    if workers == 1:
        for i in range(len(dataset.items)):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(len(dataset.items))))
    done = [r for r in records if r is not None]
    return done, summarize(done)


def summarize(records: Sequence[RunRecord]) -> EvalSummary:
    n = len(records)
    counts = Counter(r.category.value for r in records)
    return EvalSummary(
        n=n,
        mean_accuracy_pct=100.0 * fmean(r.accuracy for r in records) if n else 0.0,
        mean_best_score=fmean(r.best_score for r in records) if n else 0.0,
        category_counts=dict(counts),
        failures=sum(r.failed for r in records),
    )


# ======================================================================
# Protocols on top of single runs
# ======================================================================


@dataclass(frozen=True)
class StabilityResult:
    accuracies_pct: tuple[float, ...]
    mean_pct: float
    std_pct: float  # sample standard deviation (n-1)


def stability_run(
    run: RunConfig, repetitions: int = 5, completer: Completer | None = None,
    reseed: bool = True,
) -> StabilityResult:
    """Re-generate the dataset `repetitions` times and re-evaluate.

    Regeneration seeds derive from (generation seed, repetition); with
    reseed=False every repetition reuses the identical dataset, which is
    the degenerate configuration whose spread is exactly zero under a
    deterministic completer.
    """
    if run.generation is None:
        raise ConfigError("stability runs regenerate data; configure generation, not a path")
    if repetitions < 1:
        raise ConfigError("repetitions must be at least 1")
    if completer is None:
        completer = make_completer(run.endpoint)
    accs = []
    for rep in range(repetitions):
        gen = run.generation
        if reseed:
            gen = replace(gen, seed=derive(gen.seed, NS_STABILITY, rep))
        rep_run = replace(run, generation=gen)
        _, summary = evaluate_dataset(rep_run, completer=completer)
        accs.append(summary.mean_accuracy_pct)
        log.info("stability repetition %d/%d: %.2f%%", rep + 1, repetitions, accs[-1])
    mean = fmean(accs)
    std = stdev(accs) if len(accs) > 1 else 0.0
    return StabilityResult(tuple(accs), mean, std)


@dataclass(frozen=True)
class SweepCell:
    temperature: float
    top_p: float
    mean_accuracy_pct: float | None
    error: str | None = None


def decoding_sweep(
    run: RunConfig,
    temperatures: Sequence[float] = SWEEP_TEMPERATURES,
    top_ps: Sequence[float] = SWEEP_TOP_PS,
    completer: Completer | None = None,
) -> list[SweepCell]:
    """Evaluate the cartesian decoding grid over one shared dataset.

    A failing cell is recorded with its error and the sweep moves on.
    """
    dataset = load_run_dataset(run)
    if completer is None:
        completer = make_completer(run.endpoint)
    cells = []
    for temperature in temperatures:
        for top_p in top_ps:
            decoding = replace(run.decoding, temperature=temperature, top_p=top_p)
            try:
                _, summary = evaluate_dataset(
                    replace(run, decoding=decoding), completer=completer, dataset=dataset
                )
                cells.append(SweepCell(temperature, top_p, summary.mean_accuracy_pct))
            except Exception as exc:  # keep sweeping; report the hole
                log.warning("sweep cell (%s, %s) failed: %s", temperature, top_p, exc)
                cells.append(SweepCell(temperature, top_p, None, f"{type(exc).__name__}: {exc}"))
    return cells


# ======================================================================
# Config and record serialization
# ======================================================================


def run_config_to_json(run: RunConfig) -> dict:
    obj = {
        "seed": run.seed,
        "shots": run.shots,
        "attempts": run.attempts,
        "endpoint": {
            "base_url": run.endpoint.base_url,
            "model": run.endpoint.model,
            "auth_env": run.endpoint.auth_env,
            "timeout": run.endpoint.timeout,
            "max_in_flight": run.endpoint.max_in_flight,
            "retry": {
                "max_retries": run.endpoint.retry.max_retries,
                "backoff_base": run.endpoint.retry.backoff_base,
            },
        },
        "decoding": {
            "temperature": run.decoding.temperature,
            "top_p": run.decoding.top_p,
            "max_tokens": run.decoding.max_tokens,
        },
        "template": {"name": run.template.name, "annotate": run.template.annotate},
    }
    if run.dataset_path is not None:
        obj["dataset"] = {"path": str(run.dataset_path)}
    else:
        obj["dataset"] = generator.config_to_json(run.generation)
    return obj


def run_config_from_json(obj: dict) -> RunConfig:
    try:
        endpoint_obj = dict(obj["endpoint"])
        dataset_obj = dict(obj["dataset"])
        seed = int(obj["seed"])
    except KeyError as exc:
        raise ConfigError(f"run config is missing {exc}") from None
    retry_obj = endpoint_obj.get("retry", {})
    endpoint = EndpointConfig(
        base_url=endpoint_obj["base_url"],
        model=endpoint_obj.get("model", ""),
        auth_env=endpoint_obj.get("auth_env"),
        timeout=float(endpoint_obj.get("timeout", 60.0)),
        max_in_flight=int(endpoint_obj.get("max_in_flight", 4)),
        retry=RetryPolicy(
            max_retries=int(retry_obj.get("max_retries", 3)),
            backoff_base=float(retry_obj.get("backoff_base", 0.5)),
        ),
    )
    decoding_obj = obj.get("decoding", {})
    decoding = DecodingParams(
        temperature=float(decoding_obj.get("temperature", 0.0)),
        top_p=float(decoding_obj.get("top_p", 1.0)),
        max_tokens=int(decoding_obj.get("max_tokens", 512)),
    )
    template_obj = obj.get("template", {})
    template = PromptTemplate(
        name=template_obj.get("name", "v1"),
        annotate=bool(template_obj.get("annotate", False)),
    )
    dataset_path = dataset_obj.get("path")
    generation = None if dataset_path is not None else generator.config_from_json(dataset_obj)
    return RunConfig(
        seed=seed,
        endpoint=endpoint,
        dataset_path=dataset_path,
        generation=generation,
        shots=int(obj.get("shots", 2)),
        attempts=int(obj.get("attempts", 1)),
        decoding=decoding,
        template=template,
    )


def record_to_json(record: RunRecord) -> dict:
    return {
        "index": record.index,
        "operands": list(record.instance.operands),
        "target": record.instance.target,
        "tier": record.tier,
        "max_score": record.max_score,
        "difficulty": record.difficulty,
        "prompt": record.prompt,
        "completions": record.completions,
        "attempt_scores": record.attempt_scores,
        "attempt_categories": [c.value for c in record.attempt_categories],
        "best_score": record.best_score,
        "accuracy": record.accuracy,
        "category": record.category.value,
        "latency": record.latency,
        "failed": record.failed,
    }


def record_from_json(obj: dict) -> RunRecord:
    return RunRecord(
        index=int(obj["index"]),
        instance=Instance(tuple(int(v) for v in obj["operands"]), int(obj["target"])),
        tier=obj["tier"],
        max_score=int(obj["max_score"]),
        difficulty=float(obj["difficulty"]),
        prompt=obj["prompt"],
        completions=list(obj["completions"]),
        attempt_scores=[int(s) for s in obj["attempt_scores"]],
        attempt_categories=[ErrorCategory(c) for c in obj["attempt_categories"]],
        best_score=int(obj["best_score"]),
        accuracy=float(obj["accuracy"]),
        category=ErrorCategory(obj["category"]),
        latency=float(obj["latency"]),
        failed=bool(obj["failed"]),
    )


def save_records(records: Sequence[RunRecord], run: RunConfig, path) -> None:
    lines = [json.dumps({"schema": RECORDS_SCHEMA, "config": run_config_to_json(run)},
                        separators=(",", ":"))]
    lines.extend(json.dumps(record_to_json(r), separators=(",", ":")) for r in records)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_records(path) -> tuple[list[RunRecord], dict]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise ValueError("empty records file")
    header = json.loads(lines[0])
    if not isinstance(header, dict) or header.get("schema") != RECORDS_SCHEMA:
        raise ValueError(f"missing records schema tag {RECORDS_SCHEMA!r}")
    records = [record_from_json(json.loads(ln)) for ln in lines[1:]]
    return records, header.get("config", {})
