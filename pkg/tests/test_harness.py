"""Evaluation harness: prompts, HTTP client, mock players, protocols."""

import http.server
import json
import os
import threading

import pytest

from mathador import players
from mathador.answers import ErrorCategory
from mathador.game import Instance, Operation, Step
from mathador.generator import GenerationConfig, assemble_dataset
from mathador.harness import (
    RECORDS_SCHEMA,
    RULES_V1,
    SYSTEM_MESSAGE,
    ChatCompletionsClient,
    ConfigError,
    DecodingParams,
    EndpointConfig,
    EndpointError,
    PromptTemplate,
    RetryPolicy,
    RunConfig,
    ShotExample,
    build_shot_bank,
    decoding_sweep,
    evaluate_dataset,
    load_records,
    make_completer,
    render_prompt,
    run_config_from_json,
    run_config_to_json,
    save_records,
    stability_run,
    summarize,
)

INSTANCE = Instance((2, 4, 8, 11, 17), 34)

MOCK_ENDPOINT = EndpointConfig(base_url="mock:oracle-best")


def small_run(**kw):
    defaults = dict(
        seed=11,
        endpoint=MOCK_ENDPOINT,
        generation=GenerationConfig(seed=11, size=6),
        shots=2,
        attempts=1,
    )
    defaults.update(kw)
    return RunConfig(**defaults)


# ======================================================================
# Prompt rendering
# ======================================================================


def test_zero_shot_prompt_is_rules_then_query():
    prompt = render_prompt(INSTANCE, shots=())
    assert prompt.startswith(RULES_V1)
    assert prompt.endswith("Base numbers: 2, 4, 8, 11, 17\nTarget: 34\nSolution:")


def test_shots_appear_between_rules_and_query():
    shot = ShotExample(
        Instance((1, 1, 1, 1, 1), 2),
        (Step(1, Operation.ADD, 1, 2),),
    )
    prompt = render_prompt(INSTANCE, shots=(shot, shot))
    assert prompt.count("Base numbers:") == 3
    assert prompt.count("1 + 1 = 2") == 2
    assert prompt.index("1 + 1 = 2") < prompt.index("Base numbers: 2, 4, 8, 11, 17")


def test_annotated_shots_show_the_remaining_pool():
    shot = ShotExample(
        Instance((2, 4, 8, 11, 17), 12),
        (Step(8, Operation.ADD, 4, 12),),
    )
    prompt = render_prompt(INSTANCE, shots=(shot,), template=PromptTemplate(annotate=True))
    assert "8 + 4 = 12  (remaining: 2, 11, 12, 17)" in prompt


def test_prompt_parses_back_to_its_instance():
    prompt = render_prompt(INSTANCE, shots=build_shot_bank(3, 2))
    assert players.instance_from_prompt(prompt) == INSTANCE


def test_shot_bank_is_deterministic():
    assert build_shot_bank(5, 3) == build_shot_bank(5, 3)
    assert build_shot_bank(5, 3) != build_shot_bank(6, 3)


def test_shot_bank_prefix_stability():
    assert build_shot_bank(5, 3)[:2] == build_shot_bank(5, 2)


def test_shots_demonstrate_minimum_score_solutions():
    from mathador.oracle import solve
    for shot in build_shot_bank(9, 4):
        solved = solve(shot.instance)
        low = min(score for _, score in solved.solutions)
        got = 5 + sum(s.op.points for s in shot.steps)
        assert got == low


# ======================================================================
# HTTP client
# ======================================================================


class ScriptedHTTPHandler(http.server.BaseHTTPRequestHandler):
    """Serves a scripted status sequence; 200s carry a canned completion."""

    statuses: list = []
    requests_seen: list = []
    completion = "17 * 2 = 34"

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).requests_seen.append(
            {"path": self.path, "auth": self.headers.get("Authorization"), "body": body}
        )
        status = type(self).statuses.pop(0) if type(self).statuses else 200
        if status != 200:
            self.send_response(status)
            self.end_headers()
            return
        payload = json.dumps(
            {"choices": [{"message": {"content": type(self).completion}}]}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_endpoint():
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), ScriptedHTTPHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    ScriptedHTTPHandler.statuses = []
    ScriptedHTTPHandler.requests_seen = []
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


FAST_RETRY = RetryPolicy(max_retries=3, backoff_base=0.01)


def test_client_retries_through_rate_limits(http_endpoint):
    ScriptedHTTPHandler.statuses = [429, 429, 200]
    client = ChatCompletionsClient(
        EndpointConfig(base_url=http_endpoint, model="m", retry=FAST_RETRY)
    )
    text = client.complete("prompt", DecodingParams())
    assert text == "17 * 2 = 34"
    assert len(ScriptedHTTPHandler.requests_seen) == 3


def test_client_retries_server_errors_then_gives_up(http_endpoint):
    ScriptedHTTPHandler.statuses = [500, 503, 500, 502]
    client = ChatCompletionsClient(
        EndpointConfig(base_url=http_endpoint, model="m", retry=FAST_RETRY)
    )
    with pytest.raises(EndpointError, match="gave up"):
        client.complete("prompt", DecodingParams())
    assert len(ScriptedHTTPHandler.requests_seen) == 4  # 1 try + 3 retries


def test_client_does_not_retry_client_errors(http_endpoint):
    ScriptedHTTPHandler.statuses = [404]
    client = ChatCompletionsClient(
        EndpointConfig(base_url=http_endpoint, model="m", retry=FAST_RETRY)
    )
    with pytest.raises(EndpointError, match="404"):
        client.complete("prompt", DecodingParams())
    assert len(ScriptedHTTPHandler.requests_seen) == 1


def test_client_sends_the_chat_wire_format(http_endpoint):
    client = ChatCompletionsClient(
        EndpointConfig(base_url=http_endpoint, model="test-model", retry=FAST_RETRY)
    )
    client.complete("the prompt", DecodingParams(temperature=0.3, top_p=0.9, max_tokens=64))
    (seen,) = ScriptedHTTPHandler.requests_seen
    assert seen["path"] == "/chat/completions"
    body = seen["body"]
    assert body["model"] == "test-model"
    assert body["temperature"] == 0.3
    assert body["top_p"] == 0.9
    assert body["max_tokens"] == 64
    assert body["messages"][0] == {"role": "system", "content": SYSTEM_MESSAGE}
    assert body["messages"][1] == {"role": "user", "content": "the prompt"}


def test_client_appends_the_completions_path_once(http_endpoint):
    client = ChatCompletionsClient(
        EndpointConfig(base_url=http_endpoint + "/chat/completions", retry=FAST_RETRY)
    )
    client.complete("p", DecodingParams())
    assert ScriptedHTTPHandler.requests_seen[0]["path"] == "/chat/completions"


def test_missing_auth_variable_fails_before_any_request(http_endpoint, monkeypatch):
    monkeypatch.delenv("MATHADOR_TEST_TOKEN", raising=False)
    with pytest.raises(ConfigError, match="MATHADOR_TEST_TOKEN"):
        ChatCompletionsClient(
            EndpointConfig(base_url=http_endpoint, auth_env="MATHADOR_TEST_TOKEN")
        )
    assert ScriptedHTTPHandler.requests_seen == []


def test_auth_token_is_sent_as_bearer(http_endpoint, monkeypatch):
    monkeypatch.setenv("MATHADOR_TEST_TOKEN", "sekrit")
    client = ChatCompletionsClient(
        EndpointConfig(base_url=http_endpoint, auth_env="MATHADOR_TEST_TOKEN",
                       retry=FAST_RETRY)
    )
    client.complete("p", DecodingParams())
    assert ScriptedHTTPHandler.requests_seen[0]["auth"] == "Bearer sekrit"


# ======================================================================
# Mock completers
# ======================================================================


def test_make_completer_dispatches_mocks():
    assert isinstance(make_completer(EndpointConfig("mock:oracle-best")),
                      players.OracleBestPlayer)
    assert isinstance(make_completer(EndpointConfig("mock:greedy")), players.GreedyPlayer)
    assert isinstance(make_completer(EndpointConfig("mock:illegal-operand")),
                      players.IllegalOperandPlayer)
    assert isinstance(make_completer(EndpointConfig("mock:formatting")),
                      players.FormattingPlayer)
    stochastic = make_completer(EndpointConfig("mock:stochastic:0.25:9"))
    assert isinstance(stochastic, players.StochasticPlayer)
    assert stochastic.p == 0.25 and stochastic.seed == 9


def test_make_completer_rejects_unknown_mocks():
    with pytest.raises(ConfigError):
        make_completer(EndpointConfig("mock:perfect"))
    with pytest.raises(ConfigError):
        make_completer(EndpointConfig("mock:stochastic:high:1"))


# ======================================================================
# Run config
# ======================================================================


def test_run_config_requires_exactly_one_source():
    with pytest.raises(ConfigError):
        RunConfig(seed=1, endpoint=MOCK_ENDPOINT)
    with pytest.raises(ConfigError):
        RunConfig(seed=1, endpoint=MOCK_ENDPOINT, dataset_path="x",
                  generation=GenerationConfig(seed=1, size=1))


def test_run_config_json_round_trip():
    run = small_run(attempts=3, decoding=DecodingParams(0.7, 0.9, 256),
                    template=PromptTemplate(annotate=True))
    assert run_config_from_json(run_config_to_json(run)) == run


# ======================================================================
# Evaluation
# ======================================================================


def test_oracle_best_scores_everything_perfectly():
    records, summary = evaluate_dataset(small_run())
    assert summary.n == 6
    assert summary.mean_accuracy_pct == 100.0
    assert all(r.category is ErrorCategory.NONE for r in records)
    assert all(r.best_score == r.max_score for r in records)
    assert all(r.latency == 0.0 for r in records)  # local players cost nothing


def test_records_come_back_in_dataset_order():
    records, _ = evaluate_dataset(small_run())
    assert [r.index for r in records] == list(range(6))


def test_illegal_operand_mock_fails_uniformly():
    records, summary = evaluate_dataset(
        small_run(endpoint=EndpointConfig("mock:illegal-operand"))
    )
    assert summary.mean_accuracy_pct == 0.0
    assert all(r.category is ErrorCategory.ILLEGAL_OPERAND for r in records)


def test_formatting_mock_fails_uniformly():
    records, _ = evaluate_dataset(small_run(endpoint=EndpointConfig("mock:formatting")))
    assert all(r.category is ErrorCategory.FORMATTING for r in records)


def test_single_worker_and_pool_agree():
    run = small_run()
    serial = evaluate_dataset(small_run(endpoint=EndpointConfig("mock:oracle-best",
                                                                max_in_flight=1)))
    pooled = evaluate_dataset(run)
    assert [r.best_score for r in serial[0]] == [r.best_score for r in pooled[0]]
    assert [r.prompt for r in serial[0]] == [r.prompt for r in pooled[0]]


def test_scripted_attempts_take_the_best():
    dataset = assemble_dataset(GenerationConfig(seed=11, size=1))
    inst = dataset.items[0].instance
    best = players.OracleBestPlayer().complete(
        render_prompt(inst), DecodingParams()
    )
    script = {(inst.operands, inst.target): ["nonsense", best]}
    run = small_run(generation=GenerationConfig(seed=11, size=1), attempts=3)
    records, _ = evaluate_dataset(run, completer=players.ScriptedPlayer(script))
    (record,) = records
    assert record.attempt_scores[0] == 0
    assert record.attempt_scores[1] == record.max_score
    assert len(record.attempt_scores) == 2  # early stop at the instance maximum
    assert record.best_score == record.max_score
    assert record.category is ErrorCategory.NONE


def test_best_attempt_tie_goes_to_the_earliest():
    dataset = assemble_dataset(GenerationConfig(seed=11, size=1))
    inst = dataset.items[0].instance
    script = {(inst.operands, inst.target): ["8 + 4 = 12", "17 + 2 = 19"]}
    run = small_run(generation=GenerationConfig(seed=11, size=1), attempts=2)
    records, _ = evaluate_dataset(run, completer=players.ScriptedPlayer(script))
    (record,) = records
    assert record.attempt_scores == [0, 0]
    assert record.category is record.attempt_categories[0]


class _ExplodingCompleter:
    LOCAL = True

    def complete(self, prompt, decoding):
        raise EndpointError("boom")


def test_endpoint_failure_marks_the_record():
    records, summary = evaluate_dataset(small_run(), completer=_ExplodingCompleter())
    assert all(r.failed for r in records)
    assert all(r.best_score == 0 for r in records)
    assert summary.failures == 6
    assert summary.failure_rate_pct == 100.0


def test_summarize_counts_categories():
    records, _ = evaluate_dataset(small_run())
    summary = summarize(records)
    assert summary.category_counts == {"none": 6}


# ======================================================================
# Protocols
# ======================================================================


def test_stability_reseed_false_is_degenerate():
    result = stability_run(small_run(shots=1), repetitions=3, reseed=False)
    assert len(result.accuracies_pct) == 3
    assert result.std_pct == 0.0
    assert result.accuracies_pct[0] == result.accuracies_pct[1]


def test_stability_regenerates_fresh_datasets():
    result = stability_run(
        small_run(shots=0, endpoint=EndpointConfig("mock:greedy")), repetitions=3
    )
    assert len(set(result.accuracies_pct)) > 1  # different data, different scores
    assert result.std_pct > 0.0


def test_stability_requires_generation_config(tmp_path):
    from mathador.generator import save_dataset
    path = tmp_path / "ds.jsonl"
    save_dataset(assemble_dataset(GenerationConfig(seed=1, size=2)), path)
    run = small_run(generation=None, dataset_path=str(path))
    with pytest.raises(ConfigError):
        stability_run(run)


def test_decoding_sweep_covers_the_grid():
    cells = decoding_sweep(small_run(shots=0), temperatures=(0.0, 0.5), top_ps=(0.3, 1.0))
    assert [(c.temperature, c.top_p) for c in cells] == [
        (0.0, 0.3), (0.0, 1.0), (0.5, 0.3), (0.5, 1.0)
    ]
    assert all(c.mean_accuracy_pct == 100.0 for c in cells)
    assert all(c.error is None for c in cells)


# ======================================================================
# Record persistence
# ======================================================================


def test_records_round_trip(tmp_path):
    run = small_run()
    records, _ = evaluate_dataset(run)
    path = tmp_path / "records.jsonl"
    save_records(records, run, path)
    assert json.loads(path.read_text().split("\n")[0])["schema"] == RECORDS_SCHEMA
    loaded, config = load_records(path)
    assert run_config_from_json(config) == run
    assert loaded == records


def test_load_records_rejects_wrong_schema(tmp_path):
    path = tmp_path / "records.jsonl"
    path.write_text('{"schema":"mathador-dataset-v1","config":{}}\n')
    with pytest.raises(ValueError):
        load_records(path)


def test_two_runs_write_identical_bytes(tmp_path):
    run = small_run()
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    records1, _ = evaluate_dataset(run)
    records2, _ = evaluate_dataset(run)
    save_records(records1, run, p1)
    save_records(records2, run, p2)
    assert p1.read_bytes() == p2.read_bytes()
