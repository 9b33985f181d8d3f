"""Command-line interface, in-process and as a real subprocess."""

import json
import subprocess
import sys

import pytest

from mathador.cli import main
from mathador.generator import GenerationConfig, assemble_dataset, save_dataset


def run_json(tmp_path, **overrides):
    """Write a minimal eval config against the perfect mock; return its path."""
    obj = {
        "seed": 5,
        "endpoint": {"base_url": "mock:oracle-best"},
        "dataset": {"seed": 5, "size": 4},
        "shots": 1,
    }
    obj.update(overrides)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(obj))
    return path


# ======================================================================
# generate
# ======================================================================


def test_generate_writes_a_loadable_dataset(tmp_path):
    out = tmp_path / "ds.jsonl"
    assert main(["generate", "--size", "5", "--seed", "3", "--output", str(out)]) == 0
    from mathador.generator import load_dataset
    dataset = load_dataset(out, verify="strict")
    assert len(dataset) == 5
    assert dataset.config.seed == 3


def test_generate_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["generate", "--size", "5", "--seed", "3", "--output", str(a)])
    main(["generate", "--size", "5", "--seed", "3", "--output", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_generate_to_stdout(capsys):
    assert main(["generate", "--size", "2", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 3  # header + 2 instances
    assert json.loads(lines[0])["schema"] == "mathador-dataset-v1"


def test_generate_tier_and_range_flags(tmp_path):
    out = tmp_path / "ds.jsonl"
    main(["generate", "--size", "4", "--seed", "2", "--tier", "hard",
          "--target-range", "10:60", "--output", str(out)])
    from mathador.generator import load_dataset
    dataset = load_dataset(out, verify="strict")
    assert dataset.config.tier == "hard"
    assert dataset.config.target_range == (10, 60)
    assert all(10 <= item.instance.target <= 60 for item in dataset.items)


def test_generate_without_size_or_config_errors(capsys):
    assert main(["generate"]) == 1
    assert "error:" in capsys.readouterr().err


# ======================================================================
# solve / score
# ======================================================================


def test_solve_prints_the_frozen_facts(capsys):
    assert main(["solve", "--operands", "2,4,8,11,17", "--target", "34"]) == 0
    out = capsys.readouterr().out
    assert "solutions: 1246" in out
    assert "max score: 18" in out
    assert "(12496/1246^2)" in out
    assert "best solution, 18 points (bonus):" in out


def test_solve_unreachable(capsys):
    assert main(["solve", "--operands", "1,1,1,1,1", "--target", "50"]) == 0
    assert "solutions: 0 (unreachable)" in capsys.readouterr().out


def test_solve_rejects_bad_operands(capsys):
    assert main(["solve", "--operands", "1,2,3", "--target", "5"]) == 1
    assert "error:" in capsys.readouterr().err


def test_score_full_solution(tmp_path, capsys):
    steps = tmp_path / "steps.txt"
    steps.write_text("8 + 4 = 12\n12 - 11 = 1\n17 / 1 = 17\n17 * 2 = 34\n")
    assert main(["score", "--operands", "2,4,8,11,17", "--target", "34",
                 "--steps", str(steps)]) == 0
    assert "score: 18 (target 5 + operations 7 + bonus 6)" in capsys.readouterr().out


def test_score_reuse_reads_zero(tmp_path, capsys):
    steps = tmp_path / "steps.txt"
    steps.write_text("2 + 4 = 6\n6 + 2 = 8\n")
    assert main(["score", "--operands", "2,4,8,11,17", "--target", "8",
                 "--steps", str(steps)]) == 0
    assert "score: 0 (reuse_of_numbers)" in capsys.readouterr().out


def test_score_rejects_malformed_step_file(tmp_path, capsys):
    steps = tmp_path / "steps.txt"
    steps.write_text("8 + 4 = 12\nnot a step\n")
    assert main(["score", "--operands", "2,4,8,11,17", "--target", "12",
                 "--steps", str(steps)]) == 1
    assert "error:" in capsys.readouterr().err


# ======================================================================
# eval / report
# ======================================================================


def test_eval_reports_and_persists(tmp_path, capsys):
    records = tmp_path / "records.jsonl"
    report = tmp_path / "report.json"
    rc = main(["eval", "--config", str(run_json(tmp_path)),
               "--output", str(records), "--report", str(report)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "mean accuracy     100.00%" in out
    assert records.exists()
    obj = json.loads(report.read_text())
    assert obj["schema"] == "mathador-report-v1"
    assert obj["mean_accuracy_pct"] == 100.0
    assert obj["config"]["endpoint"]["base_url"] == "mock:oracle-best"


def test_eval_runs_are_byte_identical(tmp_path):
    config = run_json(tmp_path)
    r1, r2 = tmp_path / "r1.jsonl", tmp_path / "r2.jsonl"
    main(["eval", "--config", str(config), "--output", str(r1)])
    main(["eval", "--config", str(config), "--output", str(r2)])
    assert r1.read_bytes() == r2.read_bytes()


def test_eval_over_a_dataset_file(tmp_path, capsys):
    ds = tmp_path / "ds.jsonl"
    save_dataset(assemble_dataset(GenerationConfig(seed=9, size=3)), ds)
    config = run_json(tmp_path, dataset={"path": str(ds)})
    assert main(["eval", "--config", str(config)]) == 0
    assert "records           3" in capsys.readouterr().out


def test_report_reaggregates_saved_records(tmp_path, capsys):
    records = tmp_path / "records.jsonl"
    main(["eval", "--config", str(run_json(tmp_path)), "--output", str(records)])
    capsys.readouterr()
    assert main(["report", str(records), "--seed", "5"]) == 0
    assert "mean accuracy     100.00%" in capsys.readouterr().out


def test_report_rescore_is_a_no_op_on_fresh_records(tmp_path, capsys):
    records = tmp_path / "records.jsonl"
    main(["eval", "--config", str(run_json(tmp_path)), "--output", str(records)])
    capsys.readouterr()
    assert main(["report", str(records), "--rescore"]) == 0
    assert "rescore changed" not in capsys.readouterr().out


def test_report_missing_file_errors(capsys):
    assert main(["report", "/nonexistent/records.jsonl"]) == 1
    assert "error:" in capsys.readouterr().err


# ======================================================================
# sweep / stability
# ======================================================================


def test_sweep_prints_a_grid_and_writes_json(tmp_path, capsys):
    out = tmp_path / "sweep.json"
    rc = main(["sweep", "--config", str(run_json(tmp_path)),
               "--temperatures", "0.0,0.5", "--top-ps", "0.3,1.0",
               "--output", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "temp\\top_p" in text
    obj = json.loads(out.read_text())
    assert obj["schema"] == "mathador-sweep-v1"
    assert len(obj["cells"]) == 4
    assert all(c["mean_accuracy_pct"] == 100.0 for c in obj["cells"])


def test_stability_prints_repetitions(tmp_path, capsys):
    out = tmp_path / "stab.json"
    rc = main(["stability", "--config", str(run_json(tmp_path)),
               "--repetitions", "2", "--output", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "repetition 0:" in text and "repetition 1:" in text
    obj = json.loads(out.read_text())
    assert obj["schema"] == "mathador-stability-v1"
    assert len(obj["accuracies_pct"]) == 2


def test_stability_rejects_dataset_path_configs(tmp_path, capsys):
    ds = tmp_path / "ds.jsonl"
    save_dataset(assemble_dataset(GenerationConfig(seed=9, size=2)), ds)
    config = run_json(tmp_path, dataset={"path": str(ds)})
    assert main(["stability", "--config", str(config)]) == 1
    assert "error: ConfigError" in capsys.readouterr().err


# ======================================================================
# play (subprocess: the loop reads stdin)
# ======================================================================


def play(args, stdin_text):
    return subprocess.run(
        [sys.executable, "-m", "mathador.cli", "play", *args],
        input=stdin_text, capture_output=True, text=True, timeout=120,
    )


def test_play_full_game_scores_with_bonus():
    result = play(["--operands", "2,4,8,11,17", "--target", "34"],
                  "8 + 4 = 12\n12 - 11 = 1\n17 / 1 = 17\n17 * 2 = 34\ndone\n")
    assert result.returncode == 0
    assert "score: 18 (target 5 + operations 7 + bonus 6)" in result.stdout


def test_play_rejects_illegal_lines_but_continues():
    result = play(["--operands", "2,4,8,11,17", "--target", "12"],
                  "3 + 4 = 7\n8 + 4 = 13\n8 + 4 = 12\ndone\n")
    assert result.returncode == 0
    assert "3 is not available" in result.stdout
    assert "check the arithmetic: 8 + 4 = 12" in result.stdout
    assert "score: 6 (target 5 + operations 1)" in result.stdout


def test_play_quit_abandons():
    result = play(["--operands", "2,4,8,11,17", "--target", "34"], "quit\n")
    assert result.returncode == 0
    assert "abandoned" in result.stdout


def test_play_sampled_instance_is_seeded():
    a = play(["--seed", "4"], "quit\n")
    b = play(["--seed", "4"], "quit\n")
    assert a.stdout == b.stdout
    assert "sampled a" in a.stdout


# ======================================================================
# parser behavior
# ======================================================================


def test_unknown_subcommand_is_a_usage_error():
    result = subprocess.run(
        [sys.executable, "-m", "mathador.cli", "frobnicate"],
        capture_output=True, text=True, timeout=60,
    )
    assert result.returncode == 2


def test_no_subcommand_is_a_usage_error():
    result = subprocess.run(
        [sys.executable, "-m", "mathador.cli"],
        capture_output=True, text=True, timeout=60,
    )
    assert result.returncode == 2


def test_console_script_is_installed():
    result = subprocess.run(["mathador", "--help"], capture_output=True, text=True,
                            timeout=60)
    assert result.returncode == 0
    assert "generate" in result.stdout
