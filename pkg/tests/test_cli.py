from __future__ import annotations

import json
from pathlib import Path

import pytest
import yaml
from click.testing import CliRunner

from shotmem.cli import (
    EXIT_BACKEND,
    EXIT_CONFIG,
    EXIT_MANIFEST,
    EXIT_PROVIDER,
    EXIT_RANGE,
    EXIT_SCRIPT,
    main,
)

DATA = Path(__file__).parent / "data" / "street_musician.json"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def generated_run(runner, tmp_path):
    out = tmp_path / "run"
    result = runner.invoke(
        main,
        ["generate", "--script", str(DATA), "--out", str(out), "--seed", "11"],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    return out


def test_generate_creates_manifest(generated_run):
    assert (generated_run / "story.json").exists()
    shot_dirs = sorted(p.name for p in (generated_run / "shots").iterdir())
    assert len(shot_dirs) == 8


def test_generate_missing_script(runner, tmp_path):
    result = runner.invoke(
        main,
        ["generate", "--script", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")],
    )
    assert result.exit_code == EXIT_CONFIG


def test_generate_invalid_script(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(
        json.dumps(
            {
                "story_name": "x",
                "story_overview": "y",
                "scenes": [{"scene_num": 1, "video_prompts": ["a"], "cut": [False]}],
            }
        )
    )
    result = runner.invoke(
        main, ["generate", "--script", str(bad), "--out", str(tmp_path / "o")]
    )
    assert result.exit_code == EXIT_SCRIPT
    record = json.loads((tmp_path / "o" / "error.json").read_text())
    assert record["error"] == "CutFirstShotFalse"


def test_generate_unreachable_backend_persists_error(runner, tmp_path):
    out = tmp_path / "o"
    result = runner.invoke(
        main,
        [
            "generate",
            "--script",
            str(DATA),
            "--out",
            str(out),
            "--backend",
            "http://127.0.0.1:1",
        ],
    )
    assert result.exit_code == EXIT_BACKEND
    record = json.loads((out / "error.json").read_text())
    assert record["error"] == "BackendFailure"
    assert record["shot_index"] == 0
    index = json.loads((out / "story.json").read_text())
    assert index["complete"] is False


def test_generate_unreachable_providers_exit_code(runner, tmp_path):
    out = tmp_path / "o"
    result = runner.invoke(
        main,
        [
            "generate",
            "--script",
            str(DATA),
            "--out",
            str(out),
            "--providers",
            "http://127.0.0.1:1",
        ],
    )
    assert result.exit_code == EXIT_PROVIDER
    record = json.loads((out / "error.json").read_text())
    assert record["error"] == "ProviderFailure"


def test_generate_resume_after_interrupt(runner, generated_run, tmp_path):
    # wipe the index back to a 5-shot prefix, then resume
    index = json.loads((generated_run / "story.json").read_text())
    index["completed"] = [0, 1, 2, 3, 4]
    index["complete"] = False
    (generated_run / "story.json").write_text(json.dumps(index))
    result = runner.invoke(
        main,
        [
            "generate",
            "--script",
            str(DATA),
            "--out",
            str(generated_run),
            "--seed",
            "11",
            "--resume",
        ],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    final = json.loads((generated_run / "story.json").read_text())
    assert final["complete"] is True


def test_operational_keys_from_config_file(runner, tmp_path):
    out = tmp_path / "run"
    config = tmp_path / "run.yaml"
    config.write_text(yaml.safe_dump({"script": str(DATA), "out": str(out), "seed": 2}))
    result = runner.invoke(main, ["generate", "--config", str(config)], catch_exceptions=False)
    assert result.exit_code == 0, result.output
    assert (out / "story.json").exists()


def test_generate_requires_script_somewhere(runner, tmp_path):
    result = runner.invoke(main, ["generate", "--out", str(tmp_path / "o")])
    assert result.exit_code == EXIT_CONFIG


def test_config_file_and_flag_override(runner, tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text(yaml.safe_dump({"seed": 3, "consistency_strength": 0.4}))
    out = tmp_path / "run"
    result = runner.invoke(
        main,
        [
            "generate",
            "--script",
            str(DATA),
            "--config",
            str(config),
            "--seed",
            "99",
            "--out",
            str(out),
        ],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    echoed = json.loads((out / "config.json").read_text())["config"]
    assert echoed["seed"] == 99  # flag wins
    assert echoed["consistency_strength"] == 0.4  # file value kept


def test_evaluate_writes_report_and_figures(runner, generated_run):
    result = runner.invoke(
        main,
        ["evaluate", "--manifest", str(generated_run), "--script", str(DATA)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    report_dir = generated_run / "report"
    assert (report_dir / "metrics_report.json").exists()
    assert (report_dir / "pair_table.csv").exists()
    assert (report_dir / "pair_similarity_heatmap.png").exists()
    assert (report_dir / "metrics_summary.png").exists()
    assert (report_dir / "prompt_vs_video_similarity.png").exists()
    assert "consistency overall" in result.output


def test_evaluate_is_reproducible(runner, generated_run, tmp_path):
    for sub in ("r1", "r2"):
        result = runner.invoke(
            main,
            [
                "evaluate",
                "--manifest",
                str(generated_run),
                "--script",
                str(DATA),
                "--out",
                str(tmp_path / sub),
            ],
            catch_exceptions=False,
        )
        assert result.exit_code == 0, result.output
    a = (tmp_path / "r1" / "metrics_report.json").read_bytes()
    b = (tmp_path / "r2" / "metrics_report.json").read_bytes()
    assert a == b
    assert (tmp_path / "r1" / "pair_table.csv").read_bytes() == (
        tmp_path / "r2" / "pair_table.csv"
    ).read_bytes()


def test_evaluate_partial_run_rejected(runner, generated_run):
    index = json.loads((generated_run / "story.json").read_text())
    index["complete"] = False
    index["completed"] = index["completed"][:3]
    (generated_run / "story.json").write_text(json.dumps(index))
    result = runner.invoke(
        main, ["evaluate", "--manifest", str(generated_run), "--script", str(DATA)]
    )
    assert result.exit_code == EXIT_MANIFEST


def test_inspect_memory_lists_bank(runner, generated_run):
    result = runner.invoke(
        main,
        ["inspect-memory", "--manifest", str(generated_run), "--shot", "0"],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    assert "bank after shot 0" in result.output
    # empty initial memory: at most per-shot-limit frames after shot 0
    n = int(result.output.split("bank after shot 0: ")[1].split(" frames")[0])
    assert 1 <= n <= 3


def test_inspect_memory_final_matches_manifest(runner, generated_run):
    final = json.loads((generated_run / "banks" / "after_shot_007.json").read_text())
    result = runner.invoke(
        main,
        ["inspect-memory", "--manifest", str(generated_run), "--shot", "7"],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    assert f"{len(final['frames'])} frames" in result.output


def test_inspect_memory_out_of_range(runner, generated_run):
    result = runner.invoke(
        main, ["inspect-memory", "--manifest", str(generated_run), "--shot", "42"]
    )
    assert result.exit_code == EXIT_RANGE


def test_validate_script_ok(runner):
    result = runner.invoke(main, ["validate-script", "--script", str(DATA)])
    assert result.exit_code == 0
    assert "scenes: 3; shots: 8" in result.output


def test_validate_script_rejects_bad(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    result = runner.invoke(main, ["validate-script", "--script", str(bad)])
    assert result.exit_code == EXIT_SCRIPT


def test_generate_with_reference_images(runner, tmp_path):
    import numpy as np

    from shotmem.imagery import encode_png

    ref = tmp_path / "ref.png"
    ref.write_bytes(encode_png(np.full((32, 32, 3), [0.8, 0.3, 0.2])))
    out = tmp_path / "run"
    result = runner.invoke(
        main,
        [
            "generate",
            "--script",
            str(DATA),
            "--out",
            str(out),
            "--refs",
            str(ref),
        ],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    initial = json.loads((out / "banks" / "initial.json").read_text())
    assert len(initial["frames"]) == 1
    assert initial["frames"][0]["source_shot"] == -1
