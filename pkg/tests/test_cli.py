import json
from pathlib import Path

import pytest

from stresskit import corpus, taskgen
from stresskit.cli import main


def run(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_full_pipeline(tmp_path, capsys):
    base = ["--out-dir", str(tmp_path), "--seed", "77"]
    code, out, _ = run(base + ["gen-text", "4"], capsys)
    assert code == 0
    assert json.loads(out)["n_samples"] == 4

    code, out, _ = run(base + ["synth"], capsys)
    assert code == 0
    assert json.loads(out)["n_samples"] == 16

    code, out, _ = run(base + ["verify"], capsys)
    assert code == 0
    verdict = json.loads(out)
    assert verdict["accepted"] + verdict["rejected"] == 16

    code, out, _ = run(base + ["materialize", "--source", "full"], capsys)
    assert json.loads(out)["n_instances"] == 64
    code, out, _ = run(base + ["materialize", "--source", "verified"], capsys)
    assert code == 0

    code, out, _ = run(base + ["stats"], capsys)
    stats = json.loads(out)
    assert stats["n_samples"] == 16
    assert stats["n_unique_transcriptions"] == 4
    assert stats["n_female"] + stats["n_male"] == 16

    code, out, _ = run(base + ["plan"], capsys)
    plan_summary = json.loads(out)
    assert plan_summary["total_steps"] == 1595
    plan = taskgen.read_plan(tmp_path / "plan.json")
    assert plan.stage1.steps == 1261

    code, out, _ = run(base + ["eval", "--task", "ssr", "--variant", "audio"], capsys)
    report = json.loads(out)
    assert report["ssr_accuracy"] == 1.0

    code, out, _ = run(base + ["report"], capsys)
    assert code == 0
    assert (tmp_path / "report.md").exists()
    for stage in ["gen-text", "synth", "verify", "plan"]:
        assert (tmp_path / "provenance" / f"{stage}.json").exists()


def test_stage_order_error_is_machine_readable(tmp_path, capsys):
    code, out, err = run(["--out-dir", str(tmp_path), "synth"], capsys)
    assert code == 1
    body = json.loads(err)
    assert body["error"]["type"] == "StageOrderError"
    assert "text_samples.jsonl" in body["error"]["missing_artifact"]


def test_verify_requires_synth(tmp_path, capsys):
    code, _, err = run(["--out-dir", str(tmp_path), "verify"], capsys)
    assert code == 1
    assert json.loads(err)["error"]["type"] == "StageOrderError"


def test_backend_override_complement(tmp_path, capsys):
    base = ["--out-dir", str(tmp_path), "--seed", "5"]
    run(base + ["gen-text", "2"], capsys)
    run(base + ["synth"], capsys)
    code, out, _ = run(
        base + ["--backend", "slm=mock:complement", "eval", "--task", "ssr", "--variant", "audio"],
        capsys,
    )
    assert code == 0
    assert json.loads(out)["ssr_accuracy"] == 0.0


def test_pipeline_rerun_is_byte_reproducible(tmp_path, capsys):
    base = ["--out-dir", str(tmp_path), "--seed", "31"]
    run(base + ["gen-text", "3"], capsys)
    run(base + ["synth"], capsys)
    manifest = (tmp_path / "audio_full.jsonl").read_bytes()
    wav = sorted((tmp_path / "audio").glob("*.wav"))[0]
    blob = wav.read_bytes()
    run(base + ["gen-text", "3"], capsys)
    run(base + ["synth"], capsys)
    assert (tmp_path / "audio_full.jsonl").read_bytes() == manifest
    assert wav.read_bytes() == blob


def test_config_file_drives_run(tmp_path, capsys):
    config = tmp_path / "run.toml"
    config.write_text(
        f"""
root_seed = 9
out_dir = "{tmp_path / 'run'}"

[backends.stress]
kind = "mock"
p_flip = 0.0

[verification]
min_transcription_ratio = 0.8
""",
        encoding="utf-8",
    )
    base = ["--config", str(config)]
    run(base + ["gen-text", "2"], capsys)
    run(base + ["synth"], capsys)
    code, out, _ = run(base + ["verify"], capsys)
    assert code == 0
    assert json.loads(out)["accepted"] == 8
