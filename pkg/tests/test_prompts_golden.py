"""Byte-exactness of every rendered prompt against hand-written golden files."""

from pathlib import Path

import pytest

from conftest import make_audio_sample
from stresskit.evalkit import render_eval_prompt
from stresskit.prompts import load_template, render, template_hashes
from stresskit.taskgen import materialize_tasks

GOLDEN = Path(__file__).parent / "golden"


def golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


@pytest.fixture
def sample():
    return make_audio_sample()


@pytest.mark.parametrize(
    "task,variant,name",
    [
        ("ssr", "audio_only", "ssr_eval_audio.txt"),
        ("ssr", "audio_plus_stress", "ssr_eval_stress.txt"),
        ("ssr", "audio_plus_stress_plus_transcription", "ssr_eval_stress_transcript.txt"),
        ("open_ssr", "audio_only", "open_ssr_eval.txt"),
        ("ssd", "audio_only", "ssd_eval.txt"),
        ("asr", "audio_only", "asr_eval.txt"),
    ],
)
def test_eval_prompts_byte_equal(sample, task, variant, name):
    assert render_eval_prompt(sample, task, variant) == golden(name)


def test_required_substrings_present(sample):
    ssr = render_eval_prompt(sample, "ssr", "audio_only")
    assert "what is most likely the underlying intention of the speaker?" in ssr
    ssd = render_eval_prompt(sample, "ssd", "audio_only")
    assert "Answer format: [stressed_word_1, ...]" in ssd


@pytest.mark.parametrize("kind", ["ssd", "end_to_end", "elaborated", "cascade"])
def test_training_prompts_byte_equal(sample, kind):
    (task,) = materialize_tasks(sample, kinds=[kind])
    assert task.prompt == golden(f"train_{kind}.prompt.txt")
    assert task.expected_answer == golden(f"train_{kind}.answer.txt")


def test_judge_ssr_user_byte_equal():
    rendered = render(
        load_template("judge_ssr.user.txt"),
        {
            "[input prompt]": "What did the speaker mean?",
            "[speech lm output]": "Answer: 2.",
        },
    )
    assert rendered == golden("judge_ssr_user.txt")


def test_judge_ssd_user_byte_equal():
    rendered = render(
        load_template("judge_ssd.user.txt"),
        {
            "[input prompt]": "What words were stressed?",
            "[speech lm output]": '["lovely", "we have"]',
        },
    )
    assert rendered == golden("judge_ssd_user.txt")


def test_judge_open_user_byte_equal():
    rendered = render(
        load_template("judge_open.user.txt"),
        {
            "[input prompt]": "What is the underlying intention?",
            "[gt transcription]": '"I asked you to call her yesterday."',
            "[gt stressed words]": '["call"]',
            "[gt intended meaning]": (
                "The speaker is emphasizing that the requested action was to call "
                "as opposed to any other action"
            ),
            "[audio llm output]": "The model reply text.",
        },
    )
    assert rendered == golden("judge_open_user.txt")


def test_judge_system_prompts_contain_contracts():
    ssr = load_template("judge_ssr.system.txt")
    assert "The answer should be an integer, either 1 or 2." in ssr
    assert '{"answer": 2}' in ssr and '{"answer": 1}' in ssr
    ssd = load_template("judge_ssd.system.txt")
    assert (
        "If the model mistakenly outputs two or more words as a single word, "
        "you should split them into separate words." in ssd
    )
    assert '{"answer": ["lovely", "we", "have"]}' in ssd
    rubric = load_template("judge_open.system.txt")
    assert '"answer" must be an integer from 1 to 5.' in rubric
    assert "EXAMPLE (score = 5):" in rubric and "EXAMPLE (score = 1):" in rubric


def test_template_hashes_cover_all_templates():
    hashes = template_hashes()
    assert len(hashes) == 22
    assert all(len(h) == 64 for h in hashes.values())
