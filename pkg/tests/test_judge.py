import pytest

from stresskit.backends import MockJudgeBackend, ScriptedChatBackend
from stresskit.judge import (
    extract_answer_value,
    judge_choice,
    judge_open,
    judge_word_list,
    strip_audio_placeholder,
)

REFERENCE = {
    "transcription": "I asked you to call her yesterday.",
    "stressed_words": ["call"],
    "intended_meaning": (
        "The speaker is emphasizing that the requested action was to call "
        "as opposed to any other action"
    ),
}


def test_extract_first_single_key_object():
    assert extract_answer_value('noise {"answer": 2} trailing') == 2
    assert extract_answer_value('{"answer": ["a", "b"]}') == ["a", "b"]


def test_extract_rejects_multi_key():
    text = '{"answer": 1, "reason": "x"} then {"answer": 2}'
    assert extract_answer_value(text) == 2


def test_extract_none_when_absent():
    assert extract_answer_value("no json here") is None
    assert extract_answer_value('{"other": 1}') is None


def test_strip_audio_placeholder():
    assert strip_audio_placeholder("[audio]\n\nQuestion") == "Question"
    assert strip_audio_placeholder("[Audio]\n\nQuestion") == "Question"
    assert strip_audio_placeholder("Question") == "Question"


def test_judge_choice_answer_prefix():
    verdict = judge_choice(
        MockJudgeBackend(),
        "According to the intonation of the speaker, what is more probable?",
        "Answer: 1. Yesterday, someone did not inform the speaker about the meeting.",
    )
    assert verdict.parsed_ok and verdict.choice == 1
    assert verdict.kind == "choice"
    assert verdict.words is None and verdict.score is None


def test_judge_choice_option_sentence():
    verdict = judge_choice(
        MockJudgeBackend(),
        "what is more probable?",
        "Someone did not inform the speaker about the meeting that occurred yesterday. "
        "Therefore, option 2 is more probable than option 1.",
    )
    assert verdict.parsed_ok and verdict.choice == 2


def test_judge_choice_retry_exhaustion():
    backend = ScriptedChatBackend(["maybe", "maybe", "maybe"])
    verdict = judge_choice(backend, "prompt", "output")
    assert verdict.parsed_ok is False
    assert verdict.attempts == 3
    assert verdict.choice is None


def test_judge_choice_rejects_out_of_range():
    backend = ScriptedChatBackend(['{"answer": 3}', '{"answer": 0}', '{"answer": 2}'])
    verdict = judge_choice(backend, "p", "o")
    assert verdict.parsed_ok and verdict.choice == 2
    assert verdict.attempts == 3


def test_judge_word_list_splits_joined_words():
    verdict = judge_word_list(
        MockJudgeBackend(),
        'The speaker said "What a lovely day we have". what words did the speaker stress?',
        'The speaker stressed: ["lovely", "we have"].',
    )
    assert verdict.parsed_ok
    assert verdict.words == ["lovely", "we", "have"]


def test_judge_word_list_empty_is_valid():
    backend = ScriptedChatBackend(['{"answer": []}'])
    verdict = judge_word_list(backend, "p", "o")
    assert verdict.parsed_ok and verdict.words == []


def test_judge_word_list_non_list_retries():
    backend = ScriptedChatBackend(['{"answer": "book"}', '{"answer": 2}', "no"])
    verdict = judge_word_list(backend, "p", "o")
    assert verdict.parsed_ok is False


def test_judge_open_scripted_scores():
    five = judge_open(
        ScriptedChatBackend(['{"answer": 5}']),
        "what is most likely the underlying intention of the speaker?",
        REFERENCE,
        "annoyed because the listener might have texted instead of calling",
    )
    assert five.parsed_ok and five.score == 5
    one = judge_open(
        ScriptedChatBackend(['{"answer": 1}']),
        "what is most likely the underlying intention of the speaker?",
        REFERENCE,
        'The speaker is stressing "yesterday" meaning the listener acted too late.',
    )
    assert one.parsed_ok and one.score == 1


def test_judge_open_range_check():
    backend = ScriptedChatBackend(['{"answer": 7}', '{"answer": 7}', '{"answer": 7}'])
    verdict = judge_open(backend, "q", REFERENCE, "output")
    assert verdict.parsed_ok is False


def test_judge_open_mock_scores_match_overlap():
    # echoing the reference meaning scores 5; an unrelated reply scores 1
    top = judge_open(MockJudgeBackend(), "q", REFERENCE, REFERENCE["intended_meaning"])
    assert top.parsed_ok and top.score == 5
    bottom = judge_open(MockJudgeBackend(), "q", REFERENCE, "entirely unrelated nonsense reply")
    assert bottom.parsed_ok and bottom.score == 1


def test_judge_verdicts_deterministic():
    a = judge_choice(MockJudgeBackend(), "p", "Answer: 2.")
    b = judge_choice(MockJudgeBackend(), "p", "Answer: 2.")
    assert a == b
