#!/usr/bin/env python3
"""Show the judge prompt assembly and the strict verdict parsing rules."""

from stresskit.backends import MockJudgeBackend, ScriptedChatBackend
from stresskit.judge import extract_answer_value, judge_choice, judge_word_list

print("verdict extraction scans for the first single-key object:")
for reply in [
    'Sure: {"answer": 2}',
    'prefix {"answer": 1, "why": "..."} then {"answer": 1}',
    "no structured output at all",
]:
    print(f"   {reply!r} -> {extract_answer_value(reply)!r}")

print("\na well-behaved judge maps free-form output onto an option:")
verdict = judge_choice(
    MockJudgeBackend(),
    "Out of the following answers, what did the speaker mean?\n\n1. Option one text\n\n2. Option two text",
    "Answer: 1. Option one text",
)
print(f"   choice={verdict.choice} parsed_ok={verdict.parsed_ok} attempts={verdict.attempts}")

print("\nglued words are split by the word-list judge:")
verdict = judge_word_list(
    MockJudgeBackend(),
    'The speaker said "What a lovely day we have". What words did the speaker stress?',
    'The speaker stressed: ["lovely", "we have"].',
)
print(f"   words={verdict.words}")

print("\nan uncooperative judge exhausts the retry budget without raising:")
verdict = judge_choice(ScriptedChatBackend(["maybe", "maybe", "maybe"]), "prompt", "output")
print(f"   parsed_ok={verdict.parsed_ok} attempts={verdict.attempts}")
