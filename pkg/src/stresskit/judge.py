"""LM-as-a-judge prompt assembly and strict verdict parsing.

The judge must reply with a JSON object holding the single key "answer".
Parsing scans the reply for the first syntactically valid single-key
object anywhere in the text; multi-key objects are skipped. Parse
failures are retried with the same prompt up to the budget, then surface
as a verdict with ``parsed_ok=False`` rather than an exception.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .prompts import load_template, render

RETRY_BUDGET = 3
JUDGE_TEMPERATURE = 0.0


@dataclass
class JudgeVerdict:
    kind: str  # choice | word_list | score
    choice: Optional[int] = None
    words: Optional[List[str]] = None
    score: Optional[int] = None
    raw_reply: str = ""
    attempts: int = 0
    parsed_ok: bool = False

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "choice": self.choice,
            "words": self.words,
            "score": self.score,
            "raw_reply": self.raw_reply,
            "attempts": self.attempts,
            "parsed_ok": self.parsed_ok,
        }

    @staticmethod
    def from_dict(d: dict) -> "JudgeVerdict":
        return JudgeVerdict(**d)


def extract_answer_value(text: str):
    """First syntactically valid single-key {"answer": ...} object, or None.

    Objects with more than one key are rejected and scanning continues.
    """
    decoder = json.JSONDecoder()
    for m in re.finditer(r"\{", text):
        try:
            obj, _ = decoder.raw_decode(text, m.start())
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict) and len(obj) == 1 and "answer" in obj:
            return obj["answer"]
    return None


def strip_audio_placeholder(prompt: str) -> str:
    """Drop the leading audio marker when embedding a prompt for the judge."""
    for marker in ("[audio]\n\n", "[Audio]\n\n", "[audio]\n", "[Audio]\n"):
        if prompt.startswith(marker):
            return prompt[len(marker):]
    return prompt


def _run_judge(chat_backend, system: str, user: str, validate, kind: str,
               retries: int, temperature: float) -> JudgeVerdict:
    last_reply = ""
    for attempt in range(1, retries + 1):
        last_reply = chat_backend.complete(system, user, temperature=temperature, seed=0)
        value = extract_answer_value(last_reply)
        parsed = validate(value)
        if parsed is not None:
            verdict = JudgeVerdict(kind=kind, raw_reply=last_reply, attempts=attempt, parsed_ok=True)
            attr = {"choice": "choice", "word_list": "words", "score": "score"}[kind]
            setattr(verdict, attr, parsed)
            return verdict
    return JudgeVerdict(kind=kind, raw_reply=last_reply, attempts=retries, parsed_ok=False)


def judge_choice(chat_backend, input_prompt: str, model_output: str,
                 retries: int = RETRY_BUDGET, temperature: float = JUDGE_TEMPERATURE) -> JudgeVerdict:
    """Map a free-form reply onto option 1 or 2."""
    system = load_template("judge_ssr.system.txt")
    user = render(
        load_template("judge_ssr.user.txt"),
        {"[input prompt]": input_prompt, "[speech lm output]": model_output},
    )

    def validate(value):
        if isinstance(value, int) and not isinstance(value, bool) and value in (1, 2):
            return value
        return None

    return _run_judge(chat_backend, system, user, validate, "choice", retries, temperature)


def judge_word_list(chat_backend, input_prompt: str, model_output: str,
                    retries: int = RETRY_BUDGET, temperature: float = JUDGE_TEMPERATURE) -> JudgeVerdict:
    """Extract the list of stressed words the model claimed.

    Entries the judge left glued together ("we have") are split into
    separate words; casing and punctuation are preserved for downstream
    normalization.
    """
    system = load_template("judge_ssd.system.txt")
    user = render(
        load_template("judge_ssd.user.txt"),
        {"[input prompt]": input_prompt, "[speech lm output]": model_output},
    )

    def validate(value):
        if isinstance(value, list) and all(isinstance(w, str) for w in value):
            words: List[str] = []
            for w in value:
                words.extend(w.split())
            return words
        return None

    return _run_judge(chat_backend, system, user, validate, "word_list", retries, temperature)


def judge_open(chat_backend, question: str, reference: Dict, model_output: str,
               retries: int = RETRY_BUDGET, temperature: float = JUDGE_TEMPERATURE) -> JudgeVerdict:
    """Score a free-form answer 1-5 against the reference meaning."""
    system = load_template("judge_open.system.txt")
    user = render(
        load_template("judge_open.user.txt"),
        {
            "[input prompt]": question,
            "[gt transcription]": f'"{reference["transcription"]}"',
            "[gt stressed words]": json.dumps(list(reference["stressed_words"])),
            "[gt intended meaning]": reference["intended_meaning"],
            "[audio llm output]": model_output,
        },
    )

    def validate(value):
        if isinstance(value, int) and not isinstance(value, bool) and 1 <= value <= 5:
            return value
        return None

    return _run_judge(chat_backend, system, user, validate, "score", retries, temperature)
