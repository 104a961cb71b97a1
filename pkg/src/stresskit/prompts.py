"""Prompt template loading and rendering.

Templates are plain text files shipped with the package; placeholders are
literal bracketed tokens (``[answer 1]``, ``[transcription]``, ...) or
brace fields for the generation prompts. Rendering is literal string
substitution so rendered prompts are byte-stable.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache
from importlib import resources
from typing import Dict

TEMPLATE_NAMES = (
    "ssr_eval_audio.txt",
    "open_ssr_eval.txt",
    "ssd_eval.txt",
    "ssr_eval_stress.txt",
    "ssr_eval_stress_transcript.txt",
    "asr_eval.txt",
    "train_end_to_end.prompt.txt",
    "train_end_to_end.answer.txt",
    "train_elaborated.prompt.txt",
    "train_elaborated.answer.txt",
    "train_cascade.prompt.txt",
    "train_cascade.answer.txt",
    "train_ssd.prompt.txt",
    "train_ssd.answer.txt",
    "judge_ssr.system.txt",
    "judge_ssr.user.txt",
    "judge_ssd.system.txt",
    "judge_ssd.user.txt",
    "judge_open.system.txt",
    "judge_open.user.txt",
    "gen_phase1.txt",
    "gen_phase2.txt",
)


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files("stresskit.templates").joinpath(name).read_text(encoding="utf-8")


def load_data(name: str) -> str:
    return resources.files("stresskit.templates").joinpath(name).read_text(encoding="utf-8")


def render(template: str, mapping: Dict[str, str]) -> str:
    out = template
    for key, value in mapping.items():
        out = out.replace(key, value)
    return out


def template_hashes() -> Dict[str, str]:
    out = {}
    for name in TEMPLATE_NAMES:
        data = load_template(name).encode("utf-8")
        out[name] = hashlib.sha256(data).hexdigest()
    return out
