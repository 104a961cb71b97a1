"""Stressed-speech synthesis: asterisk marking and TTS expansion.

Stressed words are wrapped in enclosing asterisks before being sent to
the TTS backend; multiword stress wraps each word separately so the mask
stays recoverable token-by-token, and edge punctuation stays outside the
asterisks ("book." becomes "*book*.").
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .audio import ensure_corpus_format
from .corpus import (
    AudioSample,
    StressPattern,
    TextSample,
    Transcription,
    atomic_write_bytes,
)
from .errors import DataError, PreconditionError
from .textnorm import EDGE_PUNCT

_MARKED_TOKEN = re.compile(r"^([" + re.escape(EDGE_PUNCT) + r"]*)\*([^*]+)\*([" + re.escape(EDGE_PUNCT) + r"]*)$")


def mark_stress(transcription: Transcription, stress: StressPattern) -> str:
    """Wrap each stressed token as ``*token*``, punctuation kept outside."""
    words = transcription.words
    if len(stress.mask) != len(words):
        raise PreconditionError("stress mask does not fit transcription")
    if not any(stress.mask):
        raise PreconditionError("stress mask selects no words")
    if "*" in transcription.text:
        raise PreconditionError("input already contains asterisks")
    out = []
    for word, m in zip(words, stress.mask):
        if not m:
            out.append(word)
            continue
        core = word.strip(EDGE_PUNCT)
        if not core:
            out.append(f"*{word}*")
            continue
        start = word.index(core[0])
        lead, trail = word[:start], word[start + len(core):]
        out.append(f"{lead}*{core}*{trail}")
    return " ".join(out)


def unmark_stress(marked: str) -> Tuple[Transcription, StressPattern]:
    """Exact inverse of :func:`mark_stress` on its own output."""
    if marked.count("*") % 2 != 0:
        raise DataError("unbalanced asterisks in marked text")
    words = []
    mask = []
    for token in marked.split():
        m = _MARKED_TOKEN.match(token)
        if m:
            words.append(m.group(1) + m.group(2) + m.group(3))
            mask.append(1)
        else:
            if "*" in token:
                raise DataError(f"malformed stress marking in token {token!r}")
            words.append(token)
            mask.append(0)
    return Transcription(" ".join(words)), StressPattern(tuple(mask))


def _seed_for(seed: int, tag: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{tag}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def pick_voice(
    voices: Sequence[Tuple[str, str]], rng: np.random.Generator
) -> Tuple[str, str]:
    """Seeded-uniform gender, then a uniform voice of that gender."""
    males = [v for v, g in voices if g == "male"]
    females = [v for v, g in voices if g == "female"]
    if not males or not females:
        raise PreconditionError("voice catalog needs at least one male and one female voice")
    gender = "female" if rng.integers(0, 2) == 1 else "male"
    pool = females if gender == "female" else males
    return pool[int(rng.integers(0, len(pool)))], gender


def expand_to_audio(
    tts_backend,
    sample: TextSample,
    seed: int,
    voices: Sequence[Tuple[str, str]],
    out_dir,
    renders_per_interpretation: int = 2,
    audio_subdir: str = "audio",
) -> List[AudioSample]:
    """Render every interpretation into stressed speech.

    Two renders per interpretation (so four audio samples for a
    two-interpretation text), each with a seeded voice draw and a seeded
    answer-order shuffle recorded in ``label_index``.
    """
    out_dir = Path(out_dir)
    results: List[AudioSample] = []
    rng = _seed_for(seed, sample.id)
    n = len(sample.interpretations)
    for i, interp in enumerate(sample.interpretations):
        marked = mark_stress(sample.transcription, interp.stress)
        for r in range(renders_per_interpretation):
            voice_id, gender = pick_voice(voices, rng)
            blob = tts_backend.render(marked, voice_id)
            blob, duration = ensure_corpus_format(blob)
            if duration <= 0.0:
                raise DataError(f"zero-length audio for {sample.id}")
            # pair the correct summary with one sibling's, in seeded order
            others = [k for k in range(n) if k != i]
            other = others[0] if len(others) == 1 else others[int(rng.integers(0, len(others)))]
            label_index = int(rng.integers(0, 2))
            own = interp.summary
            sibling = sample.interpretations[other].summary
            answers = (own, sibling) if label_index == 0 else (sibling, own)
            audio_ref = f"{audio_subdir}/{sample.id}-i{i}-r{r}.wav"
            atomic_write_bytes(out_dir / audio_ref, blob)
            results.append(
                AudioSample(
                    id=f"{sample.id}-i{i}-r{r}",
                    audio_ref=audio_ref,
                    transcription=sample.transcription,
                    stress=interp.stress,
                    description=interp.description,
                    answers=answers,
                    label_index=label_index,
                    voice_id=voice_id,
                    gender=gender,
                    duration_s=duration,
                    metadata=sample.metadata,
                    stress_type_tag=sample.stress_type_tag,
                )
            )
    return results


def expand_corpus(
    tts_backend,
    samples: Sequence[TextSample],
    seed: int,
    voices: Sequence[Tuple[str, str]],
    out_dir,
) -> List[AudioSample]:
    out: List[AudioSample] = []
    for sample in samples:
        out.extend(expand_to_audio(tts_backend, sample, seed, voices, out_dir))
    return out
