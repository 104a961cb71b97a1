"""Pluggable backends for the four external model roles.

Roles: chat (generation + judging), TTS, stress detection, and the
speech-aware LM under test. Every role has a fully deterministic offline
mock so the whole pipeline runs end-to-end without network access, plus a
JSON-over-HTTP adapter with retries for real deployments.

Mock audio layout: each word is a fixed 0.20 s tone segment separated by
0.05 s of silence; stressed words are rendered at amplitude 0.9 and
unstressed at 0.3, and the voice id selects the tone frequency. The word
list rides along in a sidecar RIFF chunk so the mock detector recovers
the transcription without ASR.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .audio import TARGET_RATE, read_wav_bytes, write_wav_bytes
from .corpus import AudioSample
from .errors import DataError, TransportError
from .synth import unmark_stress
from .textnorm import display_word, normalize_words

WORD_S = 0.20
GAP_S = 0.05
STRESSED_AMP = 0.9
UNSTRESSED_AMP = 0.3
# classification boundary, relative to the loudest segment (midpoint of
# the 0.3/0.9 design ratio); relative so peak normalization is harmless
REL_RMS_THRESHOLD = (UNSTRESSED_AMP / STRESSED_AMP + 1.0) / 2.0

T = TypeVar("T")
U = TypeVar("U")


@dataclass
class StressDetection:
    transcription: str
    stressed_words: List[str]

    def as_dict(self) -> dict:
        return {"transcription": self.transcription, "stressed_words": self.stressed_words}


def bounded_map(fn: Callable[[T], U], items: Sequence[T], max_workers: int = 1) -> List[U]:
    """Order-preserving map with a bounded number of in-flight calls."""
    if max_workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))


def _stable_rng(*parts) -> np.random.Generator:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _retrying(fn: Callable[[], T], max_retries: int = 3, base_delay: float = 0.5) -> T:
    last: Optional[Exception] = None
    for attempt in range(max_retries):
        try:
            return fn()
        except Exception as exc:
            last = exc
            if attempt < max_retries - 1:
                time.sleep(base_delay * (2**attempt))
    raise TransportError(f"backend call failed after {max_retries} attempts: {last}")


# --- mock TTS and stress detection ------------------------------------------

class MockTTSBackend:
    """Deterministic tone synthesizer over the asterisk-marked grammar."""

    def render(self, marked_text: str, voice_id: str) -> bytes:
        transcription, stress = unmark_stress(marked_text)
        words = transcription.words
        if not words:
            raise DataError("cannot render empty text")
        freq = 180.0 + (int(hashlib.sha256(voice_id.encode()).hexdigest(), 16) % 10) * 25.0
        word_n = int(WORD_S * TARGET_RATE)
        gap_n = int(GAP_S * TARGET_RATE)
        t = np.arange(word_n) / TARGET_RATE
        tone = np.sin(2 * np.pi * freq * t)
        pieces = []
        for i, m in enumerate(stress.mask):
            amp = STRESSED_AMP if m else UNSTRESSED_AMP
            pieces.append(amp * tone)
            if i < len(words) - 1:
                pieces.append(np.zeros(gap_n))
        samples = np.concatenate(pieces)
        pcm = np.clip(np.round(samples * 32767.0), -32768, 32767).astype(np.int16)
        return write_wav_bytes(pcm, TARGET_RATE, sidecar_words=list(words))


class MockStressDetector:
    """Classifies the mock tone grid by segment RMS; optional label noise.

    With ``p_flip`` > 0, each word's stressed/unstressed classification is
    flipped independently with that probability, seeded by (seed, audio
    bytes) so results do not depend on call order.
    """

    def __init__(self, p_flip: float = 0.0, seed: int = 0):
        self.p_flip = p_flip
        self.seed = seed
        self.backend_id = f"mock-stress-p{p_flip}-s{seed}"

    def detect(self, audio: bytes) -> StressDetection:
        rate, samples, words = read_wav_bytes(audio)
        if words is None:
            raise DataError("mock detector needs the sidecar word list")
        if rate != TARGET_RATE:
            raise DataError(f"expected {TARGET_RATE} Hz audio, got {rate}")
        n = len(words)
        word_n = int(WORD_S * TARGET_RATE)
        gap_n = int(GAP_S * TARGET_RATE)
        expected = n * word_n + (n - 1) * gap_n
        if samples.size != expected:
            raise DataError(
                f"audio is off the mock segment grid: {samples.size} samples, expected {expected}"
            )
        rms = []
        for i in range(n):
            start = i * (word_n + gap_n)
            seg = samples[start : start + word_n]
            rms.append(float(np.sqrt(np.mean(seg**2))))
        top = max(rms)
        stressed = [r > top * REL_RMS_THRESHOLD for r in rms]
        if self.p_flip > 0.0:
            rng = _stable_rng(self.seed, hashlib.sha256(audio).hexdigest())
            flips = rng.random(n) < self.p_flip
            stressed = [s != bool(f) for s, f in zip(stressed, flips)]
        return StressDetection(
            transcription=" ".join(words),
            stressed_words=[w for w, s in zip(words, stressed) if s],
        )


# --- mock chat backends ------------------------------------------------------

_PHASE1_FIELD = re.compile(r"^(Domain|Topic|Sentence type):\s*(.+)$", re.MULTILINE)
_PHASE2_MEANING = re.compile(r"^Reading ([12]) meaning:\s*(.+)$", re.MULTILINE)


class MockChatBackend:
    """Procedural generator standing in for the text-generation agent.

    Pure function of the prompt text: phase-1 prompts get a sentence built
    from the embedded domain/topic/sentence-type triple with two stress
    readings; phase-2 prompts get each description's first 8 words as the
    concise answer.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def complete(self, system: str, user: str, temperature: float = 1.0, seed: int = 0) -> str:
        if "SENTENCE:" in user:
            return self._phase1(user)
        if "ANSWER_1:" in user:
            return self._phase2(user)
        return "UNSUPPORTED PROMPT"

    def _phase1(self, user: str) -> str:
        fields = {k: v.strip() for k, v in _PHASE1_FIELD.findall(user)}
        topic = fields.get("Topic", "the weather").lower()
        stype = fields.get("Sentence type", "statement").lower()
        sentence = f"Maybe we should explore {topic} through a {stype}"
        stype_word = sentence.split()[-1]
        return (
            f"SENTENCE: {sentence}\n"
            f"STRESS_1: we\n"
            f"MEANING_1: It is specifically us, not anyone else, who should explore {topic}\n"
            f"STRESS_2: {stype_word}\n"
            f"MEANING_2: The speaker insists on a {stype} rather than any other way of engaging with {topic}\n"
        )

    def _phase2(self, user: str) -> str:
        meanings = {int(k): v.strip() for k, v in _PHASE2_MEANING.findall(user)}
        def head(text: str) -> str:
            return " ".join(text.split()[:8])
        return f"ANSWER_1: {head(meanings.get(1, ''))}\nANSWER_2: {head(meanings.get(2, ''))}\n"


class ScriptedChatBackend:
    """Plays back canned replies in order; a plain test double."""

    def __init__(self, replies: Sequence[str]):
        self.replies = list(replies)
        self.calls: List[Tuple[str, str]] = []

    def complete(self, system: str, user: str, temperature: float = 1.0, seed: int = 0) -> str:
        self.calls.append((system, user))
        if not self.replies:
            raise TransportError("scripted backend ran out of replies")
        return self.replies.pop(0)


_OUTPUT_SECTION = re.compile(
    r"OUTPUT FROM Speech-LM:\s*(.*?)\s*YOUR EXPECTED JSON OUTPUT:", re.DOTALL
)
_INPUT_SECTION = re.compile(
    r"INPUT TO Speech-LM:\s*(.*?)\s*OUTPUT FROM Speech-LM:", re.DOTALL
)
_MEANING_SECTION = re.compile(
    r"Ground truth intended meaning:\s*(.*?)\s*OUTPUT FROM Speech-LM:", re.DOTALL
)
_OPTION_LINES = (re.compile(r"^\s*1\.\s*(.+)$", re.MULTILINE),
                 re.compile(r"^\s*2\.\s*(.+)$", re.MULTILINE))
_CHOICE_PATTERNS = (
    re.compile(r"^\s*([12])\.", re.MULTILINE),
    re.compile(r"[Aa]nswer\s*(?:is|:)\s*\(?([12])\)?"),
    re.compile(r"[Oo]ption\s+([12])"),
    re.compile(r"\b([12])\b"),
)


def _collapse(text: str) -> str:
    return " ".join(text.split()).lower()


class MockJudgeBackend:
    """Deterministic stand-in for the LM judge.

    Reads the embedded model output out of the judge prompt and emits the
    single-key JSON object the real judge is instructed to produce.
    """

    def complete(self, system: str, user: str, temperature: float = 0.0, seed: int = 0) -> str:
        section = _OUTPUT_SECTION.search(user)
        output = section.group(1) if section else user
        if "either 1 or 2" in system:
            # align output text against the options shown in the prompt first
            prompt_section = _INPUT_SECTION.search(user)
            if prompt_section:
                hits = []
                for n, pat in enumerate(_OPTION_LINES, start=1):
                    m = pat.search(prompt_section.group(1))
                    if m and _collapse(m.group(1)) in _collapse(output):
                        hits.append(n)
                if len(hits) == 1:
                    return json.dumps({"answer": hits[0]})
            for pat in _CHOICE_PATTERNS:
                m = pat.search(output)
                if m:
                    return json.dumps({"answer": int(m.group(1))})
            return "unable to determine the answer"
        if "a list of words" in system or "list of strings" in system:
            m = re.search(r"\[(.*?)\]", output, re.DOTALL)
            words: List[str] = []
            if m:
                for item in m.group(1).split(","):
                    item = item.strip().strip("'\"")
                    words.extend(item.split())
            return json.dumps({"answer": words})
        if "score from 1 to 5" in system:
            ref = _MEANING_SECTION.search(user)
            meaning = ref.group(1) if ref else ""
            ref_tokens = set(normalize_words(meaning.split()))
            out_tokens = set(normalize_words(output.split()))
            overlap = len(ref_tokens & out_tokens) / len(ref_tokens) if ref_tokens else 0.0
            score = max(1, min(5, 1 + round(overlap * 4)))
            return json.dumps({"answer": score})
        return "unsupported judge prompt"


# --- mock speech-aware LMs ----------------------------------------------------

def _index_by_audio(samples: Sequence[AudioSample], audio_root) -> Dict[str, AudioSample]:
    root = Path(audio_root)
    index = {}
    for s in samples:
        blob = (root / s.audio_ref).read_bytes()
        index[hashlib.sha256(blob).hexdigest()] = s
    return index


def _bracketed(words: Sequence[str]) -> str:
    return "[" + ", ".join(f'"{w}"' for w in words) + "]"


class _SampleAwareSLM:
    """Base for mocks that look the sample up by audio content hash."""

    def __init__(self, samples: Sequence[AudioSample], audio_root):
        self.index = _index_by_audio(samples, audio_root)

    def _sample(self, audio: bytes) -> AudioSample:
        key = hashlib.sha256(audio).hexdigest()
        if key not in self.index:
            raise DataError("mock SLM does not know this audio")
        return self.index[key]


class EchoGoldSLM(_SampleAwareSLM):
    """Always answers with the gold target for the detected task.

    Choice questions get the correct answer text (not an option number):
    renders of the same interpretation can be byte-identical under the
    mock TTS while presenting their options in different orders, so only
    the text is stable across an audio-hash collision.
    """

    def reply(self, audio: bytes, prompt: str) -> str:
        s = self._sample(audio)
        if "what words did the speaker stress" in prompt:
            return _bracketed([display_word(w) for w in s.stress.stressed_words(s.transcription)])
        if "Transcribe" in prompt:
            return s.transcription.text
        if "1." in prompt and "2." in prompt:
            return s.correct_answer
        return s.description


class ComplementSLM(_SampleAwareSLM):
    """Always answers with the wrong option / the complement word set."""

    def reply(self, audio: bytes, prompt: str) -> str:
        s = self._sample(audio)
        if "what words did the speaker stress" in prompt:
            unstressed = [
                display_word(w)
                for w, m in zip(s.transcription.words, s.stress.mask)
                if not m
            ]
            return _bracketed(unstressed)
        if "Transcribe" in prompt:
            return " ".join(reversed(s.transcription.words))
        return s.answers[1 - s.label_index]


class FixedOptionSLM:
    """Answers the same option number regardless of input."""

    def __init__(self, option: int = 1):
        self.option = option

    def reply(self, audio: bytes, prompt: str) -> str:
        return f"Answer: {self.option}."


# --- wire adapters ------------------------------------------------------------

class HTTPChatBackend:
    """Chat-completions-style JSON over HTTP."""

    def __init__(self, endpoint: str, model: str, api_key: str = "", timeout_s: float = 30.0,
                 max_retries: int = 3):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.max_retries = max_retries

    def complete(self, system: str, user: str, temperature: float = 1.0, seed: int = 0) -> str:
        import httpx

        def call():
            headers = {"Content-Type": "application/json"}
            if self.api_key:
                headers["Authorization"] = f"Bearer {self.api_key}"
            resp = httpx.post(
                self.endpoint,
                json={
                    "model": self.model,
                    "messages": [
                        {"role": "system", "content": system},
                        {"role": "user", "content": user},
                    ],
                    "temperature": temperature,
                    "seed": seed,
                },
                headers=headers,
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]

        return _retrying(call, self.max_retries)


class HTTPTTSBackend:
    def __init__(self, endpoint: str, model: str = "", api_key: str = "", timeout_s: float = 60.0,
                 max_retries: int = 3):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.max_retries = max_retries

    def render(self, marked_text: str, voice_id: str) -> bytes:
        import httpx

        def call():
            headers = {}
            if self.api_key:
                headers["Authorization"] = f"Bearer {self.api_key}"
            resp = httpx.post(
                self.endpoint,
                json={"model": self.model, "input": marked_text, "voice": voice_id},
                headers=headers,
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
            return resp.content

        return _retrying(call, self.max_retries)


class HTTPStressBackend:
    """POST raw audio bytes, receive {transcription, stressed_words}."""

    def __init__(self, endpoint: str, api_key: str = "", timeout_s: float = 60.0,
                 max_retries: int = 3):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.backend_id = f"http-stress:{endpoint}"

    def detect(self, audio: bytes) -> StressDetection:
        import httpx

        def call():
            headers = {"Content-Type": "application/octet-stream"}
            if self.api_key:
                headers["Authorization"] = f"Bearer {self.api_key}"
            resp = httpx.post(self.endpoint, content=audio, headers=headers, timeout=self.timeout_s)
            resp.raise_for_status()
            body = resp.json()
            return StressDetection(
                transcription=body["transcription"],
                stressed_words=list(body["stressed_words"]),
            )

        return _retrying(call, self.max_retries)


class CommandStressBackend:
    """Spawn a local command, write audio to stdin, read the same JSON object."""

    def __init__(self, argv: Sequence[str], timeout_s: float = 120.0):
        self.argv = list(argv)
        self.timeout_s = timeout_s
        self.backend_id = f"cmd-stress:{' '.join(self.argv)}"

    def detect(self, audio: bytes) -> StressDetection:
        try:
            proc = subprocess.run(
                self.argv, input=audio, capture_output=True, timeout=self.timeout_s, check=True
            )
        except (subprocess.SubprocessError, OSError) as exc:
            raise TransportError(f"stress command failed: {exc}") from exc
        body = json.loads(proc.stdout.decode("utf-8"))
        return StressDetection(
            transcription=body["transcription"], stressed_words=list(body["stressed_words"])
        )


class HTTPSLMBackend:
    """Audio + prompt to a speech-aware LM endpoint (audio as base64)."""

    def __init__(self, endpoint: str, model: str = "", api_key: str = "", timeout_s: float = 120.0,
                 max_retries: int = 3):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.max_retries = max_retries

    def reply(self, audio: bytes, prompt: str) -> str:
        import httpx

        def call():
            headers = {}
            if self.api_key:
                headers["Authorization"] = f"Bearer {self.api_key}"
            resp = httpx.post(
                self.endpoint,
                json={
                    "model": self.model,
                    "prompt": prompt,
                    "audio_b64": base64.b64encode(audio).decode("ascii"),
                },
                headers=headers,
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
            return resp.json()["text"]

        return _retrying(call, self.max_retries)
