"""Canonical data model, manifest store, statistics and subset selection.

Manifests are line-delimited JSON, one record per line, written with a
canonical serialization (sorted keys, compact separators) so that a
write/read/write cycle is byte-identical. Audio lives next to the
manifest as 16 kHz mono 16-bit PCM WAV files referenced by relative path.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

from .errors import ConfigurationError, DataError
from .textnorm import canonical_text, normalize_text, normalize_token, tokenize

STRESS_TYPE_TAGS = ("contrastive", "emphatic", "new_information", "focus")
GENDERS = ("male", "female")
VERIFIED_STATES = ("unverified", "accepted", "rejected")

# Violation codes reported by the validators.
EMPTY_TEXT = "EMPTY_TEXT"
MASK_LENGTH_MISMATCH = "MASK_LENGTH_MISMATCH"
NO_STRESS = "NO_STRESS"
ANSWER_ARITY = "ANSWER_ARITY"
LABEL_INDEX_RANGE = "LABEL_INDEX_RANGE"
GENDER_INVALID = "GENDER_INVALID"
VERIFIED_INVALID = "VERIFIED_INVALID"
DURATION_INVALID = "DURATION_INVALID"
EMPTY_DESCRIPTION = "EMPTY_DESCRIPTION"
EMPTY_SUMMARY = "EMPTY_SUMMARY"
DUPLICATE_PATTERN = "DUPLICATE_PATTERN"
TOO_FEW_INTERPRETATIONS = "TOO_FEW_INTERPRETATIONS"
STRESS_TYPE_INVALID = "STRESS_TYPE_INVALID"


@dataclass(frozen=True)
class Transcription:
    """A sentence plus its whitespace tokenization."""

    text: str

    @staticmethod
    def from_raw(raw: str) -> "Transcription":
        return Transcription(text=canonical_text(raw))

    @property
    def words(self) -> Tuple[str, ...]:
        return tuple(tokenize(self.text))

    @property
    def normalized(self) -> str:
        return normalize_text(self.text)


@dataclass(frozen=True)
class StressPattern:
    """Binary mask over the owning transcription's words, 1 = stressed."""

    mask: Tuple[int, ...]

    @staticmethod
    def from_indices(indices: Iterable[int], n_words: int) -> "StressPattern":
        idx = set(indices)
        return StressPattern(tuple(1 if i in idx else 0 for i in range(n_words)))

    @property
    def stressed_indices(self) -> Tuple[int, ...]:
        return tuple(i for i, m in enumerate(self.mask) if m)

    def stressed_words(self, transcription: Transcription) -> Tuple[str, ...]:
        words = transcription.words
        return tuple(words[i] for i in self.stressed_indices)

    def normalized_stressed_set(self, transcription: Transcription) -> frozenset:
        return frozenset(
            n for n in (normalize_token(w) for w in self.stressed_words(transcription)) if n
        )

    def violations_for(self, transcription: Transcription) -> List[str]:
        out = []
        if len(self.mask) != len(transcription.words):
            out.append(MASK_LENGTH_MISMATCH)
        if not any(self.mask):
            out.append(NO_STRESS)
        return out


@dataclass(frozen=True)
class Interpretation:
    """One stress pattern plus its intended meaning.

    ``summary`` is empty until the answer-summarization phase fills it.
    """

    stress: StressPattern
    description: str
    summary: str = ""


@dataclass(frozen=True)
class SampleMetadata:
    domain: str = ""
    topic: str = ""
    sentence_type: str = ""

    def as_dict(self) -> dict:
        return {"domain": self.domain, "topic": self.topic, "sentence_type": self.sentence_type}


@dataclass(frozen=True)
class TextSample:
    """A transcription with at least two distinct stress interpretations."""

    id: str
    transcription: Transcription
    interpretations: Tuple[Interpretation, ...]
    metadata: SampleMetadata = SampleMetadata()
    stress_type_tag: Optional[str] = None


@dataclass(frozen=True)
class AudioSample:
    """One synthesized or recorded utterance bound to a single stress pattern."""

    id: str
    audio_ref: str
    transcription: Transcription
    stress: StressPattern
    description: str
    answers: Tuple[str, str]
    label_index: int
    voice_id: str
    gender: str
    duration_s: float
    verified: str = "unverified"
    metadata: SampleMetadata = SampleMetadata()
    stress_type_tag: Optional[str] = None

    @property
    def correct_answer(self) -> str:
        return self.answers[self.label_index]


@dataclass(frozen=True)
class DatasetStats:
    n_samples: int
    n_unique_interpretations: int
    n_unique_transcriptions: int
    n_transcriptions_with_ge2_interpretations: int
    n_female: int
    n_male: int
    total_audio_seconds: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def validate_audio_sample(sample: AudioSample) -> List[str]:
    """Check every enforceable invariant; return violation codes (empty = valid)."""
    out: List[str] = []
    if not sample.transcription.words:
        out.append(EMPTY_TEXT)
    out.extend(sample.stress.violations_for(sample.transcription))
    if len(sample.answers) != 2:
        out.append(ANSWER_ARITY)
    if sample.label_index not in (0, 1):
        out.append(LABEL_INDEX_RANGE)
    if sample.gender not in GENDERS:
        out.append(GENDER_INVALID)
    if sample.verified not in VERIFIED_STATES:
        out.append(VERIFIED_INVALID)
    if not (sample.duration_s >= 0.0):
        out.append(DURATION_INVALID)
    if not sample.description.strip():
        out.append(EMPTY_DESCRIPTION)
    if sample.stress_type_tag is not None and sample.stress_type_tag not in STRESS_TYPE_TAGS:
        out.append(STRESS_TYPE_INVALID)
    return out


def compute_stats(samples: Sequence[AudioSample]) -> DatasetStats:
    """Dataset-level counts; aborts on the first invalid sample."""
    for s in samples:
        violations = validate_audio_sample(s)
        if violations:
            raise DataError(f"invalid sample {s.id}: {violations[0]}")
    transcriptions = set()
    interpretations = set()
    masks_by_text: dict = {}
    n_female = 0
    n_male = 0
    total = 0.0
    for s in samples:
        key = s.transcription.normalized
        transcriptions.add(key)
        interpretations.add((key, s.stress.mask))
        masks_by_text.setdefault(key, set()).add(s.stress.mask)
        if s.gender == "female":
            n_female += 1
        else:
            n_male += 1
        total += s.duration_s
    ge2 = sum(1 for masks in masks_by_text.values() if len(masks) >= 2)
    return DatasetStats(
        n_samples=len(samples),
        n_unique_interpretations=len(interpretations),
        n_unique_transcriptions=len(transcriptions),
        n_transcriptions_with_ge2_interpretations=ge2,
        n_female=n_female,
        n_male=n_male,
        total_audio_seconds=total,
    )


def select_subset(samples: Sequence[AudioSample], predicate: str, **kwargs) -> List[AudioSample]:
    """Order-preserving subset selection; the input is never modified.

    Predicates: ``verified_only``, ``by_gender`` (gender=...), ``by_id_list``
    (ids=[...]; unknown ids are an error).
    """
    if predicate == "verified_only":
        return [s for s in samples if s.verified == "accepted"]
    if predicate == "by_gender":
        gender = kwargs.get("gender")
        if gender not in GENDERS:
            raise ConfigurationError(f"by_gender requires gender in {GENDERS}, got {gender!r}")
        return [s for s in samples if s.gender == gender]
    if predicate == "by_id_list":
        ids = kwargs.get("ids")
        if ids is None:
            raise ConfigurationError("by_id_list requires ids=[...]")
        wanted = set(ids)
        present = {s.id for s in samples}
        missing = sorted(wanted - present)
        if missing:
            raise ConfigurationError(f"unknown sample ids: {missing}")
        return [s for s in samples if s.id in wanted]
    raise ConfigurationError(f"unknown subset predicate: {predicate!r}")


# --- manifest serialization -------------------------------------------------

def _dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def audio_sample_to_record(sample: AudioSample) -> dict:
    return {
        "id": sample.id,
        "audio_ref": sample.audio_ref,
        "text": sample.transcription.text,
        "stress_mask": list(sample.stress.mask),
        "description": sample.description,
        "answers": list(sample.answers),
        "label_index": sample.label_index,
        "voice_id": sample.voice_id,
        "gender": sample.gender,
        "verified": sample.verified,
        "duration_s": sample.duration_s,
        "metadata": sample.metadata.as_dict(),
        "stress_type_tag": sample.stress_type_tag,
    }


def record_to_audio_sample(record: dict) -> AudioSample:
    meta = record.get("metadata") or {}
    return AudioSample(
        id=record["id"],
        audio_ref=record["audio_ref"],
        transcription=Transcription(record["text"]),
        stress=StressPattern(tuple(int(m) for m in record["stress_mask"])),
        description=record["description"],
        answers=(record["answers"][0], record["answers"][1]),
        label_index=int(record["label_index"]),
        voice_id=record["voice_id"],
        gender=record["gender"],
        verified=record.get("verified", "unverified"),
        duration_s=float(record["duration_s"]),
        metadata=SampleMetadata(
            domain=meta.get("domain", ""),
            topic=meta.get("topic", ""),
            sentence_type=meta.get("sentence_type", ""),
        ),
        stress_type_tag=record.get("stress_type_tag"),
    )


def text_sample_to_record(sample: TextSample) -> dict:
    return {
        "id": sample.id,
        "text": sample.transcription.text,
        "interpretations": [
            {
                "stress_mask": list(i.stress.mask),
                "description": i.description,
                "summary": i.summary,
            }
            for i in sample.interpretations
        ],
        "metadata": sample.metadata.as_dict(),
        "stress_type_tag": sample.stress_type_tag,
    }


def record_to_text_sample(record: dict) -> TextSample:
    meta = record.get("metadata") or {}
    return TextSample(
        id=record["id"],
        transcription=Transcription(record["text"]),
        interpretations=tuple(
            Interpretation(
                stress=StressPattern(tuple(int(m) for m in i["stress_mask"])),
                description=i["description"],
                summary=i.get("summary", ""),
            )
            for i in record["interpretations"]
        ),
        metadata=SampleMetadata(
            domain=meta.get("domain", ""),
            topic=meta.get("topic", ""),
            sentence_type=meta.get("sentence_type", ""),
        ),
        stress_type_tag=record.get("stress_type_tag"),
    )


def atomic_write_text(path: Path, content: str) -> None:
    """Write via a temp file in the same directory, then atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(content)
        os.replace(tmp, str(path))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: Path, content: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(content)
        os.replace(tmp, str(path))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(path, samples: Iterable[AudioSample]) -> None:
    lines = [_dumps(audio_sample_to_record(s)) for s in samples]
    atomic_write_text(Path(path), "".join(line + "\n" for line in lines))


def read_manifest(path) -> List[AudioSample]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(record_to_audio_sample(json.loads(line)))
    return out


def write_text_manifest(path, samples: Iterable[TextSample]) -> None:
    lines = [_dumps(text_sample_to_record(s)) for s in samples]
    atomic_write_text(Path(path), "".join(line + "\n" for line in lines))


def read_text_manifest(path) -> List[TextSample]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(record_to_text_sample(json.loads(line)))
    return out
