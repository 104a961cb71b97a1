"""Stress verification: query a detection backend and filter mismatches.

A sample is accepted when the detector's stressed-word set exactly
matches the target set (after normalization) and the recovered
transcription is close enough (1 - WER of at least the policy threshold).
Results are cached on disk keyed by (audio hash, backend id) so re-runs
are cheap and deterministic.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .backends import bounded_map
from .corpus import AudioSample, atomic_write_text
from .errors import DataError, PreconditionError
from .evalkit import word_error_rate
from .textnorm import normalize_words, tokenize


@dataclass(frozen=True)
class VerificationResult:
    predicted_transcription: str
    predicted_stressed_words: frozenset
    transcription_match_ratio: float
    stress_exact_match: bool

    def as_dict(self) -> dict:
        return {
            "predicted_transcription": self.predicted_transcription,
            "predicted_stressed_words": sorted(self.predicted_stressed_words),
            "transcription_match_ratio": self.transcription_match_ratio,
            "stress_exact_match": self.stress_exact_match,
        }

    @staticmethod
    def from_dict(d: dict) -> "VerificationResult":
        return VerificationResult(
            predicted_transcription=d["predicted_transcription"],
            predicted_stressed_words=frozenset(d["predicted_stressed_words"]),
            transcription_match_ratio=float(d["transcription_match_ratio"]),
            stress_exact_match=bool(d["stress_exact_match"]),
        )


@dataclass(frozen=True)
class FilterPolicy:
    require_stress_exact: bool = True
    min_transcription_ratio: float = 0.8


def verify_sample(stress_backend, sample: AudioSample, audio_root) -> VerificationResult:
    """Run detection on one sample's audio and compare against the target."""
    path = Path(audio_root) / sample.audio_ref
    if not path.exists():
        raise DataError(f"audio file missing: {path}")
    audio = path.read_bytes()
    detection = stress_backend.detect(audio)
    predicted = frozenset(normalize_words(detection.stressed_words))
    gold = sample.stress.normalized_stressed_set(sample.transcription)
    wer = word_error_rate(sample.transcription.text, detection.transcription)
    ratio = min(1.0, max(0.0, 1.0 - wer))
    return VerificationResult(
        predicted_transcription=detection.transcription,
        predicted_stressed_words=predicted,
        transcription_match_ratio=ratio,
        stress_exact_match=(predicted == gold),
    )


class VerificationCache:
    """Append-only JSONL cache keyed by (audio sha256, backend id)."""

    def __init__(self, path):
        self.path = Path(path)
        self._entries: Dict[Tuple[str, str], VerificationResult] = {}
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    d = json.loads(line)
                    self._entries[(d["audio_sha256"], d["backend_id"])] = (
                        VerificationResult.from_dict(d["result"])
                    )

    def get(self, audio_sha256: str, backend_id: str) -> Optional[VerificationResult]:
        return self._entries.get((audio_sha256, backend_id))

    def put(self, audio_sha256: str, backend_id: str, result: VerificationResult) -> None:
        self._entries[(audio_sha256, backend_id)] = result
        lines = [
            json.dumps(
                {"audio_sha256": k[0], "backend_id": k[1], "result": r.as_dict()},
                sort_keys=True,
                ensure_ascii=False,
            )
            for k, r in sorted(self._entries.items())
        ]
        atomic_write_text(self.path, "".join(line + "\n" for line in lines))


def verify_dataset(
    stress_backend,
    samples: Sequence[AudioSample],
    audio_root,
    cache: Optional[VerificationCache] = None,
    max_workers: int = 1,
) -> Dict[str, VerificationResult]:
    """Verify every sample; returns id -> result."""
    backend_id = getattr(stress_backend, "backend_id", stress_backend.__class__.__name__)

    def one(sample: AudioSample) -> Tuple[str, VerificationResult]:
        if cache is not None:
            digest = hashlib.sha256((Path(audio_root) / sample.audio_ref).read_bytes()).hexdigest()
            hit = cache.get(digest, backend_id)
            if hit is not None:
                return sample.id, hit
            result = verify_sample(stress_backend, sample, audio_root)
            cache.put(digest, backend_id, result)
            return sample.id, result
        return sample.id, verify_sample(stress_backend, sample, audio_root)

    return dict(bounded_map(one, list(samples), max_workers=max_workers))


def apply_filter(
    samples: Sequence[AudioSample],
    results: Mapping[str, VerificationResult],
    policy: FilterPolicy = FilterPolicy(),
) -> Tuple[List[AudioSample], List[AudioSample]]:
    """Partition into (accepted, rejected) with the verified flag set.

    The input list is unmodified; accepted and rejected samples are new
    instances. Every sample must have a verification result.
    """
    missing = [s.id for s in samples if s.id not in results]
    if missing:
        raise PreconditionError(f"samples without verification results: {missing[:5]}")
    accepted: List[AudioSample] = []
    rejected: List[AudioSample] = []
    for s in samples:
        r = results[s.id]
        ok = r.transcription_match_ratio >= policy.min_transcription_ratio
        if policy.require_stress_exact:
            ok = ok and r.stress_exact_match
        if ok:
            accepted.append(dataclasses.replace(s, verified="accepted"))
        else:
            rejected.append(dataclasses.replace(s, verified="rejected"))
    return accepted, rejected
