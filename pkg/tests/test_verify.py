import dataclasses

import numpy as np
import pytest

from conftest import make_audio_sample
from stresskit.backends import MockStressDetector, MockTTSBackend, StressDetection
from stresskit.errors import DataError, PreconditionError
from stresskit.synth import mark_stress
from stresskit.verify import (
    FilterPolicy,
    VerificationCache,
    VerificationResult,
    apply_filter,
    verify_dataset,
    verify_sample,
)


class StubDetector:
    def __init__(self, transcription, stressed_words):
        self.out = StressDetection(transcription=transcription, stressed_words=stressed_words)
        self.backend_id = "stub"

    def detect(self, audio):
        return self.out


def _write_sample(tmp_path, text="I didn't take your book", stressed=(4,), sample_id="v0"):
    sample = make_audio_sample(
        text=text, stressed=stressed, sample_id=sample_id, audio_ref=f"audio/{sample_id}.wav"
    )
    blob = MockTTSBackend().render(mark_stress(sample.transcription, sample.stress), "v")
    path = tmp_path / sample.audio_ref
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(blob)
    return sample


def test_verify_sample_exact_match(tmp_path):
    sample = _write_sample(tmp_path)
    result = verify_sample(StubDetector("I didn't take your book", ["book"]), sample, tmp_path)
    assert result.stress_exact_match is True
    assert result.transcription_match_ratio == 1.0


def test_verify_sample_superset_prediction_fails(tmp_path):
    sample = _write_sample(tmp_path)
    result = verify_sample(
        StubDetector("I didn't take your book", ["book", "your"]), sample, tmp_path
    )
    assert result.stress_exact_match is False


def test_verify_sample_ratio_reflects_wer(tmp_path):
    sample = _write_sample(tmp_path, text="alpha bravo charlie delta", stressed=(0,))
    result = verify_sample(
        StubDetector("alpha bravo charlie echo", ["alpha"]), sample, tmp_path
    )
    assert result.transcription_match_ratio == pytest.approx(0.75)


def test_verify_sample_missing_audio(tmp_path):
    sample = make_audio_sample(audio_ref="audio/nowhere.wav")
    with pytest.raises(DataError):
        verify_sample(StubDetector("x", []), sample, tmp_path)


def test_mock_round_trip_verifies(tmp_path):
    sample = _write_sample(tmp_path)
    result = verify_sample(MockStressDetector(), sample, tmp_path)
    assert result.stress_exact_match is True
    assert result.transcription_match_ratio == 1.0


def _result(exact=True, ratio=1.0):
    return VerificationResult(
        predicted_transcription="t",
        predicted_stressed_words=frozenset(),
        transcription_match_ratio=ratio,
        stress_exact_match=exact,
    )


def test_apply_filter_partitions_and_flags():
    samples = [make_audio_sample(sample_id=f"s{i}") for i in range(3)]
    results = {
        "s0": _result(exact=True, ratio=1.0),
        "s1": _result(exact=False, ratio=1.0),
        "s2": _result(exact=True, ratio=0.75),
    }
    accepted, rejected = apply_filter(samples, results)
    assert [s.id for s in accepted] == ["s0"]
    assert [s.id for s in rejected] == ["s1", "s2"]
    assert all(s.verified == "accepted" for s in accepted)
    assert all(s.verified == "rejected" for s in rejected)
    assert all(s.verified == "unverified" for s in samples)


def test_apply_filter_ratio_threshold_conjunction():
    samples = [make_audio_sample(sample_id="s0")]
    results = {"s0": _result(exact=True, ratio=0.75)}
    accepted, rejected = apply_filter(samples, results, FilterPolicy(min_transcription_ratio=0.8))
    assert not accepted and len(rejected) == 1


def test_apply_filter_requires_results():
    samples = [make_audio_sample(sample_id="s0")]
    with pytest.raises(PreconditionError):
        apply_filter(samples, {})


def test_apply_filter_idempotent():
    samples = [make_audio_sample(sample_id=f"s{i}") for i in range(4)]
    results = {f"s{i}": _result(exact=i % 2 == 0, ratio=1.0) for i in range(4)}
    accepted, _ = apply_filter(samples, results)
    again, rejected = apply_filter(accepted, results)
    assert [s.id for s in again] == [s.id for s in accepted]
    assert not rejected


def test_filter_monotone_under_threshold_tightening():
    rng = np.random.default_rng(17)
    samples = [make_audio_sample(sample_id=f"s{i}") for i in range(60)]
    results = {
        s.id: _result(exact=bool(rng.integers(0, 2)), ratio=float(rng.random()))
        for s in samples
    }
    thresholds = sorted(rng.random(50))
    previous = None
    for t in thresholds:
        accepted, _ = apply_filter(samples, results, FilterPolicy(min_transcription_ratio=t))
        ids = {s.id for s in accepted}
        if previous is not None:
            assert ids.issubset(previous)
        previous = ids


def test_verification_cache_round_trip(tmp_path):
    cache = VerificationCache(tmp_path / "cache.jsonl")
    r = _result(exact=False, ratio=0.5)
    cache.put("hash1", "backend-a", r)
    reloaded = VerificationCache(tmp_path / "cache.jsonl")
    assert reloaded.get("hash1", "backend-a") == r
    assert reloaded.get("hash1", "backend-b") is None


def test_verify_dataset_uses_cache(tmp_path):
    sample = _write_sample(tmp_path)

    class CountingDetector(StubDetector):
        calls = 0

        def detect(self, audio):
            CountingDetector.calls += 1
            return super().detect(audio)

    detector = CountingDetector("I didn't take your book", ["book"])
    cache = VerificationCache(tmp_path / "cache.jsonl")
    first = verify_dataset(detector, [sample], tmp_path, cache=cache)
    second = verify_dataset(detector, [sample], tmp_path, cache=cache)
    assert CountingDetector.calls == 1
    assert first == second
