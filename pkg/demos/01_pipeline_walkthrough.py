#!/usr/bin/env python3
"""Walk the full synthesis pipeline with offline mocks.

Text generation -> stressed speech -> verification filter -> training
tasks, printing the dataset shape after every stage. Everything is
seeded, so re-running reproduces the same bytes.
"""

import json
import tempfile
from pathlib import Path

from stresskit import synth, taskgen, textgen, verify
from stresskit.backends import MockChatBackend, MockStressDetector, MockTTSBackend
from stresskit.config import DEFAULT_VOICES
from stresskit.corpus import compute_stats

out = Path(tempfile.mkdtemp(prefix="stresskit_demo_"))
print(f"working in {out}\n")

print("1. generate text samples (two stress readings each)")
texts, gen_stats = textgen.generate_corpus(MockChatBackend(), 8, seed=42)
sample = texts[0]
print(f"   {len(texts)} texts, e.g. {sample.transcription.text!r}")
for reading in sample.interpretations:
    words = reading.stress.stressed_words(sample.transcription)
    print(f"   stress {words} -> {reading.summary!r}")

print("\n2. render each reading twice with seeded voices")
audio = synth.expand_corpus(MockTTSBackend(), texts, 42, DEFAULT_VOICES, out)
stats = compute_stats(audio)
print(f"   {stats.n_samples} audio samples "
      f"({stats.n_female} female / {stats.n_male} male, "
      f"{stats.total_audio_seconds:.1f}s total)")

print("\n3. verify realized stress with a noisy detector (p_flip=0.15)")
detector = MockStressDetector(p_flip=0.15, seed=7)
results = verify.verify_dataset(detector, audio, out)
accepted, rejected = verify.apply_filter(audio, results)
print(f"   accepted {len(accepted)} / rejected {len(rejected)}")

print("\n4. materialize the four training tasks per sample")
tasks = taskgen.materialize_dataset(accepted)
by_kind = {}
for t in tasks:
    by_kind[t.kind] = by_kind.get(t.kind, 0) + 1
print(f"   {len(tasks)} instances: {json.dumps(by_kind)}")
print("\n   example stress-detection target:", tasks[0].expected_answer)
