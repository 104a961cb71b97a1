#!/usr/bin/env python3
"""Judged evaluation of two extreme mock models over a synthetic dataset.

An echo-gold model (always right) should score 1.0 everywhere; a
complement model (always wrong) should score 0.0.
"""

import tempfile
from pathlib import Path

from stresskit import evalkit, synth, textgen
from stresskit.backends import (
    ComplementSLM,
    EchoGoldSLM,
    MockChatBackend,
    MockJudgeBackend,
    MockTTSBackend,
)
from stresskit.config import DEFAULT_VOICES

root = Path(tempfile.mkdtemp(prefix="stresskit_eval_"))
texts, _ = textgen.generate_corpus(MockChatBackend(), 6, seed=3)
audio = synth.expand_corpus(MockTTSBackend(), texts, 3, DEFAULT_VOICES, root)
judge = MockJudgeBackend()

for label, model in [("echo-gold", EchoGoldSLM(audio, root)),
                     ("complement", ComplementSLM(audio, root))]:
    _, ssr = evalkit.run_evaluation(model, audio, "ssr", "audio_only", judge, root)
    _, ssd = evalkit.run_evaluation(model, audio, "ssd", "audio_only", judge, root)
    _, open_ssr = evalkit.run_evaluation(model, audio, "open_ssr", "audio_only", judge, root)
    print(f"{label:>11}: ssr_accuracy={ssr.ssr_accuracy:.2f}  "
          f"ssd_f1={ssd.ssd.f1:.2f}  open_ssr_mean={open_ssr.open_ssr_mean:.2f}")

print("\noracle-input variant (gold stress + transcription in the prompt):")
_, variant = evalkit.run_evaluation(
    EchoGoldSLM(audio, root), audio, "ssr",
    "audio_plus_stress_plus_transcription", judge, root,
)
print(f"   ssr_accuracy={variant.ssr_accuracy:.2f} over n={variant.n}")
