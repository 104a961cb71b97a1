"""Toolkit for synthesizing and evaluating stress-disambiguated speech datasets.

Pipeline: text generation -> stressed TTS -> stress verification ->
training-task materialization and staged-plan emission, plus the judged
evaluation harness (reasoning accuracy, open-ended scoring, stressed-word
P/R/F1, WER) and an annotation server. All model roles sit behind
pluggable backends with deterministic offline mocks.
"""

__version__ = "0.1.0"
