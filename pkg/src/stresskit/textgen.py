"""Two-phase agentic generation of text samples.

Phase 1 asks the chat backend for a sentence with two stress readings and
their meanings; phase 2 summarizes each meaning into a concise answer.
Replies must follow a strict line-keyed format (SENTENCE:, STRESS_1:,
MEANING_1:, STRESS_2:, MEANING_2: and ANSWER_1:, ANSWER_2:) and are
parsed strictly with a retry budget of 3.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .corpus import (
    DUPLICATE_PATTERN,
    EMPTY_DESCRIPTION,
    EMPTY_SUMMARY,
    EMPTY_TEXT,
    NO_STRESS,
    TOO_FEW_INTERPRETATIONS,
    Interpretation,
    SampleMetadata,
    StressPattern,
    TextSample,
    Transcription,
)
from .errors import ConfigurationError, GenerationParseError
from .prompts import load_data, load_template, render
from .textnorm import normalize_text, normalize_token

RETRY_BUDGET = 3
PHASE1_TEMPERATURE = 1.0
PHASE2_TEMPERATURE = 0.3
GEN_SYSTEM = "Follow the output format exactly. Do not add commentary."

STRESS_WORD_MISSING = "STRESS_WORD_MISSING"

# The spec surface calls this GenerationMetadata; it is the same triple the
# corpus stores on every sample.
GenerationMetadata = SampleMetadata


@dataclass
class Catalog:
    """Domain/topic pairs plus sentence types used to rotate generation."""

    pairs: List[Tuple[str, str]]
    sentence_types: List[str]

    @staticmethod
    def load_default() -> "Catalog":
        raw = json.loads(load_data("catalog.json"))
        pairs = [(d, t) for d, topics in raw["domains"].items() for t in topics]
        return Catalog(pairs=pairs, sentence_types=list(raw["sentence_types"]))

    @property
    def triples(self) -> List[Tuple[str, str, str]]:
        return [(d, t, st) for (d, t) in self.pairs for st in self.sentence_types]

    def domain_of(self, topic: str) -> Optional[str]:
        for d, t in self.pairs:
            if t == topic:
                return d
        return None


def next_metadata(cursor: int, seed: int, catalog: Optional[Catalog] = None) -> GenerationMetadata:
    """Deterministic (cursor, seed) -> metadata triple.

    Every (domain, topic, sentence_type) triple is visited once per cycle
    before any repetition; each cycle uses its own seeded permutation.
    """
    catalog = catalog or Catalog.load_default()
    triples = catalog.triples
    if not triples:
        raise ConfigurationError("metadata catalog is empty")
    n = len(triples)
    epoch, idx = divmod(cursor, n)
    digest = hashlib.sha256(f"metadata:{seed}:{epoch}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    order = rng.permutation(n)
    domain, topic, stype = triples[int(order[idx])]
    return GenerationMetadata(domain=domain, topic=topic, sentence_type=stype)


def validate_text_sample(sample: TextSample, require_summaries: bool = False) -> List[str]:
    """Violation codes for the generation-side invariants."""
    out: List[str] = []
    if not sample.transcription.words:
        out.append(EMPTY_TEXT)
    if len(sample.interpretations) < 2:
        out.append(TOO_FEW_INTERPRETATIONS)
    masks = [i.stress.mask for i in sample.interpretations]
    if len(set(masks)) != len(masks):
        out.append(DUPLICATE_PATTERN)
    for interp in sample.interpretations:
        out.extend(
            v for v in interp.stress.violations_for(sample.transcription) if v not in out
        )
        if not interp.description.strip() and EMPTY_DESCRIPTION not in out:
            out.append(EMPTY_DESCRIPTION)
        if require_summaries and not interp.summary.strip() and EMPTY_SUMMARY not in out:
            out.append(EMPTY_SUMMARY)
    if require_summaries:
        summaries = [normalize_text(i.summary) for i in sample.interpretations]
        if len(set(summaries)) != len(summaries) and "DUPLICATE_SUMMARY" not in out:
            out.append("DUPLICATE_SUMMARY")
    return out


_OCCURRENCE = re.compile(r"^(.*?)#(\d+)$")


def resolve_stress_words(transcription: Transcription, spec: str) -> StressPattern:
    """Map a comma-separated stressed-word spec onto token indices.

    Words match transcription tokens by normalized equality. A repeated
    word is disambiguated with a 1-based ``#n`` occurrence suffix;
    otherwise the first occurrence is taken.
    """
    tokens = [normalize_token(w) for w in transcription.words]
    indices: Set[int] = set()
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        occurrence = 1
        m = _OCCURRENCE.match(part)
        if m:
            part, occurrence = m.group(1), int(m.group(2))
        want = normalize_token(part)
        seen = 0
        hit = None
        for i, tok in enumerate(tokens):
            if tok == want:
                seen += 1
                if seen == occurrence:
                    hit = i
                    break
        if hit is None:
            raise GenerationParseError(f"stressed word {part!r} not found in sentence")
        indices.add(hit)
    if not indices:
        raise GenerationParseError("no stressed words given")
    return StressPattern.from_indices(indices, len(tokens))


def _parse_keyed_reply(reply: str, keys: Sequence[str]) -> Dict[str, str]:
    found: Dict[str, str] = {}
    for line in reply.splitlines():
        line = line.strip()
        for key in keys:
            prefix = key + ":"
            if line.startswith(prefix):
                found[key] = line[len(prefix):].strip()
    missing = [k for k in keys if k not in found or not found[k]]
    if missing:
        raise GenerationParseError(f"reply missing fields: {missing}")
    return found


def _clean_description(text: str) -> str:
    # trailing periods would double up in the elaborated-answer template
    return text.rstrip(". ").strip()


def generate_text_sample(
    chat_backend,
    metadata: GenerationMetadata,
    seed: int,
    sample_id: str = "t00000",
    temperature: float = PHASE1_TEMPERATURE,
    retries: int = RETRY_BUDGET,
) -> TextSample:
    """Phase 1: one sentence, two stress readings with meaning descriptions."""
    prompt = render(
        load_template("gen_phase1.txt"),
        {
            "{domain}": metadata.domain,
            "{topic}": metadata.topic,
            "{sentence_type}": metadata.sentence_type,
        },
    )
    last_error: Optional[Exception] = None
    for _ in range(retries):
        reply = chat_backend.complete(GEN_SYSTEM, prompt, temperature=temperature, seed=seed)
        try:
            fields = _parse_keyed_reply(
                reply, ["SENTENCE", "STRESS_1", "MEANING_1", "STRESS_2", "MEANING_2"]
            )
            transcription = Transcription.from_raw(fields["SENTENCE"])
            interps = tuple(
                Interpretation(
                    stress=resolve_stress_words(transcription, fields[f"STRESS_{i}"]),
                    description=_clean_description(fields[f"MEANING_{i}"]),
                )
                for i in (1, 2)
            )
            sample = TextSample(
                id=sample_id,
                transcription=transcription,
                interpretations=interps,
                metadata=metadata,
            )
            violations = validate_text_sample(sample)
            if violations:
                raise GenerationParseError(f"generated sample invalid: {violations}")
            return sample
        except GenerationParseError as exc:
            last_error = exc
    raise GenerationParseError(f"phase-1 generation failed after {retries} attempts: {last_error}")


def summarize_answers(
    chat_backend,
    sample: TextSample,
    seed: int = 0,
    temperature: float = PHASE2_TEMPERATURE,
    retries: int = RETRY_BUDGET,
) -> TextSample:
    """Phase 2: fill each interpretation's concise answer summary."""
    first, second = sample.interpretations[0], sample.interpretations[1]
    prompt = render(
        load_template("gen_phase2.txt"),
        {
            "{sentence}": sample.transcription.text,
            "{stress_1}": ", ".join(first.stress.stressed_words(sample.transcription)),
            "{description_1}": first.description,
            "{stress_2}": ", ".join(second.stress.stressed_words(sample.transcription)),
            "{description_2}": second.description,
        },
    )
    last_error: Optional[Exception] = None
    for _ in range(retries):
        reply = chat_backend.complete(GEN_SYSTEM, prompt, temperature=temperature, seed=seed)
        try:
            fields = _parse_keyed_reply(reply, ["ANSWER_1", "ANSWER_2"])
            if normalize_text(fields["ANSWER_1"]) == normalize_text(fields["ANSWER_2"]):
                raise GenerationParseError("summaries are identical after normalization")
            interps = tuple(
                dataclasses.replace(interp, summary=fields[f"ANSWER_{i + 1}"])
                for i, interp in enumerate(sample.interpretations)
            )
            return dataclasses.replace(sample, interpretations=interps)
        except GenerationParseError as exc:
            last_error = exc
    raise GenerationParseError(f"phase-2 summarization failed after {retries} attempts: {last_error}")


@dataclass
class GenerationStats:
    n_accepted: int = 0
    n_duplicates_discarded: int = 0
    n_parse_failures: int = 0


def generate_corpus(
    chat_backend,
    n_samples: int,
    seed: int,
    catalog: Optional[Catalog] = None,
    max_attempts_factor: int = 10,
    max_inflight: int = 1,
    temperature_phase1: float = PHASE1_TEMPERATURE,
    temperature_phase2: float = PHASE2_TEMPERATURE,
) -> Tuple[List[TextSample], GenerationStats]:
    """Generate n unique, fully summarized text samples.

    Advances the metadata cursor until enough samples pass validation and
    dedup (no two emitted samples share a normalized transcription).
    Phase-1 calls for a wave of cursors may run concurrently
    (``max_inflight``); dedup and id assignment happen sequentially in
    cursor order, so the output does not depend on call scheduling.
    """
    from .backends import bounded_map

    catalog = catalog or Catalog.load_default()
    stats = GenerationStats()
    seen: Set[str] = set()
    out: List[TextSample] = []
    cursor = 0
    limit = max(1, n_samples) * max_attempts_factor

    def phase1(c: int):
        metadata = next_metadata(c, seed, catalog)
        try:
            return generate_text_sample(
                chat_backend, metadata, seed, sample_id=f"cursor{c}",
                temperature=temperature_phase1,
            )
        except GenerationParseError as exc:
            return exc

    while len(out) < n_samples and cursor < limit:
        wave = list(range(cursor, min(cursor + max(1, max_inflight), limit)))
        cursor = wave[-1] + 1
        for result in bounded_map(phase1, wave, max_workers=max_inflight):
            if len(out) >= n_samples:
                break
            if isinstance(result, GenerationParseError):
                stats.n_parse_failures += 1
                continue
            key = result.transcription.normalized
            if key in seen:
                stats.n_duplicates_discarded += 1
                continue
            sample = dataclasses.replace(result, id=f"t{len(out):05d}")
            try:
                sample = summarize_answers(
                    chat_backend, sample, seed=seed, temperature=temperature_phase2
                )
            except GenerationParseError:
                stats.n_parse_failures += 1
                continue
            if validate_text_sample(sample, require_summaries=True):
                stats.n_parse_failures += 1
                continue
            seen.add(key)
            out.append(sample)
            stats.n_accepted += 1
    if len(out) < n_samples:
        raise GenerationParseError(
            f"could not generate {n_samples} unique samples in {limit} attempts "
            f"({stats.n_duplicates_discarded} duplicates, {stats.n_parse_failures} parse failures)"
        )
    return out, stats
