"""Word tokenization and normalization rules.

Single source of truth: every comparison of transcriptions or stressed
words anywhere in the toolkit goes through these functions, so that the
corpus, the verifier, the judge post-processing and the metrics all agree
on what counts as "the same word".
"""

from __future__ import annotations

from typing import Iterable, List

# Edge punctuation stripped before comparisons. Internal punctuation
# (apostrophes in contractions, hyphens) is part of the word.
EDGE_PUNCT = ".,!?;:'\""


def tokenize(text: str) -> List[str]:
    """Split into whitespace-delimited tokens, punctuation attached."""
    return text.split()


def canonical_text(text: str) -> str:
    """Collapse runs of whitespace so tokens re-join to the text exactly."""
    return " ".join(text.split())


def normalize_token(token: str) -> str:
    """Lowercase and strip edge punctuation from one token."""
    return token.strip(EDGE_PUNCT).lower()


def normalize_words(words: Iterable[str]) -> List[str]:
    """Normalize each word, dropping any that are punctuation-only."""
    out = []
    for w in words:
        n = normalize_token(w)
        if n:
            out.append(n)
    return out


def normalize_text(text: str) -> str:
    """Normalized form of a whole transcription, used as a uniqueness key."""
    return " ".join(normalize_words(tokenize(text)))


def display_word(token: str) -> str:
    """Strip edge punctuation but keep the original casing (for prompts)."""
    return token.strip(EDGE_PUNCT)
