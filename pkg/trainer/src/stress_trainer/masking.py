"""Loss-mask accounting over expected answers.

``final_answer_only`` restricts the loss to the terminal
"answer_number. correct_answer" span: for elaborated and cascade answers
that is everything after the last "Therefore, the correct answer is: "
marker, for the other tasks the whole expected answer already is the
final answer. ``full_answer`` covers the entire expected answer.
"""

from __future__ import annotations

from typing import Callable, List

FINAL_ANSWER_MARKER = "Therefore, the correct answer is: "

Tokenizer = Callable[[str], List[str]]


def whitespace_tokenizer(text: str) -> List[str]:
    return text.split()


def final_answer_span(expected_answer: str) -> str:
    """The substring of the expected answer that carries the loss."""
    idx = expected_answer.rfind(FINAL_ANSWER_MARKER)
    if idx < 0:
        return expected_answer
    return expected_answer[idx + len(FINAL_ANSWER_MARKER):]


def masked_token_count(
    expected_answer: str,
    loss_mask_mode: str,
    tokenizer: Tokenizer = whitespace_tokenizer,
) -> int:
    """Number of target tokens that receive gradient under the mask mode."""
    if loss_mask_mode == "full_answer":
        return len(tokenizer(expected_answer))
    if loss_mask_mode == "final_answer_only":
        return len(tokenizer(final_answer_span(expected_answer)))
    raise ValueError(f"unknown loss mask mode {loss_mask_mode!r}")
