"""All evaluation metrics plus the end-to-end evaluation driver.

Metrics: choice accuracy for stress reasoning, mean 1-5 score for the
open-ended variant, micro/macro precision-recall-F1 over stressed-word
sets, word error rate, majority vote, and Pearson/Spearman correlation.
Word comparisons use the corpus normalization rules throughout.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .backends import bounded_map
from .corpus import AudioSample, atomic_write_text
from .errors import (
    ConfigurationError,
    DataError,
    PreconditionError,
    TransportError,
    UndefinedMetricError,
)
from .judge import (
    JudgeVerdict,
    judge_choice,
    judge_open,
    judge_word_list,
    strip_audio_placeholder,
)
from .prompts import load_template, render, template_hashes
from .textnorm import display_word, normalize_words, tokenize

TASKS = ("ssr", "open_ssr", "ssd", "asr")
PROMPT_VARIANTS = ("audio_only", "audio_plus_stress", "audio_plus_stress_plus_transcription")


# --- word error rate ------------------------------------------------------------

def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> int:
    """Word-level Levenshtein distance, unit costs."""
    n, m = len(ref), len(hyp)
    costs = np.zeros((n + 1, m + 1), dtype=np.int64)
    costs[:, 0] = np.arange(n + 1)
    costs[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = 0 if ref[i - 1] == hyp[j - 1] else 1
            costs[i, j] = min(
                costs[i - 1, j] + 1,
                costs[i, j - 1] + 1,
                costs[i - 1, j - 1] + sub,
            )
    return int(costs[n, m])


def word_error_rate(reference: Union[str, Sequence[str]], hypothesis: Union[str, Sequence[str]]) -> float:
    """Edit distance over normalized word sequences divided by reference length."""
    ref = normalize_words(tokenize(reference) if isinstance(reference, str) else reference)
    hyp = normalize_words(tokenize(hypothesis) if isinstance(hypothesis, str) else hypothesis)
    if not ref:
        raise PreconditionError("word_error_rate needs a non-empty reference")
    return edit_distance(ref, hyp) / len(ref)


# --- stressed-word precision/recall/F1 -------------------------------------------

@dataclass(frozen=True)
class SSDScores:
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def _prf(tp: float, fp: float, fn: float) -> SSDScores:
    p = tp / (tp + fp) if tp + fp > 0 else 0.0
    r = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return SSDScores(precision=p, recall=r, f1=f1)


def evaluate_ssd(
    pairs: Sequence[Tuple[Sequence[str], Sequence[str]]],
    averaging: str = "micro",
) -> SSDScores:
    """Set-based P/R/F1 over (predicted, gold) stressed-word pairs.

    Duplicates collapse under set semantics; both sides are normalized
    identically. Micro pools TP/FP/FN over the dataset; macro averages
    per-record scores.
    """
    if averaging not in ("micro", "macro"):
        raise ConfigurationError(f"unknown averaging {averaging!r}")
    if not pairs:
        raise UndefinedMetricError("no records to score")
    per_record: List[SSDScores] = []
    tp_total = fp_total = fn_total = 0
    for pred, gold in pairs:
        pred_set = set(normalize_words(pred))
        gold_set = set(normalize_words(gold))
        if not gold_set:
            raise DataError("record with empty gold stressed-word set")
        tp = len(pred_set & gold_set)
        fp = len(pred_set - gold_set)
        fn = len(gold_set - pred_set)
        tp_total += tp
        fp_total += fp
        fn_total += fn
        per_record.append(_prf(tp, fp, fn))
    if averaging == "micro":
        return _prf(tp_total, fp_total, fn_total)
    n = len(per_record)
    return SSDScores(
        precision=sum(s.precision for s in per_record) / n,
        recall=sum(s.recall for s in per_record) / n,
        f1=sum(s.f1 for s in per_record) / n,
    )


# --- aggregation helpers ----------------------------------------------------------

def majority_vote(labels: Sequence):
    """Modal label over an odd number of votes."""
    if len(labels) % 2 == 0:
        raise ConfigurationError("majority_vote needs an odd number of labels")
    counts: Dict = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    return max(counts.items(), key=lambda kv: kv[1])[0]


def label_accuracy(predicted: Sequence[str], gold: Sequence[str]) -> float:
    """Exact-string classifier accuracy under corpus normalization."""
    if len(predicted) != len(gold) or not gold:
        raise PreconditionError("label_accuracy needs equal-length non-empty sequences")
    hits = sum(
        1 for p, g in zip(predicted, gold)
        if " ".join(normalize_words(tokenize(p))) == " ".join(normalize_words(tokenize(g)))
    )
    return hits / len(gold)


def _ranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their mean rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if len(x) != len(y) or len(x) < 3:
        raise PreconditionError("correlation needs two equal-length series of at least 3 points")
    xd = x - x.mean()
    yd = y - y.mean()
    denom = np.sqrt((xd**2).sum() * (yd**2).sum())
    if denom == 0.0:
        raise UndefinedMetricError("pearson r undefined for zero-variance input")
    return float((xd * yd).sum() / denom)


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if len(x) != len(y) or len(x) < 3:
        raise PreconditionError("correlation needs two equal-length series of at least 3 points")
    rx, ry = _ranks(x), _ranks(y)
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        raise UndefinedMetricError("spearman rho undefined for constant input")
    return pearson_r(rx, ry)


def correlation(xs: Sequence[float], ys: Sequence[float]) -> Dict[str, float]:
    return {"pearson_r": pearson_r(xs, ys), "spearman_rho": spearman_rho(xs, ys)}


# --- evaluation records and reports -------------------------------------------------

@dataclass
class EvalRecord:
    sample_id: str
    task: str
    prompt_variant: str
    model_reply: str
    verdict: Optional[JudgeVerdict]
    gold: object
    option_order: Tuple[int, int] = (0, 1)
    transport_failed: bool = False

    def as_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "task": self.task,
            "prompt_variant": self.prompt_variant,
            "model_reply": self.model_reply,
            "verdict": self.verdict.as_dict() if self.verdict else None,
            "gold": self.gold,
            "option_order": list(self.option_order),
            "transport_failed": self.transport_failed,
        }


@dataclass
class MetricsReport:
    n: int
    n_judge_failures: int = 0
    ssr_accuracy: Optional[float] = None
    open_ssr_mean: Optional[float] = None
    ssd: Optional[SSDScores] = None
    wer: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "n_judge_failures": self.n_judge_failures,
            "ssr_accuracy": self.ssr_accuracy,
            "open_ssr_mean": self.open_ssr_mean,
            "ssd": self.ssd.as_dict() if self.ssd else None,
            "wer": self.wer,
        }


def evaluate_ssr(records: Sequence[EvalRecord]) -> float:
    """Fraction of records whose judged choice lands on the gold answer.

    The gold is the stored label index; the judged option number is mapped
    through the record's presentation order before comparison. Records
    whose judge failed to parse count as wrong.
    """
    if not records:
        raise UndefinedMetricError("no records to score")
    hits = 0
    for rec in records:
        if rec.task != "ssr" or rec.verdict is None or rec.verdict.kind != "choice":
            raise PreconditionError(f"record {rec.sample_id} is not a judged ssr record")
        correct_option = rec.option_order.index(int(rec.gold)) + 1
        if rec.verdict.parsed_ok and rec.verdict.choice == correct_option:
            hits += 1
    return hits / len(records)


def open_ssr_mean(records: Sequence[EvalRecord]) -> float:
    """Mean judge score; unparseable verdicts score 1 (pessimistic)."""
    if not records:
        raise UndefinedMetricError("no records to score")
    total = 0
    for rec in records:
        if rec.verdict is None or rec.verdict.kind != "score":
            raise PreconditionError(f"record {rec.sample_id} is not a judged open-ssr record")
        total += rec.verdict.score if rec.verdict.parsed_ok else 1
    return total / len(records)


# --- evaluation driver ----------------------------------------------------------------

def render_eval_prompt(sample: AudioSample, task: str, prompt_variant: str) -> str:
    """Byte-exact prompt for one sample under the chosen task and variant."""
    words = [display_word(w) for w in sample.stress.stressed_words(sample.transcription)]
    mapping = {
        "[transcription]": sample.transcription.text,
        "[stressed words]": "[" + ", ".join(words) + "]",
        "[answer 1]": sample.answers[0],
        "[answer 2]": sample.answers[1],
    }
    if task == "ssr":
        template = {
            "audio_only": "ssr_eval_audio.txt",
            "audio_plus_stress": "ssr_eval_stress.txt",
            "audio_plus_stress_plus_transcription": "ssr_eval_stress_transcript.txt",
        }[prompt_variant]
        return render(load_template(template), mapping)
    if prompt_variant != "audio_only":
        raise ConfigurationError(f"prompt variant {prompt_variant!r} only applies to the ssr task")
    if task == "open_ssr":
        return load_template("open_ssr_eval.txt")
    if task == "ssd":
        return render(load_template("ssd_eval.txt"), mapping)
    if task == "asr":
        return load_template("asr_eval.txt")
    raise ConfigurationError(f"unknown task {task!r}")


def run_evaluation(
    slm_backend,
    dataset: Sequence[AudioSample],
    task: str,
    prompt_variant: str,
    judge_backend,
    audio_root,
    failure_policy: str = "count_wrong",
    max_workers: int = 1,
) -> Tuple[List[EvalRecord], MetricsReport]:
    """Evaluate one task over a dataset; returns per-sample records and the report."""
    if task not in TASKS:
        raise ConfigurationError(f"unknown task {task!r}")
    if prompt_variant not in PROMPT_VARIANTS:
        raise ConfigurationError(f"unknown prompt variant {prompt_variant!r}")
    if failure_policy not in ("count_wrong", "skip"):
        raise ConfigurationError(f"unknown failure policy {failure_policy!r}")
    if not dataset:
        raise UndefinedMetricError("empty dataset")
    root = Path(audio_root)

    def one(sample: AudioSample) -> EvalRecord:
        prompt = render_eval_prompt(sample, task, prompt_variant)
        audio = (root / sample.audio_ref).read_bytes()
        gold: object
        if task == "ssr":
            gold = sample.label_index
        elif task == "ssd":
            gold = [display_word(w) for w in sample.stress.stressed_words(sample.transcription)]
        elif task == "asr":
            gold = sample.transcription.text
        else:
            gold = {
                "transcription": sample.transcription.text,
                "stressed_words": [
                    display_word(w) for w in sample.stress.stressed_words(sample.transcription)
                ],
                "intended_meaning": sample.description,
            }
        try:
            reply = slm_backend.reply(audio, prompt)
        except TransportError:
            return EvalRecord(
                sample_id=sample.id, task=task, prompt_variant=prompt_variant,
                model_reply="", verdict=None, gold=gold, transport_failed=True,
            )
        judge_input = strip_audio_placeholder(prompt)
        if task == "ssr":
            verdict = judge_choice(judge_backend, judge_input, reply)
        elif task == "ssd":
            verdict = judge_word_list(judge_backend, judge_input, reply)
        elif task == "open_ssr":
            verdict = judge_open(judge_backend, judge_input, gold, reply)
        else:
            verdict = None
        return EvalRecord(
            sample_id=sample.id, task=task, prompt_variant=prompt_variant,
            model_reply=reply, verdict=verdict, gold=gold,
        )

    records = bounded_map(one, list(dataset), max_workers=max_workers)
    scored = [r for r in records if not r.transport_failed]
    if failure_policy == "count_wrong":
        # failed transports stay in n and can never score
        effective = records
    else:
        effective = scored

    report = MetricsReport(n=len(effective))
    judged = [r for r in effective if r.verdict is not None]
    report.n_judge_failures = sum(1 for r in judged if not r.verdict.parsed_ok)
    if task == "ssr":
        hits = 0
        for r in effective:
            if r.verdict is None:
                continue
            correct_option = r.option_order.index(int(r.gold)) + 1
            if r.verdict.parsed_ok and r.verdict.choice == correct_option:
                hits += 1
        report.ssr_accuracy = hits / len(effective)
    elif task == "open_ssr":
        total = sum(
            (r.verdict.score if r.verdict and r.verdict.parsed_ok else 1) for r in effective
        )
        report.open_ssr_mean = total / len(effective)
    elif task == "ssd":
        pairs = []
        for r in effective:
            pred = r.verdict.words if (r.verdict and r.verdict.parsed_ok) else []
            pairs.append((pred, list(r.gold)))
        report.ssd = evaluate_ssd(pairs, averaging="micro")
    else:
        dist = 0
        ref_len = 0
        for r in effective:
            ref = normalize_words(tokenize(str(r.gold)))
            hyp = normalize_words(tokenize(r.model_reply))
            dist += edit_distance(ref, hyp)
            ref_len += len(ref)
        if ref_len == 0:
            raise UndefinedMetricError("asr references are empty")
        report.wer = dist / ref_len
    return records, report


def write_records(path, records: Sequence[EvalRecord]) -> None:
    lines = [
        json.dumps(r.as_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        for r in records
    ]
    atomic_write_text(Path(path), "".join(line + "\n" for line in lines))


def write_report(path, report: MetricsReport, provenance: Optional[dict] = None) -> None:
    body = {"metrics": report.as_dict()}
    if provenance:
        body["provenance"] = provenance
    atomic_write_text(Path(path), json.dumps(body, sort_keys=True, indent=2) + "\n")
