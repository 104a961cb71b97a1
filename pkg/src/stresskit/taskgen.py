"""Training-task materialization and the staged-training plan.

Every audio sample yields four task instances (stress detection,
end-to-end reasoning, elaborated reasoning, cascade reasoning), rendered
byte-exactly from the registered templates. The staged plan captures the
two-phase schedule: full data first, then the verified subset, with the
scheduler state preserved across the boundary.

Placeholder semantics for ``[stressed words]`` depend on the surface: the
detection answer uses the bracketed list form ("[book]"), the cascade
answer embeds the words bare inside quotes ('emphasized "book"').
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .corpus import AudioSample, atomic_write_text, validate_audio_sample
from .errors import CapacityError, ConfigurationError, DataError, PreconditionError
from .prompts import load_template, render
from .textnorm import display_word

TASK_KINDS = ("ssd", "end_to_end", "elaborated", "cascade")
LOSS_MASK_MODES = ("final_answer_only", "full_answer")


@dataclass(frozen=True)
class TaskInstance:
    kind: str
    prompt: str
    expected_answer: str
    audio_ref: str
    source_sample_id: str
    loss_mask_mode: str = "final_answer_only"


def stressed_display_words(sample: AudioSample) -> List[str]:
    return [display_word(w) for w in sample.stress.stressed_words(sample.transcription)]


def materialize_tasks(
    sample: AudioSample,
    loss_mask_mode: str = "final_answer_only",
    kinds: Sequence[str] = TASK_KINDS,
) -> List[TaskInstance]:
    """Render one task instance per requested kind."""
    violations = validate_audio_sample(sample)
    if violations:
        raise DataError(f"cannot materialize invalid sample {sample.id}: {violations[0]}")
    if loss_mask_mode not in LOSS_MASK_MODES:
        raise ConfigurationError(f"unknown loss mask mode {loss_mask_mode!r}")
    unknown = [k for k in kinds if k not in TASK_KINDS]
    if unknown:
        raise ConfigurationError(f"unknown task kinds {unknown}")
    words = stressed_display_words(sample)
    mapping = {
        "[transcription]": sample.transcription.text,
        "[answer 1]": sample.answers[0],
        "[answer 2]": sample.answers[1],
        "[answer label]": str(sample.label_index + 1),
        "[correct answer]": sample.correct_answer,
        "[description]": sample.description,
    }
    out: List[TaskInstance] = []
    for kind in kinds:
        prompt_tpl = load_template(f"train_{kind}.prompt.txt")
        answer_tpl = load_template(f"train_{kind}.answer.txt")
        stressed = ", ".join(words) if kind == "cascade" else "[" + ", ".join(words) + "]"
        m = dict(mapping)
        m["[stressed words]"] = stressed
        if kind == "elaborated" and not sample.description.strip():
            raise DataError(f"sample {sample.id} has no description for the elaborated task")
        out.append(
            TaskInstance(
                kind=kind,
                prompt=render(prompt_tpl, m),
                expected_answer=render(answer_tpl, m),
                audio_ref=sample.audio_ref,
                source_sample_id=sample.id,
                loss_mask_mode=loss_mask_mode,
            )
        )
    return out


def materialize_dataset(
    samples: Sequence[AudioSample],
    loss_mask_mode: str = "final_answer_only",
    kinds: Sequence[str] = TASK_KINDS,
) -> List[TaskInstance]:
    out: List[TaskInstance] = []
    for s in samples:
        out.extend(materialize_tasks(s, loss_mask_mode=loss_mask_mode, kinds=kinds))
    return out


def task_to_record(task: TaskInstance) -> dict:
    return {
        "kind": task.kind,
        "prompt": task.prompt,
        "expected_answer": task.expected_answer,
        "audio_ref": task.audio_ref,
        "source_sample_id": task.source_sample_id,
        "loss_mask_mode": task.loss_mask_mode,
    }


def write_tasks(path, tasks: Sequence[TaskInstance]) -> None:
    lines = [
        json.dumps(task_to_record(t), sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        for t in tasks
    ]
    atomic_write_text(Path(path), "".join(line + "\n" for line in lines))


def read_tasks(path) -> List[TaskInstance]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                d = json.loads(line)
                out.append(TaskInstance(**d))
    return out


# --- staged training plan -----------------------------------------------------

@dataclass(frozen=True)
class StageSpec:
    dataset_ref: str
    steps: int


@dataclass(frozen=True)
class SchedulerSpec:
    type: str = "cosine"
    warmup_ratio: float = 0.05
    preserve_state_across_stages: bool = True


@dataclass(frozen=True)
class OptimizerSpec:
    learning_rate: float = 7e-5
    per_device_batch: int = 8
    grad_accum: int = 2


@dataclass(frozen=True)
class AdapterSpec:
    rank: int = 16
    alpha: int = 32
    rank_stabilized: bool = True
    target_projections: Tuple[str, ...] = ("q_proj", "v_proj")
    dropout: float = 0.1


@dataclass(frozen=True)
class RehearsalSpec:
    sources: Tuple[str, ...] = ()
    target_duration_s: float = 0.0
    tolerance_s: float = 30.0


@dataclass(frozen=True)
class StagedPlan:
    stage1: StageSpec
    stage2: StageSpec
    scheduler: SchedulerSpec
    optimizer: OptimizerSpec
    adapter: AdapterSpec
    rehearsal: RehearsalSpec
    loss_mask_mode: str = "final_answer_only"

    @property
    def total_steps(self) -> int:
        return self.stage1.steps + self.stage2.steps


@dataclass
class PlanConfig:
    """Defaults reproduce the published schedule; set the step fields to
    None to derive them from dataset sizes instead."""

    stage1_steps: Optional[int] = 1261
    total_steps: Optional[int] = 1595
    epochs_stage1: int = 1
    epochs_stage2: int = 1
    learning_rate: float = 7e-5
    per_device_batch: int = 8
    grad_accum: int = 2
    warmup_ratio: float = 0.05
    rank: int = 16
    alpha: int = 32
    rank_stabilized: bool = True
    target_projections: Tuple[str, ...] = ("q_proj", "v_proj")
    dropout: float = 0.1
    loss_mask_mode: str = "final_answer_only"
    rehearsal_sources: Tuple[str, ...] = ()
    rehearsal_target_duration_s: float = 0.0
    rehearsal_tolerance_s: float = 30.0


def build_staged_plan(
    full_ds: Sequence[TaskInstance],
    verified_ds: Sequence[TaskInstance],
    config: Optional[PlanConfig] = None,
    full_ref: str = "tasks_full.jsonl",
    verified_ref: str = "tasks_verified.jsonl",
) -> StagedPlan:
    """Compute the two-stage plan; the verified set must be a subset of the full set."""
    config = config or PlanConfig()
    if not 0.0 < config.warmup_ratio < 1.0:
        raise ConfigurationError("warmup_ratio must be in (0, 1)")
    full_keys = {(t.kind, t.source_sample_id) for t in full_ds}
    stray = [(t.kind, t.source_sample_id) for t in verified_ds
             if (t.kind, t.source_sample_id) not in full_keys]
    if stray:
        raise PreconditionError(f"verified set is not a subset of the full set: {stray[:3]}")
    effective = config.per_device_batch * config.grad_accum
    if config.stage1_steps is not None:
        stage1 = config.stage1_steps
    else:
        stage1 = math.ceil(len(full_ds) / effective) * config.epochs_stage1
    if config.total_steps is not None:
        total = config.total_steps
        stage2 = total - stage1
        if stage2 < 0:
            raise ConfigurationError("total_steps smaller than stage1_steps")
    else:
        stage2 = math.ceil(len(verified_ds) / effective) * config.epochs_stage2
    return StagedPlan(
        stage1=StageSpec(dataset_ref=full_ref, steps=stage1),
        stage2=StageSpec(dataset_ref=verified_ref, steps=stage2),
        scheduler=SchedulerSpec(warmup_ratio=config.warmup_ratio),
        optimizer=OptimizerSpec(
            learning_rate=config.learning_rate,
            per_device_batch=config.per_device_batch,
            grad_accum=config.grad_accum,
        ),
        adapter=AdapterSpec(
            rank=config.rank,
            alpha=config.alpha,
            rank_stabilized=config.rank_stabilized,
            target_projections=tuple(config.target_projections),
            dropout=config.dropout,
        ),
        rehearsal=RehearsalSpec(
            sources=tuple(config.rehearsal_sources),
            target_duration_s=config.rehearsal_target_duration_s,
            tolerance_s=config.rehearsal_tolerance_s,
        ),
        loss_mask_mode=config.loss_mask_mode,
    )


def plan_to_dict(plan: StagedPlan) -> dict:
    d = asdict(plan)
    d["total_steps"] = plan.total_steps
    return d


def write_plan(path, plan: StagedPlan) -> None:
    atomic_write_text(
        Path(path), json.dumps(plan_to_dict(plan), sort_keys=True, indent=2) + "\n"
    )


def read_plan(path) -> StagedPlan:
    with open(path, "r", encoding="utf-8") as f:
        d = json.load(f)
    return StagedPlan(
        stage1=StageSpec(**d["stage1"]),
        stage2=StageSpec(**d["stage2"]),
        scheduler=SchedulerSpec(**d["scheduler"]),
        optimizer=OptimizerSpec(**d["optimizer"]),
        adapter=AdapterSpec(
            rank=d["adapter"]["rank"],
            alpha=d["adapter"]["alpha"],
            rank_stabilized=d["adapter"]["rank_stabilized"],
            target_projections=tuple(d["adapter"]["target_projections"]),
            dropout=d["adapter"]["dropout"],
        ),
        rehearsal=RehearsalSpec(
            sources=tuple(d["rehearsal"]["sources"]),
            target_duration_s=d["rehearsal"]["target_duration_s"],
            tolerance_s=d["rehearsal"]["tolerance_s"],
        ),
        loss_mask_mode=d.get("loss_mask_mode", "final_answer_only"),
    )


# --- rehearsal mixing ----------------------------------------------------------

def mix_rehearsal(
    aux_sources: Sequence[Tuple[str, Sequence]],
    target_duration_s: float,
    seed: int,
    tolerance_s: float = 30.0,
    proportions: Optional[Sequence[float]] = None,
) -> List[Tuple[str, object]]:
    """Seeded greedy selection of auxiliary items duration-matched to a target.

    Items need a ``duration_s`` attribute. Each source is shuffled with
    its own seeded order; items are drawn from whichever source is
    furthest below its proportional share, skipping items that would
    overshoot ``target + tolerance``, until the cumulative duration lands
    in ``[target, target + tolerance]``.
    """
    if not aux_sources:
        raise CapacityError("no auxiliary sources given", shortfall_s=target_duration_s)
    k = len(aux_sources)
    if proportions is None:
        proportions = [1.0 / k] * k
    if len(proportions) != k or abs(sum(proportions) - 1.0) > 1e-9:
        raise ConfigurationError("proportions must match sources and sum to 1")

    shuffled: List[List] = []
    for name, items in aux_sources:
        digest = hashlib.sha256(f"rehearsal:{seed}:{name}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        order = rng.permutation(len(items))
        shuffled.append([items[int(i)] for i in order])

    used = [0.0] * k
    cursors = [0] * k
    total = 0.0
    picked: List[Tuple[str, object]] = []
    while total < target_duration_s:
        by_deficit = sorted(
            range(k), key=lambda i: (used[i] - proportions[i] * target_duration_s, i)
        )
        progressed = False
        for i in by_deficit:
            items = shuffled[i]
            while cursors[i] < len(items):
                item = items[cursors[i]]
                cursors[i] += 1
                d = float(item.duration_s)
                if total + d <= target_duration_s + tolerance_s:
                    picked.append((aux_sources[i][0], item))
                    used[i] += d
                    total += d
                    progressed = True
                    break
            if progressed:
                break
        if not progressed:
            raise CapacityError(
                f"auxiliary audio exhausted at {total:.1f}s of {target_duration_s:.1f}s",
                shortfall_s=target_duration_s - total,
            )
    return picked
