"""Plan and task-manifest loading against the toolkit's file contracts.

The trainer deliberately reads only the documented fields; anything else
in the files is ignored so the two packages stay coupled through the
schema alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple


class PlanError(ValueError):
    """The plan or a manifest does not satisfy the schema contract."""


@dataclass(frozen=True)
class TaskRecord:
    kind: str
    prompt: str
    expected_answer: str
    audio_ref: str
    source_sample_id: str
    loss_mask_mode: str

    REQUIRED = ("kind", "prompt", "expected_answer", "audio_ref",
                "source_sample_id", "loss_mask_mode")


@dataclass(frozen=True)
class Stage:
    dataset_ref: str
    steps: int


@dataclass(frozen=True)
class Plan:
    stage1: Stage
    stage2: Stage
    scheduler_type: str
    warmup_ratio: float
    preserve_state_across_stages: bool
    learning_rate: float
    per_device_batch: int
    grad_accum: int
    adapter_rank: int
    adapter_alpha: int
    rank_stabilized: bool
    target_projections: Tuple[str, ...]
    adapter_dropout: float
    loss_mask_mode: str

    @property
    def total_steps(self) -> int:
        return self.stage1.steps + self.stage2.steps

    @property
    def effective_batch(self) -> int:
        return self.per_device_batch * self.grad_accum


def load_plan(path) -> Plan:
    try:
        with open(path, "r", encoding="utf-8") as f:
            d = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise PlanError(f"cannot read plan file {path}: {exc}") from exc
    try:
        plan = Plan(
            stage1=Stage(d["stage1"]["dataset_ref"], int(d["stage1"]["steps"])),
            stage2=Stage(d["stage2"]["dataset_ref"], int(d["stage2"]["steps"])),
            scheduler_type=d["scheduler"]["type"],
            warmup_ratio=float(d["scheduler"]["warmup_ratio"]),
            preserve_state_across_stages=bool(d["scheduler"]["preserve_state_across_stages"]),
            learning_rate=float(d["optimizer"]["learning_rate"]),
            per_device_batch=int(d["optimizer"]["per_device_batch"]),
            grad_accum=int(d["optimizer"]["grad_accum"]),
            adapter_rank=int(d["adapter"]["rank"]),
            adapter_alpha=int(d["adapter"]["alpha"]),
            rank_stabilized=bool(d["adapter"]["rank_stabilized"]),
            target_projections=tuple(d["adapter"]["target_projections"]),
            adapter_dropout=float(d["adapter"]["dropout"]),
            loss_mask_mode=d.get("loss_mask_mode", "final_answer_only"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanError(f"plan file is missing or mistypes a required field: {exc}") from exc
    if plan.scheduler_type != "cosine":
        raise PlanError(f"unsupported scheduler type {plan.scheduler_type!r}")
    if not 0.0 < plan.warmup_ratio < 1.0:
        raise PlanError("warmup_ratio must be in (0, 1)")
    if plan.stage1.steps <= 0 or plan.stage2.steps < 0:
        raise PlanError("step counts must be positive")
    return plan


def load_tasks(path) -> List[TaskRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            missing = [k for k in TaskRecord.REQUIRED if k not in d]
            if missing:
                raise PlanError(f"{path}:{line_no} missing fields {missing}")
            records.append(TaskRecord(**{k: d[k] for k in TaskRecord.REQUIRED}))
    return records


def resolve_datasets(plan: Plan, data_dir) -> Tuple[List[TaskRecord], List[TaskRecord]]:
    """Load both stage datasets and check stage2 is a subset of stage1."""
    data_dir = Path(data_dir)
    full = load_tasks(data_dir / plan.stage1.dataset_ref)
    verified = load_tasks(data_dir / plan.stage2.dataset_ref)
    if not full:
        raise PlanError("stage 1 dataset is empty")
    full_keys = {(t.kind, t.source_sample_id) for t in full}
    stray = [t for t in verified if (t.kind, t.source_sample_id) not in full_keys]
    if stray:
        raise PlanError(
            f"stage 2 is not a subset of stage 1 ({stray[0].kind}, {stray[0].source_sample_id})"
        )
    return full, verified
