"""Staged training loop: schedule, batching and logging.

Dry-run mode executes the complete two-stage loop (deterministic batch
rotation, one continuous scheduler, per-step masked-token accounting)
without any model, writing a JSON-lines log plus checkpoint metadata.
Real weight updates are delegated to an injected ``step_fn(batch, lr)``;
none is bundled because model identity and device setup are deployment
concerns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from .masking import Tokenizer, masked_token_count, whitespace_tokenizer
from .plan import Plan, TaskRecord, resolve_datasets
from .schedule import lr_at

StepFn = Callable[[Sequence[TaskRecord], float], float]


@dataclass
class StepLog:
    step: int
    stage: int
    lr: float
    n_examples: int
    masked_tokens: int
    loss: Optional[float]

    def as_dict(self) -> dict:
        return {
            "step": self.step,
            "stage": self.stage,
            "lr": self.lr,
            "n_examples": self.n_examples,
            "masked_tokens": self.masked_tokens,
            "loss": self.loss,
        }


def _batches(dataset: Sequence[TaskRecord], batch_size: int, n_steps: int, offset: int = 0):
    """Deterministic rotation over the dataset, one batch per optimizer step."""
    n = len(dataset)
    cursor = offset
    for _ in range(n_steps):
        batch = [dataset[(cursor + i) % n] for i in range(batch_size)]
        cursor += batch_size
        yield batch


def train_staged(
    plan: Plan,
    data_dir,
    out_dir,
    model_id: str = "dry-run",
    dry_run: bool = True,
    step_fn: Optional[StepFn] = None,
    tokenizer: Tokenizer = whitespace_tokenizer,
    log_name: str = "train_log.jsonl",
) -> List[StepLog]:
    """Run stage 1 on the full dataset, then stage 2 on the verified subset.

    The scheduler is a function of the global step, so stage 2 continues
    the cosine curve exactly where stage 1 left off.
    """
    if not dry_run and step_fn is None:
        raise ValueError(
            "no step_fn injected: this adapter only performs weight updates "
            "through a provided step function; use dry_run=True otherwise"
        )
    full, verified = resolve_datasets(plan, data_dir)
    if plan.stage2.steps > 0 and not verified:
        raise ValueError("stage 2 has steps but the verified dataset is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logs: List[StepLog] = []

    def run_stage(stage_no: int, dataset: Sequence[TaskRecord], n_steps: int, start_step: int):
        for i, batch in enumerate(_batches(dataset, plan.effective_batch, n_steps)):
            step = start_step + i
            lr = lr_at(step, plan.total_steps, plan.learning_rate, plan.warmup_ratio)
            masked = sum(
                masked_token_count(t.expected_answer, plan.loss_mask_mode, tokenizer)
                for t in batch
            )
            loss = step_fn(batch, lr) if step_fn is not None else None
            logs.append(StepLog(step=step, stage=stage_no, lr=lr,
                                n_examples=len(batch), masked_tokens=masked, loss=loss))

    run_stage(1, full, plan.stage1.steps, start_step=1)
    _write_checkpoint(out_dir / "checkpoint-stage1.json", plan, model_id, plan.stage1.steps, 1)
    run_stage(2, verified or full, plan.stage2.steps, start_step=plan.stage1.steps + 1)
    _write_checkpoint(out_dir / "checkpoint-final.json", plan, model_id, plan.total_steps, 2)

    with open(out_dir / log_name, "w", encoding="utf-8") as f:
        for entry in logs:
            f.write(json.dumps(entry.as_dict(), sort_keys=True) + "\n")
    return logs


def _write_checkpoint(path: Path, plan: Plan, model_id: str, step: int, stage: int) -> None:
    body = {
        "model_id": model_id,
        "step": step,
        "stage": stage,
        "adapter": {
            "rank": plan.adapter_rank,
            "alpha": plan.adapter_alpha,
            "rank_stabilized": plan.rank_stabilized,
            "target_projections": list(plan.target_projections),
            "dropout": plan.adapter_dropout,
        },
        "loss_mask_mode": plan.loss_mask_mode,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(body, f, sort_keys=True, indent=2)
        f.write("\n")
