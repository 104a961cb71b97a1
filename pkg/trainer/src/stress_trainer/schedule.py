"""Cosine learning-rate schedule with linear warmup.

One scheduler spans both training stages: the learning rate is a
function of the global step only, so crossing the stage boundary never
resets or kinks the curve.
"""

from __future__ import annotations

import math
from typing import List


def warmup_steps(total_steps: int, warmup_ratio: float) -> int:
    return max(1, int(round(total_steps * warmup_ratio)))


def lr_at(step: int, total_steps: int, base_lr: float, warmup_ratio: float) -> float:
    """Learning rate at a 1-based global step."""
    if not 1 <= step <= total_steps:
        raise ValueError(f"step {step} outside [1, {total_steps}]")
    warm = warmup_steps(total_steps, warmup_ratio)
    if step <= warm:
        return base_lr * step / warm
    progress = (step - warm) / (total_steps - warm)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


def lr_curve(total_steps: int, base_lr: float, warmup_ratio: float) -> List[float]:
    return [lr_at(s, total_steps, base_lr, warmup_ratio) for s in range(1, total_steps + 1)]


def max_adjacent_delta(curve: List[float]) -> float:
    return max(abs(b - a) for a, b in zip(curve, curve[1:]))
