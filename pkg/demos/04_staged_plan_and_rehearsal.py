#!/usr/bin/env python3
"""Emit the two-stage training plan and a duration-matched rehearsal mix."""

import json

from stresskit.taskgen import (
    PlanConfig,
    TaskInstance,
    build_staged_plan,
    mix_rehearsal,
    plan_to_dict,
)


def fake_tasks(n):
    return [
        TaskInstance(kind="ssd", prompt="[Audio] ...", expected_answer="[w]",
                     audio_ref=f"audio/{i}.wav", source_sample_id=f"s{i}")
        for i in range(n)
    ]


full, verified = fake_tasks(17600), fake_tasks(17600)[:5244]

print("published defaults (steps pinned):")
plan = build_staged_plan(full, verified)
print(json.dumps(plan_to_dict(plan)["stage1"]), "->", json.dumps(plan_to_dict(plan)["stage2"]))
print(f"   total={plan.total_steps}, warmup={plan.scheduler.warmup_ratio:.0%}, "
      f"lr={plan.optimizer.learning_rate}, adapter r={plan.adapter.rank}/a={plan.adapter.alpha}")

print("\nderived from data sizes instead (batch 8 x accum 2, one epoch each):")
derived = build_staged_plan(full, verified, PlanConfig(stage1_steps=None, total_steps=None))
print(f"   stage1={derived.stage1.steps}, stage2={derived.stage2.steps}, total={derived.total_steps}")


class Clip:
    def __init__(self, duration_s):
        self.duration_s = duration_s


print("\nrehearsal mix: match 120s of auxiliary audio, split between two sources")
sources = [
    ("asr", [Clip(9.0) for _ in range(40)]),
    ("emotion", [Clip(4.0) for _ in range(40)]),
]
picked = mix_rehearsal(sources, target_duration_s=120.0, seed=5, tolerance_s=10.0)
per = {}
for name, clip in picked:
    per[name] = per.get(name, 0.0) + clip.duration_s
print(f"   picked {len(picked)} clips: {json.dumps(per)} "
      f"(total {sum(per.values()):.0f}s)")
