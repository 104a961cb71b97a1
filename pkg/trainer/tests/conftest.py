import json

import pytest

# Hand-written fixtures matching the dataset toolkit's file contracts;
# the trainer is only ever coupled to these schemas, never to its code.

ELABORATED_ANSWER = (
    "The speaker is emphasizing that the requested action was to call as opposed "
    "to any other action. Therefore, the correct answer is: 1. The speaker is "
    "emphasizing that the requested action was to call as opposed to any other action."
)
CASCADE_ANSWER = (
    'The speaker said "I asked you to call her yesterday." and emphasized "call".\n\n'
    "Therefore, the correct answer is: 1. The speaker is emphasizing that the requested "
    "action was to call as opposed to any other action."
)


def task_record(i, kind="ssd", expected="[call]", mode="final_answer_only"):
    return {
        "kind": kind,
        "prompt": "[Audio]\n\nprompt text",
        "expected_answer": expected,
        "audio_ref": f"audio/s{i}.wav",
        "source_sample_id": f"s{i}",
        "loss_mask_mode": mode,
    }


def eight_instances():
    records = []
    for i in range(4):
        records.append(task_record(i, "ssd", "[call]"))
        records.append(task_record(i, "elaborated", ELABORATED_ANSWER))
    return records


@pytest.fixture
def plan_dir(tmp_path):
    full = eight_instances()
    verified = full[:4]
    (tmp_path / "tasks_full.jsonl").write_text(
        "".join(json.dumps(r) + "\n" for r in full), encoding="utf-8"
    )
    (tmp_path / "tasks_verified.jsonl").write_text(
        "".join(json.dumps(r) + "\n" for r in verified), encoding="utf-8"
    )
    plan = {
        "stage1": {"dataset_ref": "tasks_full.jsonl", "steps": 6},
        "stage2": {"dataset_ref": "tasks_verified.jsonl", "steps": 4},
        "scheduler": {"type": "cosine", "warmup_ratio": 0.1,
                      "preserve_state_across_stages": True},
        "optimizer": {"learning_rate": 7e-5, "per_device_batch": 2, "grad_accum": 1},
        "adapter": {"rank": 16, "alpha": 32, "rank_stabilized": True,
                    "target_projections": ["q_proj", "v_proj"], "dropout": 0.1},
        "rehearsal": {"sources": [], "target_duration_s": 0.0, "tolerance_s": 30.0},
        "loss_mask_mode": "final_answer_only",
        "total_steps": 10,
    }
    (tmp_path / "plan.json").write_text(json.dumps(plan, indent=2), encoding="utf-8")
    return tmp_path
