import dataclasses
import math

import pytest

from conftest import ANSWER_CALL, make_audio_sample
from stresskit.errors import CapacityError, ConfigurationError, DataError, PreconditionError
from stresskit.taskgen import (
    PlanConfig,
    TaskInstance,
    build_staged_plan,
    materialize_dataset,
    materialize_tasks,
    mix_rehearsal,
    read_plan,
    read_tasks,
    write_plan,
    write_tasks,
)


def test_materialize_produces_four_kinds(fixture_sample):
    tasks = materialize_tasks(fixture_sample)
    assert [t.kind for t in tasks] == ["ssd", "end_to_end", "elaborated", "cascade"]
    for t in tasks:
        assert t.audio_ref == fixture_sample.audio_ref
        assert t.source_sample_id == fixture_sample.id
        assert t.loss_mask_mode == "final_answer_only"


def test_ssd_expected_is_bracketed_word_list():
    sample = make_audio_sample(text="I didn't take your book", stressed=(4,))
    (ssd,) = materialize_tasks(sample, kinds=["ssd"])
    assert ssd.expected_answer == "[book]"
    assert "Answer format: [stressed_word_1, ...]" in ssd.prompt


def test_ssd_expected_multiword():
    sample = make_audio_sample(
        text="I enjoy the taste of espresso at sunrise", stressed=(6, 7)
    )
    (ssd,) = materialize_tasks(sample, kinds=["ssd"])
    assert ssd.expected_answer == "[at, sunrise]"


def test_end_to_end_expected(fixture_sample):
    (task,) = materialize_tasks(fixture_sample, kinds=["end_to_end"])
    assert task.expected_answer == f"1. {ANSWER_CALL}"


def test_elaborated_expected(fixture_sample):
    (task,) = materialize_tasks(fixture_sample, kinds=["elaborated"])
    assert task.expected_answer.endswith(f"Therefore, the correct answer is: 1. {ANSWER_CALL}")
    assert task.expected_answer.startswith(fixture_sample.description)


def test_cascade_expected_starts_with_quote(fixture_sample):
    (task,) = materialize_tasks(fixture_sample, kinds=["cascade"])
    assert task.expected_answer.startswith('The speaker said "')
    assert 'emphasized "call"' in task.expected_answer


def test_audio_placeholder_exactly_once(fixture_sample):
    for t in materialize_tasks(fixture_sample):
        assert t.prompt.count("[Audio]") + t.prompt.count("[audio]") == 1


def test_materialize_cardinality(mock_corpus):
    _, audio, _ = mock_corpus
    tasks = materialize_dataset(audio)
    assert len(tasks) == 4 * len(audio)
    assert len({(t.kind, t.audio_ref) for t in tasks}) == len(tasks)


def test_materialize_injective_on_distinct_samples(mock_corpus):
    _, audio, _ = mock_corpus
    tasks = materialize_dataset(audio)
    assert len({(t.prompt, t.expected_answer, t.audio_ref) for t in tasks}) == len(tasks)


def test_materialize_rejects_invalid_sample():
    bad = dataclasses.replace(make_audio_sample(), answers=("a", "b", "c"))
    with pytest.raises(DataError):
        materialize_tasks(bad)


def test_materialize_unknown_kind(fixture_sample):
    with pytest.raises(ConfigurationError):
        materialize_tasks(fixture_sample, kinds=["nonsense"])


def test_task_manifest_round_trip(tmp_path, fixture_sample):
    tasks = materialize_tasks(fixture_sample)
    path = tmp_path / "tasks.jsonl"
    write_tasks(path, tasks)
    assert read_tasks(path) == tasks


def _tasks(n, prefix="x"):
    return [
        TaskInstance(
            kind="ssd", prompt=f"[Audio] p{i}", expected_answer=f"[w{i}]",
            audio_ref=f"audio/{prefix}{i}.wav", source_sample_id=f"{prefix}{i}",
        )
        for i in range(n)
    ]


def test_plan_paper_defaults():
    full = _tasks(64)
    verified = full[:16]
    plan = build_staged_plan(full, verified)
    assert plan.total_steps == 1595
    assert plan.stage1.steps == 1261
    assert plan.stage2.steps == 334
    assert plan.scheduler.warmup_ratio == 0.05
    assert plan.scheduler.type == "cosine"
    assert plan.scheduler.preserve_state_across_stages is True
    assert plan.optimizer.learning_rate == 7e-5
    assert plan.optimizer.per_device_batch == 8
    assert plan.optimizer.grad_accum == 2
    assert plan.adapter.rank == 16
    assert plan.adapter.alpha == 32
    assert plan.adapter.rank_stabilized is True
    assert plan.adapter.target_projections == ("q_proj", "v_proj")
    assert plan.adapter.dropout == 0.1


def test_plan_scaled_arithmetic_oracle():
    full = _tasks(160)
    verified = full[:52]
    config = PlanConfig(stage1_steps=None, total_steps=None)
    plan = build_staged_plan(full, verified, config)
    # independent arithmetic: ceil(n / (batch * accum)) per stage
    assert plan.stage1.steps == math.ceil(160 / 16)
    assert plan.stage2.steps == math.ceil(52 / 16)
    assert plan.total_steps == plan.stage1.steps + plan.stage2.steps


def test_plan_verified_equals_full():
    full = _tasks(32)
    plan = build_staged_plan(full, list(full), PlanConfig(stage1_steps=None, total_steps=None))
    assert plan.stage1.steps + plan.stage2.steps == plan.total_steps


@pytest.mark.parametrize("n_full,n_verified,batch,accum,e1,e2", [
    (10, 5, 2, 1, 1, 1),
    (33, 7, 4, 2, 2, 3),
    (100, 100, 8, 2, 1, 1),
])
def test_plan_step_partition_property(n_full, n_verified, batch, accum, e1, e2):
    full = _tasks(n_full)
    verified = full[:n_verified]
    config = PlanConfig(
        stage1_steps=None, total_steps=None,
        per_device_batch=batch, grad_accum=accum,
        epochs_stage1=e1, epochs_stage2=e2,
    )
    plan = build_staged_plan(full, verified, config)
    assert plan.stage1.steps + plan.stage2.steps == plan.total_steps
    assert plan.stage1.steps == math.ceil(n_full / (batch * accum)) * e1
    assert plan.stage2.steps == math.ceil(n_verified / (batch * accum)) * e2


def test_plan_rejects_non_subset():
    full = _tasks(8, prefix="a")
    stray = _tasks(2, prefix="b")
    with pytest.raises(PreconditionError):
        build_staged_plan(full, stray)


def test_plan_rejects_bad_warmup():
    full = _tasks(8)
    with pytest.raises(ConfigurationError):
        build_staged_plan(full, full[:2], PlanConfig(warmup_ratio=1.5))


def test_plan_file_round_trip(tmp_path):
    plan = build_staged_plan(_tasks(64), _tasks(64)[:16])
    path = tmp_path / "plan.json"
    write_plan(path, plan)
    assert read_plan(path) == plan


class _Item:
    def __init__(self, duration_s):
        self.duration_s = duration_s


def test_mix_rehearsal_exact_fill():
    source = ("asr", [_Item(10.0) for _ in range(20)])
    picked = mix_rehearsal([source], target_duration_s=100.0, seed=3, tolerance_s=5.0)
    assert len(picked) == 10
    assert sum(item.duration_s for _, item in picked) == pytest.approx(100.0)


def test_mix_rehearsal_two_sources_equal_split():
    sources = [
        ("asr", [_Item(7.0) for _ in range(30)]),
        ("ser", [_Item(5.0) for _ in range(30)]),
    ]
    picked = mix_rehearsal(sources, target_duration_s=60.0, seed=3, tolerance_s=8.0)
    total = sum(item.duration_s for _, item in picked)
    assert 60.0 <= total <= 68.0
    per_source = {}
    for name, item in picked:
        per_source[name] = per_source.get(name, 0.0) + item.duration_s
    # greedy deficit balancing keeps each source within one item of its share
    assert abs(per_source["asr"] - 30.0) <= 7.0
    assert abs(per_source["ser"] - 30.0) <= 5.0


def test_mix_rehearsal_empty_sources():
    with pytest.raises(CapacityError):
        mix_rehearsal([], target_duration_s=10.0, seed=1)


def test_mix_rehearsal_shortfall_reported():
    with pytest.raises(CapacityError) as err:
        mix_rehearsal([("asr", [_Item(5.0)])], target_duration_s=100.0, seed=1)
    assert err.value.shortfall_s == pytest.approx(95.0)


def test_mix_rehearsal_deterministic():
    sources = [("asr", [_Item(3.0 + i % 5) for i in range(50)])]
    a = mix_rehearsal(sources, 40.0, seed=9, tolerance_s=6.0)
    b = mix_rehearsal(sources, 40.0, seed=9, tolerance_s=6.0)
    assert [id(x) for _, x in a] == [id(x) for _, x in b]
