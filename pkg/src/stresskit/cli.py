"""Command-line pipeline driver.

Stages write their outputs into one run directory and later stages read
them back, so the order is enforced by the files on disk: gen-text ->
synth -> verify -> materialize -> plan, with stats/eval/report/serve-
annotation operating on whatever manifests exist. Every stage records a
provenance object (config hash, seeds, template hashes) and, with mock
backends, re-running a stage is byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from . import config as cfg
from . import corpus, evalkit, synth, taskgen, textgen, verify
from .corpus import atomic_write_text
from .errors import StageOrderError, StressKitError


def _provenance(run_cfg: cfg.RunConfig, out_dir: Path, stage: str, inputs, outputs) -> None:
    body = cfg.provenance(run_cfg, stage, inputs=inputs, outputs=outputs)
    atomic_write_text(out_dir / "provenance" / f"{stage}.json",
                      json.dumps(body, sort_keys=True, indent=2) + "\n")


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise StageOrderError(
            f"missing {path.name}; run `{producer}` first", missing_artifact=str(path)
        )
    return path


def cmd_gen_text(args, run_cfg: cfg.RunConfig, out_dir: Path) -> None:
    chat = cfg.build_chat_backend(run_cfg, role="chat")
    seed = cfg.stage_seed(run_cfg.root_seed, "gen-text")
    gen = run_cfg.generation
    samples, stats = textgen.generate_corpus(
        chat, args.n, seed,
        max_inflight=int(gen.get("max_inflight", 1)),
        temperature_phase1=float(gen.get("temperature_phase1", textgen.PHASE1_TEMPERATURE)),
        temperature_phase2=float(gen.get("temperature_phase2", textgen.PHASE2_TEMPERATURE)),
    )
    target = out_dir / "text_samples.jsonl"
    corpus.write_text_manifest(target, samples)
    _provenance(run_cfg, out_dir, "gen-text", [], [str(target)])
    print(json.dumps({"stage": "gen-text", "n_samples": len(samples),
                      "duplicates_discarded": stats.n_duplicates_discarded,
                      "parse_failures": stats.n_parse_failures}))


def cmd_synth(args, run_cfg: cfg.RunConfig, out_dir: Path) -> None:
    source = _require(out_dir / "text_samples.jsonl", "gen-text")
    tts = cfg.build_tts_backend(run_cfg)
    seed = cfg.stage_seed(run_cfg.root_seed, "synth")
    texts = corpus.read_text_manifest(source)
    audio_samples = synth.expand_corpus(tts, texts, seed, run_cfg.voices(), out_dir)
    target = out_dir / "audio_full.jsonl"
    corpus.write_manifest(target, audio_samples)
    _provenance(run_cfg, out_dir, "synth", [str(source)], [str(target)])
    print(json.dumps({"stage": "synth", "n_samples": len(audio_samples)}))


def cmd_verify(args, run_cfg: cfg.RunConfig, out_dir: Path) -> None:
    source = _require(out_dir / "audio_full.jsonl", "synth")
    samples = corpus.read_manifest(source)
    detector = cfg.build_stress_backend(run_cfg)
    cache = verify.VerificationCache(out_dir / "verification_cache.jsonl")
    results = verify.verify_dataset(
        detector, samples, out_dir, cache=cache,
        max_workers=int(run_cfg.verification.get("max_inflight", 1)),
    )
    policy = verify.FilterPolicy(
        require_stress_exact=bool(run_cfg.verification.get("require_stress_exact", True)),
        min_transcription_ratio=float(run_cfg.verification.get("min_transcription_ratio", 0.8)),
    )
    accepted, rejected = verify.apply_filter(samples, results, policy)
    corpus.write_manifest(out_dir / "audio_verified.jsonl", accepted)
    corpus.write_manifest(out_dir / "audio_rejected.jsonl", rejected)
    _provenance(run_cfg, out_dir, "verify", [str(source)],
                [str(out_dir / "audio_verified.jsonl"), str(out_dir / "audio_rejected.jsonl")])
    print(json.dumps({"stage": "verify", "accepted": len(accepted), "rejected": len(rejected)}))


def cmd_materialize(args, run_cfg: cfg.RunConfig, out_dir: Path) -> None:
    name = {"full": "audio_full.jsonl", "verified": "audio_verified.jsonl"}[args.source]
    producer = "synth" if args.source == "full" else "verify"
    source = _require(out_dir / name, producer)
    samples = corpus.read_manifest(source)
    mode = str(run_cfg.plan.get("loss_mask_mode", "final_answer_only"))
    kinds = run_cfg.plan.get("task_kinds", list(taskgen.TASK_KINDS))
    tasks = taskgen.materialize_dataset(samples, loss_mask_mode=mode, kinds=kinds)
    target = out_dir / f"tasks_{args.source}.jsonl"
    taskgen.write_tasks(target, tasks)
    _provenance(run_cfg, out_dir, f"materialize-{args.source}", [str(source)], [str(target)])
    print(json.dumps({"stage": "materialize", "source": args.source, "n_instances": len(tasks)}))


def cmd_stats(args, run_cfg: cfg.RunConfig, out_dir: Path) -> None:
    manifest = Path(args.manifest) if args.manifest else _require(out_dir / "audio_full.jsonl", "synth")
    samples = corpus.read_manifest(manifest)
    stats = corpus.compute_stats(samples)
    print(json.dumps(stats.as_dict(), sort_keys=True, indent=2))


def cmd_plan(args, run_cfg: cfg.RunConfig, out_dir: Path) -> None:
    full_path = _require(out_dir / "tasks_full.jsonl", "materialize --source full")
    verified_path = _require(out_dir / "tasks_verified.jsonl", "materialize --source verified")
    full = taskgen.read_tasks(full_path)
    verified = taskgen.read_tasks(verified_path)
    overrides = dict(run_cfg.plan)
    overrides.pop("task_kinds", None)
    if "target_projections" in overrides:
        overrides["target_projections"] = tuple(overrides["target_projections"])
    if "rehearsal_sources" in overrides:
        overrides["rehearsal_sources"] = tuple(overrides["rehearsal_sources"])
    verified_manifest = out_dir / "audio_verified.jsonl"
    if "rehearsal_target_duration_s" not in overrides and verified_manifest.exists():
        stats = corpus.compute_stats(corpus.read_manifest(verified_manifest))
        overrides["rehearsal_target_duration_s"] = stats.total_audio_seconds
    plan_cfg = taskgen.PlanConfig(**overrides)
    plan = taskgen.build_staged_plan(full, verified, plan_cfg)
    target = out_dir / "plan.json"
    taskgen.write_plan(target, plan)
    _provenance(run_cfg, out_dir, "plan", [str(full_path), str(verified_path)], [str(target)])
    print(json.dumps({"stage": "plan", "total_steps": plan.total_steps,
                      "stage1_steps": plan.stage1.steps, "stage2_steps": plan.stage2.steps}))


_TASK_NAMES = {"ssr": "ssr", "open-ssr": "open_ssr", "ssd": "ssd", "asr": "asr"}
_VARIANT_NAMES = {
    "audio": "audio_only",
    "stress": "audio_plus_stress",
    "stress+transcript": "audio_plus_stress_plus_transcription",
}


def cmd_eval(args, run_cfg: cfg.RunConfig, out_dir: Path) -> None:
    task = _TASK_NAMES[args.task]
    variant = _VARIANT_NAMES[args.variant]
    manifest = Path(args.manifest) if args.manifest else _require(out_dir / "audio_full.jsonl", "synth")
    dataset = corpus.read_manifest(manifest)
    slm = cfg.build_slm_backend(run_cfg, str(manifest), out_dir)
    judge_backend = cfg.build_chat_backend(run_cfg, role="judge")
    records, report = evalkit.run_evaluation(
        slm, dataset, task, variant, judge_backend, out_dir,
        failure_policy=str(run_cfg.evaluation.get("failure_policy", "count_wrong")),
        max_workers=int(run_cfg.evaluation.get("max_inflight", 1)),
    )
    run_dir = out_dir / f"eval_{args.task}_{args.variant.replace('+', '_')}"
    run_dir.mkdir(parents=True, exist_ok=True)
    evalkit.write_records(run_dir / "records.jsonl", records)
    prov = cfg.provenance(run_cfg, f"eval-{args.task}", [str(manifest)], [str(run_dir)])
    prov["backend_ids"] = {
        "slm": run_cfg.backends.get("slm", {}).get("kind", "mock:echo_gold"),
        "judge": run_cfg.backends.get("judge", {}).get("kind", "mock"),
    }
    evalkit.write_report(run_dir / "report.json", report, provenance=prov)
    _provenance(run_cfg, out_dir, f"eval-{args.task}-{args.variant}",
                [str(manifest)], [str(run_dir)])
    print(json.dumps({"stage": "eval", "task": args.task, "variant": args.variant,
                      **report.as_dict()}, sort_keys=True))


def cmd_report(args, run_cfg: cfg.RunConfig, out_dir: Path) -> None:
    rows = []
    for report_path in sorted(out_dir.glob("eval_*/report.json")):
        with open(report_path, "r", encoding="utf-8") as f:
            body = json.load(f)
        rows.append({"run": report_path.parent.name, **body["metrics"]})
    if not rows:
        raise StageOrderError("no eval_* reports found; run `eval` first",
                              missing_artifact=str(out_dir / "eval_*"))
    summary = {"runs": rows}
    atomic_write_text(out_dir / "report.json", json.dumps(summary, sort_keys=True, indent=2) + "\n")
    lines = ["| run | n | ssr_accuracy | open_ssr_mean | ssd_f1 | wer |",
             "| --- | --- | --- | --- | --- | --- |"]
    for row in rows:
        ssd = row.get("ssd") or {}
        def fmt(v):
            return f"{v:.4f}" if isinstance(v, float) else ("-" if v is None else str(v))
        lines.append(
            f"| {row['run']} | {row['n']} | {fmt(row.get('ssr_accuracy'))} "
            f"| {fmt(row.get('open_ssr_mean'))} | {fmt(ssd.get('f1'))} | {fmt(row.get('wer'))} |"
        )
    atomic_write_text(out_dir / "report.md", "\n".join(lines) + "\n")
    print(json.dumps({"stage": "report", "n_runs": len(rows)}))


def cmd_serve_annotation(args, run_cfg: cfg.RunConfig, out_dir: Path) -> None:
    import uvicorn

    from .annotation import create_app

    manifest = Path(args.manifest) if args.manifest else _require(out_dir / "audio_full.jsonl", "synth")
    app = create_app(
        manifest, out_dir, out_dir / "annotations.jsonl",
        form_size=args.form_size, ui_dir=args.ui_dir,
    )
    _provenance(run_cfg, out_dir, "serve-annotation", [str(manifest)], [])
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stresskit")
    parser.add_argument("--config", default=None, help="TOML config file")
    parser.add_argument("--seed", type=int, default=None, help="override the root seed")
    parser.add_argument("--out-dir", default=None, help="override the run directory")
    parser.add_argument(
        "--backend", action="append", default=[], metavar="ROLE=KIND",
        help="override a backend kind, e.g. slm=mock:complement",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-text", help="generate text samples")
    p.add_argument("n", type=int)
    p.set_defaults(fn=cmd_gen_text)

    sub.add_parser("synth", help="render stressed speech").set_defaults(fn=cmd_synth)
    sub.add_parser("verify", help="verify stress and filter").set_defaults(fn=cmd_verify)

    p = sub.add_parser("materialize", help="materialize training tasks")
    p.add_argument("--source", choices=("full", "verified"), default="full")
    p.set_defaults(fn=cmd_materialize)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_stats)

    sub.add_parser("plan", help="emit the staged training plan").set_defaults(fn=cmd_plan)

    p = sub.add_parser("eval", help="run an evaluation")
    p.add_argument("--task", choices=tuple(_TASK_NAMES), required=True)
    p.add_argument("--variant", choices=tuple(_VARIANT_NAMES), default="audio")
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_eval)

    sub.add_parser("report", help="summarize eval runs").set_defaults(fn=cmd_report)

    p = sub.add_parser("serve-annotation", help="serve the annotation API")
    p.add_argument("--manifest", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--form-size", type=int, default=15)
    p.add_argument("--ui-dir", default=None,
                   help="serve a built annotation UI from this directory at /ui")
    p.set_defaults(fn=cmd_serve_annotation)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run_cfg = cfg.load_config(args.config)
        if args.seed is not None:
            run_cfg.root_seed = args.seed
        if args.out_dir is not None:
            run_cfg.out_dir = args.out_dir
        for override in args.backend:
            role, _, kind = override.partition("=")
            if not kind:
                raise StressKitError(f"bad --backend override {override!r}; use role=kind")
            run_cfg.backends.setdefault(role, {})["kind"] = kind
        out_dir = Path(run_cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        args.fn(args, run_cfg, out_dir)
        return 0
    except StressKitError as exc:
        error = {"error": {"type": exc.__class__.__name__, "message": str(exc)}}
        if isinstance(exc, StageOrderError):
            error["error"]["missing_artifact"] = exc.missing_artifact
        print(json.dumps(error), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
