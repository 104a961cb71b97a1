"""Command-line entry: run the staged finetune described by a plan file."""

from __future__ import annotations

import argparse
import json
import sys

from .plan import PlanError, load_plan
from .runner import train_staged


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="stress-trainer")
    parser.add_argument("--plan", required=True, help="plan JSON emitted by the dataset toolkit")
    parser.add_argument("--data-dir", required=True, help="directory holding the task manifests")
    parser.add_argument("--out-dir", default="checkpoints")
    parser.add_argument("--model-id", default="dry-run")
    parser.add_argument("--dry-run", action="store_true", default=True)
    args = parser.parse_args(argv)
    try:
        plan = load_plan(args.plan)
        logs = train_staged(plan, args.data_dir, args.out_dir,
                            model_id=args.model_id, dry_run=args.dry_run)
    except (PlanError, ValueError, OSError) as exc:
        print(json.dumps({"error": {"type": exc.__class__.__name__, "message": str(exc)}}),
              file=sys.stderr)
        return 1
    print(json.dumps({
        "steps": len(logs),
        "stage1_steps": sum(1 for l in logs if l.stage == 1),
        "stage2_steps": sum(1 for l in logs if l.stage == 2),
        "final_lr": logs[-1].lr if logs else None,
    }))
    return 0


if __name__ == "__main__":
    sys.exit(main())
