"""Annotation server: form batches, submissions, and aggregation.

Annotators receive forms of 15 samples (audio, the two answer options in
stored order, and the word tokens for stress clicking). Submissions are
persisted to an append-only event log and replayed into current state;
resubmitting the same (annotator, sample) overwrites with an audit entry.
The aggregate endpoint reports per-annotator accuracy, pooled accuracy,
three-way majority-vote accuracy, and per-annotator stress-detection
precision/recall/F1.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import Response
from pydantic import BaseModel, Field

from .corpus import AudioSample, read_manifest
from .evalkit import evaluate_ssd, majority_vote
from .errors import DataError

FORM_SIZE = 15


class Submission(BaseModel):
    annotator_id: str = Field(min_length=1)
    sample_id: str = Field(min_length=1)
    choice: Optional[int] = Field(default=None, ge=1, le=2)
    word_indices: Optional[List[int]] = None
    playback_count: int = 0


class AnnotationStore:
    """Append-only event log replayed into (annotator, sample) -> submission."""

    def __init__(self, path):
        self.path = Path(path)
        self.state: Dict[Tuple[str, str], dict] = {}
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    event = json.loads(line)
                    if event.get("event") == "submit":
                        key = (event["annotator_id"], event["sample_id"])
                        self.state[key] = event

    def append(self, event: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(json.dumps(event, sort_keys=True, ensure_ascii=False) + "\n")

    def submit(self, sub: Submission) -> bool:
        """Record a submission; returns True when it overwrote an earlier one."""
        key = (sub.annotator_id, sub.sample_id)
        overwrote = key in self.state
        if overwrote:
            self.append({"event": "overwrite", "annotator_id": sub.annotator_id,
                         "sample_id": sub.sample_id, "previous": self.state[key]})
        event = {"event": "submit", **sub.model_dump()}
        self.append(event)
        self.state[key] = event
        return overwrote


def create_app(
    manifest_path,
    audio_root,
    store_path,
    form_size: int = FORM_SIZE,
    ui_dir=None,
) -> FastAPI:
    samples = read_manifest(manifest_path)
    by_id: Dict[str, AudioSample] = {s.id: s for s in samples}
    store = AnnotationStore(store_path)
    root = Path(audio_root)
    app = FastAPI(title="stress annotation")
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    @app.get("/form")
    def form(annotator: str = Query(min_length=1)):
        answered = {sid for (aid, sid) in store.state if aid == annotator}
        pending = [s for s in samples if s.id not in answered]
        batch = pending[:form_size]
        return {
            "annotator_id": annotator,
            "remaining": len(pending),
            "samples": [
                {
                    "sample_id": s.id,
                    "audio_url": f"/audio/{s.id}",
                    "words": list(s.transcription.words),
                    "options": list(s.answers),
                }
                for s in batch
            ],
        }

    @app.get("/audio/{sample_id}")
    def audio(sample_id: str):
        if sample_id not in by_id:
            raise HTTPException(status_code=404, detail=f"unknown sample {sample_id}")
        blob = (root / by_id[sample_id].audio_ref).read_bytes()
        return Response(content=blob, media_type="audio/wav")

    @app.post("/submit")
    def submit(sub: Submission):
        if sub.sample_id not in by_id:
            raise HTTPException(status_code=404, detail=f"unknown sample {sub.sample_id}")
        sample = by_id[sub.sample_id]
        if sub.word_indices is not None:
            n = len(sample.transcription.words)
            bad = [i for i in sub.word_indices if not 0 <= i < n]
            if bad:
                raise HTTPException(status_code=422, detail=f"word indices out of range: {bad}")
        if sub.choice is None and sub.word_indices is None:
            raise HTTPException(status_code=422, detail="submission needs a choice or word indices")
        overwrote = store.submit(sub)
        return {"ok": True, "overwrote": overwrote}

    @app.get("/aggregate")
    def aggregate():
        ssr_by_annotator: Dict[str, List[bool]] = {}
        choices_by_sample: Dict[str, List[Tuple[str, int]]] = {}
        ssd_pairs_by_annotator: Dict[str, List[Tuple[List[str], List[str]]]] = {}
        for (aid, sid), event in store.state.items():
            sample = by_id.get(sid)
            if sample is None:
                continue
            if event.get("choice") is not None:
                hit = int(event["choice"]) == sample.label_index + 1
                ssr_by_annotator.setdefault(aid, []).append(hit)
                choices_by_sample.setdefault(sid, []).append((aid, int(event["choice"])))
            if event.get("word_indices") is not None:
                words = sample.transcription.words
                pred = [words[i] for i in event["word_indices"]]
                gold = list(sample.stress.stressed_words(sample.transcription))
                ssd_pairs_by_annotator.setdefault(aid, []).append((pred, gold))

        per_annotator = {
            aid: {"n": len(hits), "accuracy": sum(hits) / len(hits)}
            for aid, hits in sorted(ssr_by_annotator.items())
        }
        pooled = [h for hits in ssr_by_annotator.values() for h in hits]
        overall = sum(pooled) / len(pooled) if pooled else None

        mv_hits = []
        for sid, votes in choices_by_sample.items():
            if len(votes) < 3:
                continue
            picked = [choice for _, choice in sorted(votes)[:3]]
            mv_hits.append(majority_vote(picked) == by_id[sid].label_index + 1)
        majority = {
            "n_samples": len(mv_hits),
            "accuracy": sum(mv_hits) / len(mv_hits) if mv_hits else None,
        }

        ssd = {}
        for aid, pairs in sorted(ssd_pairs_by_annotator.items()):
            try:
                scores = evaluate_ssd(pairs, averaging="micro")
            except DataError:
                continue
            ssd[aid] = scores.as_dict()

        return {
            "n_annotations": len(store.state),
            "ssr": {
                "per_annotator": per_annotator,
                "overall_accuracy": overall,
                "majority_vote": majority,
            },
            "ssd": {"per_annotator": ssd},
        }

    return app
