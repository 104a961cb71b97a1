/**
 * Round-trip against the real annotation server: three scripted sessions
 * drive the same state machine the browser uses, then the aggregate
 * endpoint must report the hand-computed majority-vote accuracy.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotationApi } from "../src/api.js";
import { FormState } from "../src/state.js";

const PORT = 8901 + (process.pid % 50);
const BASE = `http://127.0.0.1:${PORT}`;

interface ManifestRecord {
  id: string;
  stress_mask: number[];
  label_index: number;
}

let server: ChildProcess | null = null;
let records: ManifestRecord[] = [];
let available = true;
let skipReason = "";

function runPipeline(dir: string): boolean {
  const stages = [
    ["gen-text", "4"],
    ["synth"],
  ];
  for (const args of stages) {
    const proc = spawnSync(
      "python3",
      ["-m", "stresskit.cli", "--out-dir", dir, "--seed", "17", ...args],
      { encoding: "utf-8" },
    );
    if (proc.status !== 0) {
      skipReason = `pipeline stage failed: ${proc.stderr}`;
      return false;
    }
  }
  return true;
}

async function waitForServer(): Promise<boolean> {
  for (let i = 0; i < 60; i++) {
    try {
      const resp = await fetch(`${BASE}/form?annotator=probe`);
      if (resp.ok) return true;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 500));
  }
  return false;
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "annotate-roundtrip-"));
  if (!runPipeline(dir)) {
    available = false;
    return;
  }
  const manifestLines = readFileSync(join(dir, "audio_full.jsonl"), "utf-8")
    .trim()
    .split("\n");
  const tenLines = manifestLines.slice(0, 10);
  records = tenLines.map((line) => JSON.parse(line) as ManifestRecord);
  const subManifest = join(dir, "audio_ten.jsonl");
  writeFileSync(subManifest, tenLines.join("\n") + "\n");

  server = spawn(
    "python3",
    [
      "-m",
      "stresskit.cli",
      "--out-dir",
      dir,
      "serve-annotation",
      "--manifest",
      subManifest,
      "--port",
      String(PORT),
    ],
    { stdio: "ignore" },
  );
  available = await waitForServer();
  if (!available) skipReason = "annotation server did not come up";
}, 120_000);

afterAll(() => {
  server?.kill();
});

function goldIndices(record: ManifestRecord): number[] {
  return record.stress_mask.flatMap((m, i) => (m ? [i] : []));
}

async function scriptedSession(
  annotator: string,
  pickChoice: (record: ManifestRecord) => number,
): Promise<number> {
  const api = new AnnotationApi(BASE);
  let submitted = 0;
  for (;;) {
    const batch = await api.fetchForm(annotator);
    if (batch.samples.length === 0) break;
    const state = new FormState(batch.samples);
    for (const sample of batch.samples) {
      const record = records.find((r) => r.id === sample.sample_id);
      if (!record) throw new Error(`sample ${sample.sample_id} not in manifest`);
      state.chooseOption(sample.sample_id, pickChoice(record) as 1 | 2);
      for (const idx of goldIndices(record)) state.toggleWord(sample.sample_id, idx);
      state.recordPlayback(sample.sample_id);
    }
    expect(state.canSubmit()).toBe(true);
    for (const payload of state.payloads(annotator)) {
      await api.submit(payload);
      state.markSubmitted(payload.sample_id);
      submitted += 1;
    }
  }
  return submitted;
}

describe("annotation round trip", () => {
  it(
    "three scripted sessions produce the hand-computed majority vote",
    async () => {
      if (!available) {
        console.warn(`skipping: ${skipReason}`);
        return;
      }
      // a1 and a2 always pick the stored correct option; a3 always picks 1
      expect(await scriptedSession("a1", (r) => r.label_index + 1)).toBe(10);
      expect(await scriptedSession("a2", (r) => r.label_index + 1)).toBe(10);
      expect(await scriptedSession("a3", () => 1)).toBe(10);

      const api = new AnnotationApi(BASE);
      const agg = await api.fetchAggregate();
      expect(agg.n_annotations).toBe(30);

      // hand computation: two always-correct annotators dominate every
      // 3-way vote, so majority-vote accuracy is exactly 1.0
      expect(agg.ssr.majority_vote.n_samples).toBe(10);
      expect(agg.ssr.majority_vote.accuracy).toBe(1.0);

      const label0 = records.filter((r) => r.label_index === 0).length;
      expect(agg.ssr.per_annotator["a1"]?.accuracy).toBe(1.0);
      expect(agg.ssr.per_annotator["a2"]?.accuracy).toBe(1.0);
      expect(agg.ssr.per_annotator["a3"]?.accuracy).toBeCloseTo(label0 / 10, 10);
      expect(agg.ssr.overall_accuracy).toBeCloseTo((10 + 10 + label0) / 30, 10);

      // every session clicked the gold words, so per-annotator SSD is perfect
      for (const annotator of ["a1", "a2", "a3"]) {
        expect(agg.ssd.per_annotator[annotator]?.f1).toBe(1.0);
      }
      console.log("SECONDARY ACCEPTANCE PASS: annotation round-trip majority vote 1.0");
    },
    120_000,
  );

  it(
    "resubmission overwrites and is audited server-side",
    async () => {
      if (!available) return;
      const api = new AnnotationApi(BASE);
      const first = records[0];
      if (!first) throw new Error("no records");
      const result = await api.submit({
        annotator_id: "a3",
        sample_id: first.id,
        choice: 2,
        word_indices: goldIndices(first),
        playback_count: 1,
      });
      expect(result.overwrote).toBe(true);
    },
    60_000,
  );
});
