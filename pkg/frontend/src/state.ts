/**
 * Form state machine, kept free of DOM concerns so it is unit-testable.
 *
 * A sample counts as answered once the annotator picked one of the two
 * intentions and marked at least one stressed word. Submission of the
 * whole form stays disabled until every sample in the batch is answered.
 * Stress marks are word indices into the server-provided tokenization;
 * the client never re-splits the text.
 */

import type { FormSample, Submission } from "./api.js";

export interface SampleAnswer {
  choice: number | null;
  stressed: Set<number>;
  playbackCount: number;
  submitted: boolean;
}

export class FormState {
  readonly samples: FormSample[];
  private answers = new Map<string, SampleAnswer>();

  constructor(samples: FormSample[]) {
    this.samples = samples;
    for (const s of samples) {
      this.answers.set(s.sample_id, {
        choice: null,
        stressed: new Set(),
        playbackCount: 0,
        submitted: false,
      });
    }
  }

  private answer(sampleId: string): SampleAnswer {
    const a = this.answers.get(sampleId);
    if (!a) throw new Error(`unknown sample ${sampleId}`);
    return a;
  }

  chooseOption(sampleId: string, option: 1 | 2): void {
    this.answer(sampleId).choice = option;
  }

  /** Toggle one word chip; returns its new stressed state. */
  toggleWord(sampleId: string, wordIndex: number): boolean {
    const sample = this.samples.find((s) => s.sample_id === sampleId);
    if (!sample) throw new Error(`unknown sample ${sampleId}`);
    if (wordIndex < 0 || wordIndex >= sample.words.length) {
      throw new Error(`word index ${wordIndex} out of range`);
    }
    const marks = this.answer(sampleId).stressed;
    if (marks.has(wordIndex)) {
      marks.delete(wordIndex);
      return false;
    }
    marks.add(wordIndex);
    return true;
  }

  recordPlayback(sampleId: string): void {
    this.answer(sampleId).playbackCount += 1;
  }

  stressedIndices(sampleId: string): number[] {
    return [...this.answer(sampleId).stressed].sort((a, b) => a - b);
  }

  choiceOf(sampleId: string): number | null {
    return this.answer(sampleId).choice;
  }

  isAnswered(sampleId: string): boolean {
    const a = this.answer(sampleId);
    return a.choice !== null && a.stressed.size > 0;
  }

  canSubmit(): boolean {
    return (
      this.samples.length > 0 &&
      this.samples.every((s) => this.isAnswered(s.sample_id))
    );
  }

  /** True when any sample was already submitted, so the UI warns first. */
  isResubmission(): boolean {
    return this.samples.some((s) => this.answer(s.sample_id).submitted);
  }

  markSubmitted(sampleId: string): void {
    this.answer(sampleId).submitted = true;
  }

  submittedCount(): number {
    return this.samples.filter((s) => this.answer(s.sample_id).submitted).length;
  }

  payloads(annotatorId: string): Submission[] {
    if (!this.canSubmit()) {
      throw new Error("form incomplete: every sample needs a choice and stressed words");
    }
    return this.samples.map((s) => ({
      annotator_id: annotatorId,
      sample_id: s.sample_id,
      choice: this.choiceOf(s.sample_id),
      word_indices: this.stressedIndices(s.sample_id),
      playback_count: this.answer(s.sample_id).playbackCount,
    }));
  }
}
