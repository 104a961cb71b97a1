import { describe, expect, it } from "vitest";

import type { FormSample } from "../src/api.js";
import { FormState } from "../src/state.js";

function sample(id: string, words: string[]): FormSample {
  return {
    sample_id: id,
    audio_url: `/audio/${id}`,
    words,
    options: ["meaning one", "meaning two"],
  };
}

const BOOK = "I didn't take your book".split(" ");

describe("FormState", () => {
  it("renders one chip per server-provided token", () => {
    const state = new FormState([sample("s0", BOOK)]);
    expect(state.samples[0]?.words).toHaveLength(5);
  });

  it("toggling the last word marks index 4", () => {
    const state = new FormState([sample("s0", BOOK)]);
    expect(state.toggleWord("s0", 4)).toBe(true);
    expect(state.stressedIndices("s0")).toEqual([4]);
    expect(state.toggleWord("s0", 4)).toBe(false);
    expect(state.stressedIndices("s0")).toEqual([]);
  });

  it("rejects indices outside the server tokenization", () => {
    const state = new FormState([sample("s0", BOOK)]);
    expect(() => state.toggleWord("s0", 5)).toThrow();
    expect(() => state.toggleWord("s0", -1)).toThrow();
  });

  it("keeps submission disabled until every sample is answered", () => {
    const state = new FormState([sample("s0", BOOK), sample("s1", ["hello", "there"])]);
    expect(state.canSubmit()).toBe(false);
    state.chooseOption("s0", 1);
    state.toggleWord("s0", 0);
    expect(state.canSubmit()).toBe(false); // s1 still unanswered
    state.chooseOption("s1", 2);
    expect(state.canSubmit()).toBe(false); // s1 has no stressed word yet
    state.toggleWord("s1", 1);
    expect(state.canSubmit()).toBe(true);
  });

  it("builds one payload per sample with sorted indices", () => {
    const state = new FormState([sample("s0", BOOK)]);
    state.chooseOption("s0", 2);
    state.toggleWord("s0", 4);
    state.toggleWord("s0", 0);
    state.recordPlayback("s0");
    state.recordPlayback("s0");
    const payloads = state.payloads("annotator-1");
    expect(payloads).toEqual([
      {
        annotator_id: "annotator-1",
        sample_id: "s0",
        choice: 2,
        word_indices: [0, 4],
        playback_count: 2,
      },
    ]);
  });

  it("refuses to build payloads for an incomplete form", () => {
    const state = new FormState([sample("s0", BOOK)]);
    expect(() => state.payloads("a")).toThrow(/incomplete/);
  });

  it("flags resubmission after a submit", () => {
    const state = new FormState([sample("s0", BOOK)]);
    state.chooseOption("s0", 1);
    state.toggleWord("s0", 2);
    expect(state.isResubmission()).toBe(false);
    state.markSubmitted("s0");
    expect(state.isResubmission()).toBe(true);
    expect(state.submittedCount()).toBe(1);
  });
});
