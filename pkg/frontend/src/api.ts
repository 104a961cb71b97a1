/** Typed client for the annotation server. */

export interface FormSample {
  sample_id: string;
  audio_url: string;
  words: string[];
  options: [string, string];
}

export interface FormBatch {
  annotator_id: string;
  remaining: number;
  samples: FormSample[];
}

export interface Submission {
  annotator_id: string;
  sample_id: string;
  choice: number | null;
  word_indices: number[];
  playback_count: number;
}

export interface AggregateReport {
  n_annotations: number;
  ssr: {
    per_annotator: Record<string, { n: number; accuracy: number }>;
    overall_accuracy: number | null;
    majority_vote: { n_samples: number; accuracy: number | null };
  };
  ssd: {
    per_annotator: Record<string, { precision: number; recall: number; f1: number }>;
  };
}

export class AnnotationApi {
  constructor(private baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async fetchForm(annotatorId: string): Promise<FormBatch> {
    const resp = await fetch(this.url(`/form?annotator=${encodeURIComponent(annotatorId)}`));
    if (!resp.ok) throw new Error(`form fetch failed: ${resp.status}`);
    return (await resp.json()) as FormBatch;
  }

  async submit(submission: Submission): Promise<{ ok: boolean; overwrote: boolean }> {
    const resp = await fetch(this.url("/submit"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(submission),
    });
    if (!resp.ok) {
      const detail = await resp.text();
      throw new Error(`submit failed (${resp.status}): ${detail}`);
    }
    return (await resp.json()) as { ok: boolean; overwrote: boolean };
  }

  async fetchAggregate(): Promise<AggregateReport> {
    const resp = await fetch(this.url("/aggregate"));
    if (!resp.ok) throw new Error(`aggregate fetch failed: ${resp.status}`);
    return (await resp.json()) as AggregateReport;
  }

  audioUrl(sample: FormSample): string {
    return this.url(sample.audio_url);
  }
}
