/** Entry point: fetch a form batch, render it, submit, show the running tally. */

import { AnnotationApi } from "./api.js";
import { renderForm, renderTally } from "./render.js";
import { FormState } from "./state.js";

async function start(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const params = new URLSearchParams(window.location.search);
  const annotatorId =
    params.get("annotator") ?? window.prompt("Annotator id?") ?? "anonymous";
  const api = new AnnotationApi(params.get("server") ?? "");

  const loadBatch = async (): Promise<void> => {
    const batch = await api.fetchForm(annotatorId);
    if (batch.samples.length === 0) {
      root.replaceChildren();
      renderTally(root, 0, 0);
      const done = document.createElement("p");
      done.textContent = "All samples annotated. Thank you!";
      root.appendChild(done);
      return;
    }
    const state = new FormState(batch.samples);
    renderForm(root, api, state, {
      onSubmit: () => {
        void (async () => {
          for (const payload of state.payloads(annotatorId)) {
            try {
              await api.submit(payload);
              state.markSubmitted(payload.sample_id);
            } catch (err) {
              // keep the local draft; the annotator can retry the submit
              window.alert(`Submission failed, your answers are kept locally: ${err}`);
              return;
            }
          }
          const next = await api.fetchForm(annotatorId);
          root.replaceChildren();
          renderTally(root, state.submittedCount(), next.remaining);
          const again = document.createElement("button");
          again.textContent = next.remaining > 0 ? "Next form" : "Show aggregate";
          again.addEventListener("click", () => {
            if (next.remaining > 0) void loadBatch();
            else void showAggregate();
          });
          root.appendChild(again);
        })();
      },
    });
  };

  const showAggregate = async (): Promise<void> => {
    const agg = await api.fetchAggregate();
    root.replaceChildren();
    const heading = document.createElement("h2");
    heading.textContent = "Aggregate results";
    root.appendChild(heading);
    const majority = document.createElement("p");
    const acc = agg.ssr.majority_vote.accuracy;
    majority.textContent =
      acc === null
        ? "Majority vote needs at least three annotators per sample."
        : `Majority-vote accuracy over ${agg.ssr.majority_vote.n_samples} samples: ${(acc * 100).toFixed(1)}%`;
    root.appendChild(majority);
    const list = document.createElement("ul");
    for (const [annotator, stats] of Object.entries(agg.ssr.per_annotator)) {
      const item = document.createElement("li");
      item.textContent = `${annotator}: ${(stats.accuracy * 100).toFixed(1)}% over ${stats.n}`;
      list.appendChild(item);
    }
    root.appendChild(list);
  };

  await loadBatch();
}

void start();
