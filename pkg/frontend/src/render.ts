/** DOM rendering for the annotation form; all state flows through FormState. */

import type { AnnotationApi, FormSample } from "./api.js";
import type { FormState } from "./state.js";

export interface RenderHandlers {
  onSubmit: () => void;
}

function sampleCard(
  api: AnnotationApi,
  state: FormState,
  sample: FormSample,
  refresh: () => void,
): HTMLElement {
  const card = document.createElement("section");
  card.className = "sample-card";
  card.dataset.sampleId = sample.sample_id;

  const player = document.createElement("audio");
  player.controls = true;
  player.src = api.audioUrl(sample);
  player.addEventListener("play", () => state.recordPlayback(sample.sample_id));
  card.appendChild(player);

  const chipRow = document.createElement("div");
  chipRow.className = "chips";
  sample.words.forEach((word, index) => {
    const chip = document.createElement("button");
    chip.type = "button";
    chip.className = "chip";
    chip.textContent = word;
    chip.addEventListener("click", () => {
      const on = state.toggleWord(sample.sample_id, index);
      chip.classList.toggle("stressed", on);
      refresh();
    });
    chipRow.appendChild(chip);
  });
  const chipLabel = document.createElement("p");
  chipLabel.textContent = "Click the words the speaker stressed:";
  card.appendChild(chipLabel);
  card.appendChild(chipRow);

  const question = document.createElement("p");
  question.textContent = "Which intention did the speaker most likely convey?";
  card.appendChild(question);
  sample.options.forEach((option, i) => {
    const label = document.createElement("label");
    label.className = "option";
    const radio = document.createElement("input");
    radio.type = "radio";
    radio.name = `choice-${sample.sample_id}`;
    radio.value = String(i + 1);
    radio.addEventListener("change", () => {
      state.chooseOption(sample.sample_id, (i + 1) as 1 | 2);
      refresh();
    });
    label.appendChild(radio);
    label.appendChild(document.createTextNode(` ${i + 1}. ${option}`));
    card.appendChild(label);
  });
  return card;
}

export function renderForm(
  root: HTMLElement,
  api: AnnotationApi,
  state: FormState,
  handlers: RenderHandlers,
): void {
  root.replaceChildren();
  const heading = document.createElement("h2");
  heading.textContent = `Annotation form (${state.samples.length} samples)`;
  root.appendChild(heading);

  const submit = document.createElement("button");
  submit.type = "button";
  submit.id = "submit-form";
  submit.textContent = "Submit form";

  const refresh = () => {
    submit.disabled = !state.canSubmit();
  };

  for (const sample of state.samples) {
    root.appendChild(sampleCard(api, state, sample, refresh));
  }

  submit.addEventListener("click", () => {
    if (state.isResubmission()) {
      const proceed = window.confirm(
        "You already submitted answers for this form; submitting again overwrites them. Continue?",
      );
      if (!proceed) return;
    }
    handlers.onSubmit();
  });
  refresh();
  root.appendChild(submit);
}

export function renderTally(root: HTMLElement, submitted: number, remaining: number): void {
  const tally = document.createElement("p");
  tally.className = "tally";
  tally.textContent = `Submitted ${submitted} answers; ${remaining} samples remaining.`;
  root.appendChild(tally);
}
