// The interaction panels: chat transcript, slot checklist, what-if sliders
// and the feedback form. Pure DOM, re-rendered from the store on change.

import type { Report } from "../api.js";
import type { ViewState } from "../store.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderTranscript(container: HTMLElement, state: ViewState): void {
  container.innerHTML = "";
  for (const line of state.transcript) {
    const bubble = el("div", `line ${line.speaker}`);
    bubble.append(el("span", "speaker", line.speaker === "user" ? "you" : "agent"));
    bubble.append(el("span", "text", line.text));
    container.append(bubble);
  }
  container.scrollTop = container.scrollHeight;
}

export function renderChecklist(container: HTMLElement, state: ViewState): void {
  container.innerHTML = "";
  container.append(el("h3", undefined, "Checklist"));
  const list = el("ul", "slots");
  for (const [name, fill] of Object.entries(state.filled)) {
    const item = el("li", "slot filled");
    item.dataset.slot = name;
    item.append(el("span", "slot-name", name.replace(/_/g, " ")));
    item.append(el("span", "slot-value", String(fill.value)));
    list.append(item);
  }
  for (const name of state.pending) {
    const item = el("li", "slot pending");
    item.dataset.slot = name;
    item.append(el("span", "slot-name", name.replace(/_/g, " ")));
    item.append(el("span", "slot-value", "…"));
    list.append(item);
  }
  container.append(list);
}

export function renderGuardNote(container: HTMLElement, state: ViewState): void {
  container.innerHTML = "";
  if (state.missingSlots && state.missingSlots.length > 0) {
    const note = el("div", "guard-note");
    note.append(el("strong", undefined, "Still missing: "));
    note.append(state.missingSlots.map((s) => s.replace(/_/g, " ")).join(", "));
    container.append(note);
  }
}

export function renderWhatif(
  container: HTMLElement,
  report: Report | null,
  state: ViewState,
  onChange: (param: string, value: number) => void,
  onReset: () => void,
): void {
  container.innerHTML = "";
  if (!report) return;
  container.append(el("h3", undefined, "What if…"));

  // One slider per uncertain parameter, bounded by the distribution's support.
  const seen = new Set<string>();
  for (const params of Object.values(report.parameters)) {
    for (const [name, info] of Object.entries(params)) {
      const [lo, hi] = info.support;
      if (seen.has(name) || lo >= hi) continue;
      seen.add(name);

      const row = el("div", "whatif-row");
      row.dataset.param = name;
      const label = el("label", "whatif-label", `${name.replace(/_/g, " ")} (${info.unit})`);
      const slider = el("input") as HTMLInputElement;
      slider.type = "range";
      slider.min = String(lo);
      slider.max = String(hi);
      slider.step = String((hi - lo) / 100);
      slider.value = String(state.overrides[name] ?? info.mean);
      slider.disabled = state.busy || state.closed;
      const current = el("span", "whatif-value", slider.value);
      slider.addEventListener("input", () => {
        current.textContent = slider.value;
      });
      slider.addEventListener("change", () => onChange(name, Number(slider.value)));
      row.append(label, slider, current);
      container.append(row);
    }
  }

  const reset = el("button", "reset-whatif", "Back to canonical result") as HTMLButtonElement;
  reset.id = "whatif-reset";
  reset.disabled = state.busy || state.whatifReport === null;
  reset.addEventListener("click", onReset);
  container.append(reset);
}

export function renderFeedback(
  container: HTMLElement,
  state: ViewState,
  onSubmit: (text: string, rating?: number) => void,
): void {
  container.innerHTML = "";
  if (state.canonicalReport === null) return;
  if (state.closed) {
    container.append(el("p", "closed-note", "Session closed. Thanks for the feedback."));
    return;
  }
  const form = el("form", "feedback-form") as HTMLFormElement;
  form.id = "feedback-form";
  form.append(el("h3", undefined, "How did this go?"));
  const text = el("input") as HTMLInputElement;
  text.type = "text";
  text.id = "feedback-text";
  text.placeholder = "optional comments";
  const rating = el("select") as HTMLSelectElement;
  rating.id = "feedback-rating";
  rating.append(new Option("no rating", ""));
  for (let i = 1; i <= 5; i++) rating.append(new Option(`${i} / 5`, String(i)));
  const send = el("button", undefined, "Send feedback") as HTMLButtonElement;
  send.type = "submit";
  send.disabled = state.busy;
  form.append(text, rating, send);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    onSubmit(text.value, rating.value ? Number(rating.value) : undefined);
  });
  container.append(form);
}
