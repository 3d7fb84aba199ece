// Composition root. One live session per page; the session id rides in the
// URL fragment. At most one mutating request is in flight at a time: every
// input is disabled while `busy` is set.

import { ApiClient, ApiError } from "./api.js";
import { Store } from "./store.js";
import { renderChecklist, renderFeedback, renderGuardNote, renderTranscript, renderWhatif } from "./views/panels.js";
import { renderReport } from "./views/report.js";

export interface App {
  store: Store;
  root: HTMLElement;
  start(): Promise<void>;
  sendMessage(text: string): Promise<void>;
  simulate(): Promise<void>;
  applyWhatif(param: string, value: number): Promise<void>;
  resetWhatif(): void;
  submitFeedback(text: string, rating?: number): Promise<void>;
}

const LAYOUT = `
  <header class="top">
    <span class="brand">decisim</span>
    <span id="session-label"></span>
  </header>
  <div id="error-bar" hidden>
    <span id="error-text"></span>
    <button id="retry-btn" type="button">Retry</button>
  </div>
  <main>
    <section class="left">
      <div id="chat-log" class="chat-log"></div>
      <form id="chat-form">
        <input id="chat-input" autocomplete="off" placeholder="Describe your decision…" />
        <button id="chat-send" type="submit">Send</button>
      </form>
      <div id="checklist"></div>
      <button id="simulate-btn" type="button" disabled>Simulate</button>
      <div id="guard-note-slot"></div>
    </section>
    <section class="right">
      <div id="report-label" class="report-label"></div>
      <div id="report-panel"></div>
      <div id="whatif-panel"></div>
      <div id="feedback-panel"></div>
    </section>
  </main>
`;

export function createApp(root: HTMLElement, api: ApiClient): App {
  root.innerHTML = LAYOUT;
  const store = new Store();
  const $ = <T extends HTMLElement>(id: string): T => {
    const node = root.querySelector(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  };

  let retryAction: (() => Promise<void>) | null = null;

  async function mutate(action: () => Promise<void>): Promise<void> {
    if (store.get().busy) return; // one in-flight mutation, enforced
    store.set({ busy: true, error: null });
    try {
      await action();
      retryAction = null;
    } catch (err) {
      if (err instanceof ApiError) {
        if (err.status === 409 && err.body.error === "incomplete_slots") {
          store.set({ missingSlots: (err.body.missing as string[]) ?? [] });
        } else if (err.status === 409 && err.body.error === "session_closed") {
          store.set({ closed: true });
        } else {
          store.set({ error: err.body.message ?? String(err) });
        }
      } else {
        // network failure: keep the action for the retry affordance
        retryAction = action;
        store.set({ error: "Could not reach the server." });
      }
    } finally {
      store.set({ busy: false });
    }
  }

  const app: App = {
    store,
    root,

    async start() {
      await mutate(async () => {
        const created = await api.createSession();
        window.location.hash = created.session_id;
        store.set({
          sessionId: created.session_id,
          transcript: [{ speaker: "agent", text: created.first_question }],
          phase: "collecting",
        });
      });
    },

    async sendMessage(text: string) {
      const sid = store.get().sessionId;
      if (!sid || !text.trim()) return;
      await mutate(async () => {
        const reply = await api.sendMessage(sid, text);
        store.set({
          transcript: [
            ...store.get().transcript,
            { speaker: "user", text },
            { speaker: "agent", text: reply.agent_reply },
          ],
          filled: reply.filled_slots,
          pending: reply.pending_slots,
          phase: reply.phase,
          missingSlots: null,
        });
      });
    },

    async simulate() {
      const sid = store.get().sessionId;
      if (!sid) return;
      await mutate(async () => {
        const report = await api.simulate(sid);
        store.set({
          canonicalReport: report,
          whatifReport: null,
          overrides: {},
          phase: "simulated",
          missingSlots: null,
        });
      });
    },

    async applyWhatif(param: string, value: number) {
      const sid = store.get().sessionId;
      if (!sid) return;
      const overrides = { ...store.get().overrides, [param]: value };
      await mutate(async () => {
        const report = await api.whatif(sid, overrides);
        store.set({ whatifReport: report, overrides });
      });
    },

    resetWhatif() {
      store.set({ whatifReport: null, overrides: {} });
    },

    async submitFeedback(text: string, rating?: number) {
      const sid = store.get().sessionId;
      if (!sid) return;
      await mutate(async () => {
        await api.feedback(sid, text, rating);
        store.set({ closed: true, phase: "closed" });
      });
    },
  };

  // -- wiring ---------------------------------------------------------------

  const chatForm = $<HTMLFormElement>("chat-form");
  const chatInput = $<HTMLInputElement>("chat-input");
  chatForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const text = chatInput.value;
    chatInput.value = "";
    void app.sendMessage(text);
  });

  $<HTMLButtonElement>("simulate-btn").addEventListener("click", () => void app.simulate());
  $<HTMLButtonElement>("retry-btn").addEventListener("click", () => {
    const action = retryAction;
    if (action) void mutate(action);
  });

  store.subscribe((state) => {
    $<HTMLSpanElement>("session-label").textContent =
      state.sessionId ? `session ${state.sessionId.slice(0, 8)}…` : "connecting…";

    renderTranscript($("chat-log"), state);
    renderChecklist($("checklist"), state);
    renderGuardNote($("guard-note-slot"), state);

    const simulateBtn = $<HTMLButtonElement>("simulate-btn");
    // Guard parity: enabled exactly when the latest API phase says ready.
    simulateBtn.disabled = state.phase !== "ready_to_simulate" || state.busy;

    chatInput.disabled = state.busy || state.closed || state.phase === "simulated";
    $<HTMLButtonElement>("chat-send").disabled = chatInput.disabled;

    const errorBar = $<HTMLDivElement>("error-bar");
    errorBar.hidden = state.error === null;
    $<HTMLSpanElement>("error-text").textContent = state.error ?? "";
    $<HTMLButtonElement>("retry-btn").hidden = retryAction === null;

    const active = state.whatifReport ?? state.canonicalReport;
    $<HTMLDivElement>("report-label").textContent =
      state.whatifReport ? "what-if scenario (canonical result kept)" : "";
    const panel = $<HTMLDivElement>("report-panel");
    if (active) {
      renderReport(panel, active, state.whatifReport ? "what-if" : "canonical");
    } else {
      panel.innerHTML = "";
    }

    renderWhatif($("whatif-panel"), state.canonicalReport, state,
      (param, value) => void app.applyWhatif(param, value),
      () => app.resetWhatif());
    renderFeedback($("feedback-panel"), state,
      (text, rating) => void app.submitFeedback(text, rating));
  });

  return app;
}
