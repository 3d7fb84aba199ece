// Minimal observable state container; views re-render on every set().

import type { Phase, Report } from "./api.js";

export interface TranscriptLine {
  speaker: "user" | "agent";
  text: string;
}

export interface ViewState {
  sessionId: string | null;
  transcript: TranscriptLine[];
  filled: Record<string, { value: number; raw_text: string }>;
  pending: string[];
  phase: Phase | null;
  canonicalReport: Report | null;
  whatifReport: Report | null;
  overrides: Record<string, number>;
  busy: boolean;
  missingSlots: string[] | null;
  error: string | null;
  closed: boolean;
}

export const initialState: ViewState = {
  sessionId: null,
  transcript: [],
  filled: {},
  pending: [],
  phase: null,
  canonicalReport: null,
  whatifReport: null,
  overrides: {},
  busy: false,
  missingSlots: null,
  error: null,
  closed: false,
};

export class Store {
  private state: ViewState;
  private listeners: Array<(s: ViewState) => void> = [];

  constructor(state: ViewState = initialState) {
    this.state = { ...state };
  }

  get(): ViewState {
    return this.state;
  }

  set(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  subscribe(fn: (s: ViewState) => void): () => void {
    this.listeners.push(fn);
    fn(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }
}
