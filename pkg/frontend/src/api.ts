// Typed client for the /v1 HTTP API. Every view-facing number in the app
// comes out of these response payloads; the client never computes statistics.

export type Phase = "collecting" | "ready_to_simulate" | "simulated" | "closed";

export interface Dist {
  type: "fixed" | "uniform" | "normal" | "triangular";
  value?: number;
  lo?: number;
  hi?: number;
  mean?: number;
  stddev?: number;
  mode?: number;
}

export interface ParamInfo {
  unit: string;
  dist: Dist;
  mean: number;
  support: [number, number];
}

export interface HistogramBin {
  count: number;
  lo: number;
  hi: number;
}

export interface AltStats {
  mean: number;
  stddev: number;
  min: number;
  max: number;
  percentiles: Record<string, number>;
  histogram: HistogramBin[];
}

export interface Narrative {
  recommendation: string;
  runner_up: string | null;
  expected_gap: number | null;
  win_vs_runner_up: number | null;
  direction: string;
}

export interface Report {
  recommendation: string;
  direction: string;
  seed: number;
  sample_count: number;
  expected: Record<string, number>;
  stddev: Record<string, number>;
  win_matrix: Record<string, Record<string, number>>;
  tie_mass: Record<string, Record<string, number>>;
  best_probability: Record<string, number>;
  sensitivity: Record<string, Record<string, number>>;
  stats: Record<string, AltStats>;
  parameters: Record<string, Record<string, ParamInfo>>;
  narrative: Narrative;
  problem?: unknown;
}

export interface SessionCreated {
  session_id: string;
  first_question: string;
  template_id: string;
}

export interface MessageReply {
  agent_reply: string;
  phase: Phase;
  filled_slots: Record<string, { value: number; raw_text: string }>;
  pending_slots: string[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: { error?: string; message?: string; missing?: string[] } & Record<string, unknown>,
  ) {
    super(`${status}: ${body.error ?? "error"}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => globalThis.fetch(...args),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await resp.json().catch(() => ({}));
    if (!resp.ok) throw new ApiError(resp.status, payload);
    return payload as T;
  }

  createSession(templateId = "two_option_cost_comparison"): Promise<SessionCreated> {
    return this.post("/v1/sessions", { template_id: templateId, backend: "scripted" });
  }

  sendMessage(sessionId: string, text: string): Promise<MessageReply> {
    return this.post(`/v1/sessions/${sessionId}/messages`, { text });
  }

  simulate(sessionId: string, opts: { seed?: number; sample_count?: number } = {}): Promise<Report> {
    return this.post(`/v1/sessions/${sessionId}/simulate`, opts);
  }

  whatif(
    sessionId: string,
    overrides: Record<string, number>,
    opts: { seed?: number; sample_count?: number } = {},
  ): Promise<Report> {
    return this.post(`/v1/sessions/${sessionId}/whatif`, { overrides, ...opts });
  }

  async feedback(sessionId: string, text: string, rating?: number): Promise<void> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/sessions/${sessionId}/feedback`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(rating === undefined ? { text } : { text, rating }),
    });
    if (!resp.ok) throw new ApiError(resp.status, await resp.json().catch(() => ({})));
  }
}
