// A scriptable fake transport for unit tests: routes are matched by method
// and path suffix, and every handler receives the parsed request body.

import type { Report } from "../src/api.js";
import { ApiClient } from "../src/api.js";

type Handler = (body: unknown) => { status: number; body: unknown };

export class FakeServer {
  private routes: Array<{ method: string; pattern: RegExp; handler: Handler }> = [];
  readonly calls: Array<{ method: string; path: string; body: unknown }> = [];

  on(method: string, pattern: RegExp, handler: Handler): void {
    this.routes.push({ method, pattern, handler });
  }

  client(): ApiClient {
    const fetchImpl = async (input: string, init?: RequestInit): Promise<Response> => {
      const method = init?.method ?? "GET";
      const path = new URL(input).pathname;
      const body = init?.body ? JSON.parse(init.body as string) : undefined;
      this.calls.push({ method, path, body });
      for (const route of this.routes) {
        if (route.method === method && route.pattern.test(path)) {
          const result = route.handler(body);
          return new Response(JSON.stringify(result.body), {
            status: result.status,
            headers: { "content-type": "application/json" },
          });
        }
      }
      return new Response(JSON.stringify({ error: "unknown_route", message: path }), { status: 404 });
    };
    return new ApiClient("http://fake.test", fetchImpl);
  }
}

export function sessionCreated(id = "abc123deadbeef00") {
  return {
    status: 201,
    body: { session_id: id, first_question: "What are you deciding?", template_id: "two_option_cost_comparison" },
  };
}

export function messageReply(
  phase: "collecting" | "ready_to_simulate",
  filled: Record<string, number>,
  pending: string[],
) {
  const slots: Record<string, { value: number; raw_text: string }> = {};
  for (const [k, v] of Object.entries(filled)) slots[k] = { value: v, raw_text: String(v) };
  return {
    status: 200,
    body: { agent_reply: "noted.", phase, filled_slots: slots, pending_slots: pending },
  };
}

export async function loadReportFixture(): Promise<Report> {
  const { readFile } = await import("node:fs/promises");
  const { join } = await import("node:path");
  // jsdom rewrites import.meta.url to http://, so resolve from the test cwd
  const path = join(process.cwd(), "tests", "fixtures", "report.json");
  return JSON.parse(await readFile(path, "utf-8")) as Report;
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
