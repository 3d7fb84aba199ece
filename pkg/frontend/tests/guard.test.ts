// Simulate-guard parity: the button is enabled exactly when the latest API
// response says the phase is ready_to_simulate, and a 409 from /simulate
// renders the missing slots inline.

import { beforeEach, describe, expect, it } from "vitest";

import { createApp } from "../src/app.js";
import { FakeServer, flush, loadReportFixture, messageReply, sessionCreated } from "./helpers.js";

function simulateButton(root: HTMLElement): HTMLButtonElement {
  return root.querySelector("#simulate-btn") as HTMLButtonElement;
}

describe("simulate guard", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app") as HTMLElement;
  });

  it("is disabled until the API reports ready_to_simulate, then enabled", async () => {
    const server = new FakeServer();
    server.on("POST", /\/v1\/sessions$/, () => sessionCreated());
    let call = 0;
    server.on("POST", /\/messages$/, () => {
      call += 1;
      return call === 1
        ? messageReply("collecting", { annual_miles: 15000 }, ["monthly_budget"])
        : messageReply("ready_to_simulate", { annual_miles: 15000, monthly_budget: 400 }, []);
    });

    const app = createApp(root, server.client());
    await app.start();
    expect(simulateButton(root).disabled).toBe(true); // collecting

    await app.sendMessage("I drive 15,000 miles");
    expect(app.store.get().phase).toBe("collecting");
    expect(simulateButton(root).disabled).toBe(true);

    await app.sendMessage("$400 a month");
    expect(app.store.get().phase).toBe("ready_to_simulate");
    expect(simulateButton(root).disabled).toBe(false);

    // parity both ways: enablement equals (phase == ready_to_simulate)
    for (const state of [app.store.get()]) {
      expect(!simulateButton(root).disabled).toBe(state.phase === "ready_to_simulate");
    }
  });

  it("renders the missing-slot list inline on a 409", async () => {
    const server = new FakeServer();
    server.on("POST", /\/v1\/sessions$/, () => sessionCreated());
    server.on("POST", /\/simulate$/, () => ({
      status: 409,
      body: { error: "incomplete_slots", message: "missing", missing: ["lease_term_months", "allowance"] },
    }));

    const app = createApp(root, server.client());
    await app.start();
    await app.simulate();

    const note = root.querySelector(".guard-note");
    expect(note).not.toBeNull();
    expect(note!.textContent).toContain("lease term months");
    expect(note!.textContent).toContain("allowance");
  });

  it("checklist mirrors filled and pending slots from the API", async () => {
    const server = new FakeServer();
    server.on("POST", /\/v1\/sessions$/, () => sessionCreated());
    server.on("POST", /\/messages$/, () =>
      messageReply("collecting", { annual_miles: 15000 }, ["monthly_budget", "down_payment"]));

    const app = createApp(root, server.client());
    await app.start();
    await app.sendMessage("I drive 15,000 miles");

    const filled = [...root.querySelectorAll("li.slot.filled")].map((n) => (n as HTMLElement).dataset.slot);
    const pending = [...root.querySelectorAll("li.slot.pending")].map((n) => (n as HTMLElement).dataset.slot);
    expect(filled).toEqual(["annual_miles"]);
    expect(pending).toEqual(["monthly_budget", "down_payment"]);
  });

  it("disables the button again after simulation and keeps whatif isolated", async () => {
    const report = await loadReportFixture();
    const server = new FakeServer();
    server.on("POST", /\/v1\/sessions$/, () => sessionCreated());
    server.on("POST", /\/messages$/, () => messageReply("ready_to_simulate", { annual_miles: 15000 }, []));
    server.on("POST", /\/simulate$/, () => ({ status: 200, body: report }));
    server.on("POST", /\/whatif$/, (body) => {
      const changed = structuredClone(report);
      changed.expected.lease = 99_999;
      expect((body as { overrides: Record<string, number> }).overrides.annual_miles).toBe(20_000);
      return { status: 200, body: changed };
    });

    const app = createApp(root, server.client());
    await app.start();
    await app.sendMessage("everything at once");
    expect(simulateButton(root).disabled).toBe(false);

    await app.simulate();
    await flush();
    expect(app.store.get().phase).toBe("simulated");
    expect(simulateButton(root).disabled).toBe(true); // enabled ONLY when ready

    await app.applyWhatif("annual_miles", 20_000);
    expect(app.store.get().whatifReport!.expected.lease).toBe(99_999);
    expect(app.store.get().canonicalReport!.expected.lease).toBe(report.expected.lease);
    expect(root.querySelector("#report-label")!.textContent).toContain("what-if");

    app.resetWhatif();
    expect(app.store.get().whatifReport).toBeNull();
    expect(root.querySelector("#report-label")!.textContent).toBe("");
  });

  it("offers retry on network failure", async () => {
    let up = false;
    const { ApiClient } = await import("../src/api.js");
    const client = new ApiClient("http://fake.test", async () => {
      if (!up) throw new TypeError("fetch failed");
      return new Response(JSON.stringify(sessionCreated().body), {
        status: 201,
        headers: { "content-type": "application/json" },
      });
    });

    const app = createApp(root, client);
    await app.start();
    expect(app.store.get().error).toBe("Could not reach the server.");
    expect(app.store.get().sessionId).toBeNull();
    const retry = root.querySelector("#retry-btn") as HTMLButtonElement;
    expect(retry.hidden).toBe(false);

    up = true;
    retry.click();
    await flush();
    await flush();
    expect(app.store.get().error).toBeNull();
    expect(app.store.get().sessionId).not.toBeNull();
  });
});
