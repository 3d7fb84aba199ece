// The report view never displays a number it did not receive from the API:
// every numeric token rendered into the DOM must be one of the defined
// renderings of some number present in the /simulate payload.

import { beforeEach, describe, expect, it } from "vitest";

import { createApp } from "../src/app.js";
import { allRenderings } from "../src/format.js";
import { FakeServer, loadReportFixture, messageReply, sessionCreated } from "./helpers.js";

function collectNumbers(value: unknown, out: Set<number>): void {
  if (typeof value === "number") {
    out.add(value);
  } else if (Array.isArray(value)) {
    for (const v of value) collectNumbers(v, out);
  } else if (value && typeof value === "object") {
    for (const v of Object.values(value)) collectNumbers(v, out);
  }
}

// Numeric tokens as a reader would see them: digits with optional grouping
// commas, decimals, and an optional trailing percent sign.
const NUMBER_TOKEN = /-?\d[\d,]*(?:\.\d+)?%?/g;

describe("rendered numbers are a subset of the payload", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app") as HTMLElement;
  });

  it("every numeric token in the report panel comes from the payload", async () => {
    const report = await loadReportFixture();
    const server = new FakeServer();
    server.on("POST", /\/v1\/sessions$/, () => sessionCreated());
    server.on("POST", /\/messages$/, () => messageReply("ready_to_simulate", {}, []));
    server.on("POST", /\/simulate$/, () => ({ status: 200, body: report }));

    const app = createApp(root, server.client());
    await app.start();
    await app.sendMessage("fill everything");
    await app.simulate();

    const payloadNumbers = new Set<number>();
    collectNumbers(report, payloadNumbers);
    const legal = new Set<string>();
    for (const n of payloadNumbers) {
      for (const rendering of allRenderings(n)) {
        legal.add(rendering);
        legal.add(rendering.replace(/^-/, "")); // abs renderings of negatives
      }
    }

    const panel = root.querySelector("#report-panel") as HTMLElement;
    // walk individual text nodes: concatenated textContent would glue
    // neighboring cells into numbers nobody rendered
    const walker = document.createTreeWalker(panel, NodeFilter.SHOW_TEXT);
    const tokens: string[] = [];
    while (walker.nextNode()) {
      for (const raw of (walker.currentNode.textContent ?? "").match(NUMBER_TOKEN) ?? []) {
        tokens.push(raw.replace(/[,.]+$/, "")); // sentence punctuation is not a digit
      }
    }
    expect(tokens.length).toBeGreaterThan(10); // the panel is actually numeric
    for (const token of tokens) {
      expect(legal.has(token), `token ${token} not derived from the payload`).toBe(true);
    }

    // histogram tooltips are numeric surface too
    for (const bar of panel.querySelectorAll(".histogram-bars .bar")) {
      const title = (bar as HTMLElement).title;
      for (const token of title.match(NUMBER_TOKEN) ?? []) {
        expect(legal.has(token), `tooltip token ${token} not from payload`).toBe(true);
      }
    }
  });

  it("banner carries the recommendation from the payload", async () => {
    const report = await loadReportFixture();
    const server = new FakeServer();
    server.on("POST", /\/v1\/sessions$/, () => sessionCreated());
    server.on("POST", /\/messages$/, () => messageReply("ready_to_simulate", {}, []));
    server.on("POST", /\/simulate$/, () => ({ status: 200, body: report }));

    const app = createApp(root, server.client());
    await app.start();
    await app.sendMessage("fill everything");
    await app.simulate();

    const banner = root.querySelector("#banner") as HTMLElement;
    expect(banner.dataset.recommendation).toBe(report.recommendation);
    expect(banner.textContent).toContain(`Recommended: ${report.recommendation}`);
  });

  it("whatif sliders are bounded by each distribution's support", async () => {
    const report = await loadReportFixture();
    const server = new FakeServer();
    server.on("POST", /\/v1\/sessions$/, () => sessionCreated());
    server.on("POST", /\/messages$/, () => messageReply("ready_to_simulate", {}, []));
    server.on("POST", /\/simulate$/, () => ({ status: 200, body: report }));

    const app = createApp(root, server.client());
    await app.start();
    await app.sendMessage("fill everything");
    await app.simulate();

    const sliders = [...root.querySelectorAll<HTMLInputElement>("#whatif-panel input[type=range]")];
    expect(sliders.length).toBeGreaterThan(0);
    const supports: Record<string, [number, number]> = {};
    for (const params of Object.values(report.parameters)) {
      for (const [name, info] of Object.entries(params)) {
        if (info.support[0] < info.support[1]) supports[name] = info.support;
      }
    }
    for (const slider of sliders) {
      const param = (slider.parentElement as HTMLElement).dataset.param!;
      expect(supports, `slider for unexpected param ${param}`).toHaveProperty(param);
      expect(Number(slider.min)).toBe(supports[param][0]);
      expect(Number(slider.max)).toBe(supports[param][1]);
    }
    // only uncertain parameters get sliders
    expect(sliders.length).toBe(Object.keys(supports).length);
  });
});
