// Report rendering: recommendation banner, expected-cost table, histograms
// and sensitivity bars. Everything numeric is read straight off the report
// payload; bar geometry is proportional styling, the labels are the data.

import type { Report } from "../api.js";
import { fmtAmount, fmtCount, fmtPercent, fmtProb } from "../format.js";

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

export function renderReport(container: HTMLElement, report: Report, label: string): void {
  container.innerHTML = "";

  const banner = el("div", "banner");
  banner.id = "banner";
  banner.dataset.recommendation = report.recommendation;
  banner.append(
    el("span", "banner-verdict", `Recommended: ${report.recommendation}`),
    el("span", "banner-detail",
       `P(best) ${fmtProb(report.best_probability[report.recommendation] ?? 0)} · ${label}`),
  );
  container.append(banner);

  container.append(renderExpectedTable(report));
  container.append(renderHistograms(report));
  container.append(renderSensitivity(report));

  const meta = el("p", "report-meta");
  meta.append(`seed ${fmtCount(report.seed)}, ${fmtCount(report.sample_count)} scenarios`);
  container.append(meta);
}

function renderExpectedTable(report: Report): HTMLElement {
  const wrap = el("div", "expected");
  wrap.append(el("h3", undefined, "Expected cost"));
  const table = el("table", "expected-table");
  const head = el("tr");
  for (const title of ["alternative", "expected", "stddev", "P(best)"]) {
    head.append(el("th", undefined, title));
  }
  table.append(head);
  for (const name of Object.keys(report.expected)) {
    const row = el("tr");
    if (name === report.recommendation) row.className = "winner";
    row.append(
      el("td", undefined, name),
      el("td", "num", fmtAmount(report.expected[name])),
      el("td", "num", fmtAmount(report.stddev[name])),
      el("td", "num", fmtProb(report.best_probability[name] ?? 0)),
    );
    table.append(row);
  }
  wrap.append(table);
  return wrap;
}

function renderHistograms(report: Report): HTMLElement {
  const wrap = el("div", "histograms");
  wrap.append(el("h3", undefined, "Outcome distribution"));
  for (const [name, stats] of Object.entries(report.stats)) {
    const block = el("div", "histogram");
    block.dataset.alternative = name;
    block.append(el("div", "histogram-title", name));
    const bars = el("div", "histogram-bars");
    const peak = Math.max(...stats.histogram.map((b) => b.count), 1);
    for (const bin of stats.histogram) {
      const bar = el("div", "bar");
      bar.style.height = `${Math.round((100 * bin.count) / peak)}%`;
      bar.title = `${fmtCount(bin.count)} scenarios in ${fmtAmount(bin.lo)} to ${fmtAmount(bin.hi)}`;
      bars.append(bar);
    }
    block.append(bars);
    const axis = el("div", "histogram-axis");
    axis.append(el("span", undefined, fmtAmount(stats.min)),
                el("span", undefined, fmtAmount(stats.percentiles["p50"])),
                el("span", undefined, fmtAmount(stats.max)));
    block.append(axis);
    wrap.append(block);
  }
  return wrap;
}

function renderSensitivity(report: Report): HTMLElement {
  const wrap = el("div", "sensitivity");
  wrap.append(el("h3", undefined, "What drives the uncertainty"));
  for (const [alt, row] of Object.entries(report.sensitivity)) {
    const varying = Object.entries(row).filter(([, frac]) => frac > 0)
      .sort((a, b) => b[1] - a[1]);
    const block = el("div", "sensitivity-block");
    block.append(el("div", "sensitivity-title", alt));
    if (varying.length === 0) {
      block.append(el("div", "sensitivity-none", "all inputs fixed"));
    }
    for (const [param, frac] of varying) {
      const line = el("div", "sens-row");
      line.append(el("span", "sens-label", param));
      const track = el("div", "sens-track");
      const bar = el("div", "sens-bar");
      bar.style.width = `${Math.round(100 * frac)}%`;
      track.append(bar);
      line.append(track);
      line.append(el("span", "sens-value num", fmtPercent(frac)));
      block.append(line);
    }
    wrap.append(block);
  }
  return wrap;
}
