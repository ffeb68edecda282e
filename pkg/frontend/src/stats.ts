/**
 * Accuracy donuts and labeling-progress bars.
 *
 * Pure renders of GET /stats responses: every number on screen comes out of
 * the payload. Committed stats and previews render into separate elements so
 * previewing a candidate ruleset never touches the committed charts; a
 * stale-generation banner appears when the payload is older than the
 * generation the caller already knows about.
 */

import type { ClassAccuracyJson, StatsJson } from "./api.js";

export const STATS_STYLES = `
.stats-view.preview { border: 1px dashed #f9ab00; background: #fef7e0; }
.stats-view .stale-banner { background: #fce8e6; color: #c5221f; }
.progress-bar { background: #e8eaed; height: 10px; }
.progress-bar > span { display: block; height: 10px; background: #1a73e8; }
`;

export interface RenderStatsOptions {
  /** Highest rule generation the caller has seen; older payloads get a banner. */
  knownGeneration?: number;
  /** Render in the distinct preview style (candidate ruleset, not committed). */
  preview?: boolean;
}

function donut(label: string, acc: ClassAccuracyJson | { accuracy: number }): HTMLElement {
  const wrap = document.createElement("figure");
  wrap.className = "donut";
  wrap.dataset.label = label;
  const pct = Math.round(acc.accuracy * 100);
  wrap.dataset.percent = String(pct);

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", "0 0 42 42");
  const ring = document.createElementNS("http://www.w3.org/2000/svg", "circle");
  ring.setAttribute("class", "donut-ring");
  ring.setAttribute("cx", "21");
  ring.setAttribute("cy", "21");
  ring.setAttribute("r", "15.915");
  ring.setAttribute("fill", "none");
  ring.setAttribute("stroke", "#e8eaed");
  ring.setAttribute("stroke-width", "6");
  const arc = document.createElementNS("http://www.w3.org/2000/svg", "circle");
  arc.setAttribute("class", "donut-arc");
  arc.setAttribute("cx", "21");
  arc.setAttribute("cy", "21");
  arc.setAttribute("r", "15.915");
  arc.setAttribute("fill", "none");
  arc.setAttribute("stroke", "#1a73e8");
  arc.setAttribute("stroke-width", "6");
  arc.setAttribute("stroke-dasharray", `${pct} ${100 - pct}`);
  arc.setAttribute("stroke-dashoffset", "25");
  svg.appendChild(ring);
  svg.appendChild(arc);
  wrap.appendChild(svg);

  const caption = document.createElement("figcaption");
  caption.textContent = `${label}: ${pct}%`;
  wrap.appendChild(caption);
  return wrap;
}

function progressBar(name: string, count: number, fraction: number): HTMLElement {
  const row = document.createElement("div");
  row.className = "progress-row";
  row.dataset.status = name;
  const label = document.createElement("span");
  label.className = "progress-label";
  label.textContent = `${name}: ${count}`;
  const bar = document.createElement("div");
  bar.className = "progress-bar";
  const fill = document.createElement("span");
  fill.style.width = `${(fraction * 100).toFixed(1)}%`;
  bar.appendChild(fill);
  row.appendChild(label);
  row.appendChild(bar);
  return row;
}

export function renderStats(
  container: HTMLElement,
  stats: StatsJson,
  options: RenderStatsOptions = {},
): HTMLElement {
  const view = document.createElement("section");
  view.className = "stats-view" + (options.preview ? " preview" : "");
  view.dataset.iteration = String(stats.iteration);

  const style = document.createElement("style");
  style.textContent = STATS_STYLES;
  view.appendChild(style);

  const reportGeneration = stats.report?.generation;
  if (
    options.knownGeneration !== undefined &&
    reportGeneration !== undefined &&
    reportGeneration < options.knownGeneration
  ) {
    const banner = document.createElement("p");
    banner.className = "stale-banner";
    banner.textContent =
      `showing results for rule generation ${reportGeneration}; ` +
      `rules are now at generation ${options.knownGeneration}`;
    view.appendChild(banner);
  }

  const donuts = document.createElement("div");
  donuts.className = "donut-row";
  if (stats.report !== null) {
    donuts.appendChild(donut("overall", { accuracy: stats.report.overall }));
    for (const cls of Object.keys(stats.donut).sort()) {
      donuts.appendChild(donut(cls, stats.donut[cls]!));
    }
  } else {
    const empty = document.createElement("p");
    empty.className = "no-report";
    empty.textContent = "no holdout results yet — run auto-label";
    donuts.appendChild(empty);
  }
  view.appendChild(donuts);

  const progress = document.createElement("div");
  progress.className = "progress-view";
  const p = stats.progress;
  for (const status of ["manual", "auto", "ambiguous", "unlabeled"] as const) {
    progress.appendChild(progressBar(status, p[status], p.fractions[status]));
  }
  view.appendChild(progress);

  container.appendChild(view);
  return view;
}
