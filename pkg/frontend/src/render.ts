/** DOM renderers for the risk view: bars, length band, optimizer panel. */

import type { FieldIssue, OptimizeResponse } from "./api.js";
import { formatMonths, formatPercent, formatValue, humanize, toPercent } from "./format.js";
import { CLASS_LABELS, CLASS_NAMES, groupRisks } from "./groups.js";

function barRow(label: string, probability: number): HTMLElement {
  const row = document.createElement("div");
  row.className = "bar-row";
  row.dataset.probability = String(probability);
  const name = document.createElement("span");
  name.className = "bar-label";
  name.textContent = label;
  const track = document.createElement("div");
  track.className = "bar-track";
  const fill = document.createElement("div");
  fill.className = "bar-fill";
  fill.style.width = `${Math.min(100, toPercent(probability))}%`;
  track.appendChild(fill);
  const value = document.createElement("span");
  value.className = "bar-value";
  value.textContent = formatPercent(probability);
  row.append(name, track, value);
  return row;
}

export function renderClassBars(container: HTMLElement, probabilities: Record<string, number>): void {
  container.replaceChildren();
  for (const name of CLASS_NAMES) {
    const row = barRow(CLASS_LABELS[name] ?? name, probabilities[name] ?? 0);
    row.dataset.class = name;
    container.appendChild(row);
  }
}

export function renderGroupBars(container: HTMLElement, probabilities: Record<string, number>): void {
  container.replaceChildren();
  for (const group of groupRisks(probabilities)) {
    const row = barRow(group.label, group.value);
    row.dataset.group = group.name;
    container.appendChild(row);
  }
}

export function renderLength(container: HTMLElement, months: number, maeMonths: number | null): void {
  container.replaceChildren();
  container.dataset.months = String(months);
  const value = document.createElement("span");
  value.className = "months";
  value.textContent = `${formatMonths(months)} months`;
  container.appendChild(value);
  if (maeMonths !== null) {
    const band = document.createElement("span");
    band.className = "band";
    band.textContent = ` ± ${formatMonths(maeMonths)} months`;
    container.appendChild(band);
  }
}

export function renderPredictedClass(container: HTMLElement, className: string): void {
  container.dataset.class = className;
  container.textContent = CLASS_LABELS[className] ?? className;
}

export function showBanner(banner: HTMLElement, message: string): void {
  banner.hidden = false;
  banner.textContent = message;
}

export function hideBanner(banner: HTMLElement): void {
  banner.hidden = true;
  banner.textContent = "";
}

export function clearFieldErrors(form: HTMLElement): void {
  form.querySelectorAll<HTMLElement>(".field-error").forEach((el) => {
    el.textContent = "";
  });
}

/**
 * Place each issue next to its control. Returns the number of issues that
 * found a control, so callers can surface leftovers elsewhere.
 */
export function renderFieldErrors(form: HTMLElement, detail: FieldIssue[]): number {
  let placed = 0;
  for (const issue of detail) {
    const field = issue.loc.length > 1 ? String(issue.loc[1]) : "";
    if (!/^[a-z0-9_]+$/.test(field)) continue;
    const target = form.querySelector<HTMLElement>(`#error-${field}`);
    if (target) {
      target.textContent = issue.msg;
      placed += 1;
    }
  }
  return placed;
}

/** Read-only best-case panel: achieved probability, profile, constraints. */
export function renderOptimize(container: HTMLElement, payload: OptimizeResponse): void {
  container.replaceChildren();
  const summary = document.createElement("p");
  summary.className = "optimize-summary";
  summary.dataset.reachable = String(payload.target_reachable);
  const achieved = payload.probabilities[payload.target_class] ?? 0;
  summary.textContent = payload.target_reachable
    ? `best ${humanize(payload.target_class)} probability ${formatPercent(achieved)} `
      + `(threshold ${formatPercent(payload.min_probability)} met)`
    : `best ${humanize(payload.target_class)} probability ${formatPercent(achieved)} `
      + `(threshold ${formatPercent(payload.min_probability)} not reachable)`;
  container.appendChild(summary);

  const table = document.createElement("dl");
  table.className = "profile";
  for (const [feature, value] of Object.entries(payload.profile)) {
    const dt = document.createElement("dt");
    dt.textContent = humanize(feature);
    const dd = document.createElement("dd");
    dd.dataset.feature = feature;
    dd.dataset.value = String(value);
    dd.textContent = formatValue(value);
    table.append(dt, dd);
  }
  container.appendChild(table);

  const constraints = document.createElement("ul");
  constraints.className = "constraints";
  for (const constraint of payload.constraints) {
    const item = document.createElement("li");
    item.dataset.feature = constraint.feature;
    item.dataset.relation = constraint.relation;
    item.textContent =
      `${humanize(constraint.feature)} ${constraint.relation} ${formatValue(constraint.boundary)}`;
    constraints.appendChild(item);
  }
  container.appendChild(constraints);
}
