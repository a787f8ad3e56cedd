/**
 * Sweep line chart rendered as plain SVG. Point heights are the raw sweep
 * probabilities on a fixed 0..100 percent axis; no smoothing or rescaling,
 * so every rendered point is traceable to one payload entry.
 */

import type { SweepResponse } from "./api.js";
import { toPercent } from "./format.js";

export const CHART_WIDTH = 440;
export const CHART_HEIGHT = 220;
export const MARGIN = { left: 44, right: 12, top: 12, bottom: 28 } as const;

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ChartPoint {
  value: number | string;
  probability: number;
  percent: number;
  x: number;
  y: number;
}

function innerWidth(): number {
  return CHART_WIDTH - MARGIN.left - MARGIN.right;
}

function innerHeight(): number {
  return CHART_HEIGHT - MARGIN.top - MARGIN.bottom;
}

function xScale(values: (number | string)[]): (value: number | string, index: number) => number {
  const numeric = values.every((v) => typeof v === "number");
  if (numeric && values.length > 0) {
    const nums = values as number[];
    const lo = Math.min(...nums);
    const hi = Math.max(...nums);
    const span = hi - lo || 1;
    return (value) => MARGIN.left + ((Number(value) - lo) / span) * innerWidth();
  }
  const step = values.length > 1 ? innerWidth() / (values.length - 1) : 0;
  return (_value, index) =>
    values.length > 1 ? MARGIN.left + index * step : MARGIN.left + innerWidth() / 2;
}

function yFor(percent: number): number {
  return MARGIN.top + (1 - percent / 100) * innerHeight();
}

/** Map one sweep payload to chart points for the given class column. */
export function chartPoints(sweep: SweepResponse, classIndex: number): ChartPoint[] {
  const scale = xScale(sweep.values);
  return sweep.values.map((value, i) => {
    const probability = sweep.probabilities[i][classIndex];
    const percent = toPercent(probability);
    return { value, probability, percent, x: scale(value, i), y: yFor(percent) };
  });
}

function svgElement(name: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node as SVGElement;
}

function axisFrame(seriesLabel: string, featureLabel: string): SVGElement[] {
  const bottom = MARGIN.top + innerHeight();
  const parts: SVGElement[] = [
    svgElement("line", {
      class: "axis", x1: String(MARGIN.left), y1: String(MARGIN.top),
      x2: String(MARGIN.left), y2: String(bottom),
    }),
    svgElement("line", {
      class: "axis", x1: String(MARGIN.left), y1: String(bottom),
      x2: String(MARGIN.left + innerWidth()), y2: String(bottom),
    }),
  ];
  for (const tick of [0, 50, 100]) {
    const label = svgElement("text", {
      class: "tick", x: String(MARGIN.left - 6), y: String(yFor(tick) + 4),
      "text-anchor": "end",
    });
    label.textContent = String(tick);
    parts.push(label);
  }
  const yLabel = svgElement("text", {
    class: "axis-label", x: String(MARGIN.left), y: String(MARGIN.top - 2),
  });
  yLabel.textContent = `${seriesLabel} %`;
  parts.push(yLabel);
  const xLabel = svgElement("text", {
    class: "axis-label", x: String(MARGIN.left + innerWidth()),
    y: String(bottom + 20), "text-anchor": "end",
  });
  xLabel.textContent = featureLabel;
  parts.push(xLabel);
  return parts;
}

/** Redraw the chart from a sweep payload, marking the current value. */
export function renderSweepChart(
  svg: SVGElement,
  sweep: SweepResponse,
  classIndex: number,
  seriesLabel: string,
  currentValue: number | string | null,
): void {
  svg.replaceChildren();
  svg.setAttribute("viewBox", `0 0 ${CHART_WIDTH} ${CHART_HEIGHT}`);
  svg.setAttribute("width", String(CHART_WIDTH));
  svg.setAttribute("height", String(CHART_HEIGHT));
  for (const part of axisFrame(seriesLabel, sweep.feature.replace(/_/g, " "))) {
    svg.appendChild(part);
  }
  const points = chartPoints(sweep, classIndex);
  if (points.length === 0) return;

  const numeric = sweep.values.every((v) => typeof v === "number");
  if (numeric && typeof currentValue === "number") {
    const scale = xScale(sweep.values);
    const x = scale(currentValue, 0);
    svg.appendChild(svgElement("line", {
      class: "marker", x1: String(x), y1: String(MARGIN.top),
      x2: String(x), y2: String(MARGIN.top + innerHeight()),
    }));
  }
  svg.appendChild(svgElement("polyline", {
    class: "curve",
    points: points.map((p) => `${p.x},${p.y}`).join(" "),
    fill: "none",
  }));
  for (const point of points) {
    const circle = svgElement("circle", {
      class: "point", cx: String(point.x), cy: String(point.y), r: "3",
    });
    circle.dataset.value = String(point.value);
    circle.dataset.probability = String(point.probability);
    circle.dataset.percent = String(point.percent);
    if (!numeric && currentValue !== null && String(point.value) === String(currentValue)) {
      circle.dataset.current = "true";
      circle.setAttribute("r", "5");
    }
    svg.appendChild(circle);
  }
}

/** Empty the chart, leaving a short explanation in place of the curve. */
export function clearChart(svg: SVGElement, message: string): void {
  svg.replaceChildren();
  const note = svgElement("text", {
    class: "chart-note", x: String(CHART_WIDTH / 2), y: String(CHART_HEIGHT / 2),
    "text-anchor": "middle",
  });
  note.textContent = message;
  svg.appendChild(note);
}
