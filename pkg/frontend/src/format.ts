/**
 * Display formatting. The percent scale factor is the only arithmetic the
 * UI applies to service numbers; everything else is string presentation.
 */

export function toPercent(probability: number): number {
  return 100 * probability;
}

export function formatPercent(probability: number): string {
  return `${toPercent(probability).toFixed(1)}%`;
}

export function formatMonths(months: number): string {
  return months.toFixed(1);
}

/** Compact text for profile values and constraint boundaries. */
export function formatValue(value: number | string | readonly (number | string)[]): string {
  if (Array.isArray(value)) {
    return value.map((item) => formatValue(item)).join(" / ");
  }
  if (typeof value === "string") {
    return value;
  }
  return Number.isInteger(value) ? String(value) : (value as number).toFixed(1);
}

export function humanize(name: string): string {
  return name.replace(/_/g, " ");
}
