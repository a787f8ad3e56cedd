/**
 * Patient form generated from the service's feature descriptors.
 *
 * Optional fields carry an explicit "unknown" state that serializes to
 * null; serialization and applyValues are exact inverses so a request body
 * round-trips back into identical form state, unknown markers included.
 */

import type { FeatureDescriptor, FieldIssue } from "./api.js";
import { humanize } from "./format.js";

/** Fields the service accepts as null. */
export const OPTIONAL_FIELDS: ReadonlySet<string> = new Set([
  "height_cm",
  "weight_kg",
  "comorbidity_count",
  "age_at_diagnosis",
  "concurrent_mtx",
  "baseline_dlqi",
  "baseline_pasi",
  "treatment_length_months",
]);

/** Count fields that only accept whole numbers. */
export const INTEGER_FIELDS: ReadonlySet<string> = new Set(["comorbidity_count"]);

export type FormValue = number | string | boolean | null;
export type FormValues = Record<string, FormValue>;

/** Retrospective classifiers use treatment length as a predictor. */
export function isLengthRequired(mode: string): boolean {
  return mode === "retrospective";
}

export function isFieldRequired(name: string, lengthRequired: boolean): boolean {
  if (!OPTIONAL_FIELDS.has(name)) {
    return true;
  }
  return name === "treatment_length_months" && lengthRequired;
}

function numericDefault(descriptor: FeatureDescriptor): string {
  const lo = descriptor.lo ?? 0;
  const hi = descriptor.hi ?? 1;
  const mid = (lo + hi) / 2;
  return INTEGER_FIELDS.has(descriptor.name) ? String(Math.round(mid)) : mid.toFixed(1);
}

function appendOption(select: HTMLSelectElement, value: string, label: string): void {
  const option = document.createElement("option");
  option.value = value;
  option.textContent = label;
  select.appendChild(option);
}

/** Create one labeled control per descriptor inside the form element. */
export function buildForm(
  form: HTMLElement,
  features: FeatureDescriptor[],
  lengthRequired: boolean,
): void {
  form.replaceChildren();
  for (const descriptor of features) {
    const required = isFieldRequired(descriptor.name, lengthRequired);
    const field = document.createElement("div");
    field.className = "field";
    field.dataset.field = descriptor.name;

    const label = document.createElement("label");
    label.htmlFor = `field-${descriptor.name}`;
    label.textContent = humanize(descriptor.name);
    field.appendChild(label);

    if (descriptor.kind === "numeric") {
      const input = document.createElement("input");
      input.type = "number";
      input.id = `field-${descriptor.name}`;
      if (descriptor.lo !== undefined) input.min = String(descriptor.lo);
      if (descriptor.hi !== undefined) input.max = String(descriptor.hi);
      input.step = INTEGER_FIELDS.has(descriptor.name) ? "1" : "any";
      if (required) {
        input.value = numericDefault(descriptor);
      } else {
        input.disabled = true;
      }
      field.appendChild(input);
      if (!required) {
        const unknownLabel = document.createElement("label");
        unknownLabel.className = "unknown";
        const unknown = document.createElement("input");
        unknown.type = "checkbox";
        unknown.id = `unknown-${descriptor.name}`;
        unknown.checked = true;
        unknown.addEventListener("change", () => {
          input.disabled = unknown.checked;
          if (unknown.checked) input.value = "";
          else if (input.value === "") input.value = numericDefault(descriptor);
        });
        unknownLabel.appendChild(unknown);
        unknownLabel.appendChild(document.createTextNode(" unknown"));
        field.appendChild(unknownLabel);
      }
    } else if (descriptor.kind === "categorical") {
      const select = document.createElement("select");
      select.id = `field-${descriptor.name}`;
      for (const level of descriptor.levels ?? []) {
        appendOption(select, level, level);
      }
      field.appendChild(select);
    } else {
      const select = document.createElement("select");
      select.id = `field-${descriptor.name}`;
      if (!required) {
        appendOption(select, "unknown", "unknown");
      }
      appendOption(select, "false", "no");
      appendOption(select, "true", "yes");
      field.appendChild(select);
    }

    const error = document.createElement("span");
    error.className = "field-error";
    error.id = `error-${descriptor.name}`;
    field.appendChild(error);
    form.appendChild(field);
  }
}

function controlFor(form: HTMLElement, name: string): HTMLInputElement | HTMLSelectElement | null {
  return form.querySelector<HTMLInputElement | HTMLSelectElement>(`#field-${name}`);
}

function unknownBoxFor(form: HTMLElement, name: string): HTMLInputElement | null {
  return form.querySelector<HTMLInputElement>(`#unknown-${name}`);
}

/** Read the form into a request body; "unknown" becomes null. */
export function serializeForm(
  form: HTMLElement,
  features: FeatureDescriptor[],
  lengthRequired: boolean,
): FormValues {
  const values: FormValues = {};
  for (const descriptor of features) {
    const control = controlFor(form, descriptor.name);
    if (!control) continue;
    if (descriptor.kind === "numeric") {
      const unknown = unknownBoxFor(form, descriptor.name);
      if ((unknown && unknown.checked) || control.value === "") {
        values[descriptor.name] = null;
      } else {
        const parsed = Number(control.value);
        values[descriptor.name] =
          INTEGER_FIELDS.has(descriptor.name) && Number.isInteger(parsed)
            ? Math.trunc(parsed)
            : parsed;
      }
    } else if (descriptor.kind === "categorical") {
      values[descriptor.name] = control.value;
    } else {
      values[descriptor.name] = control.value === "unknown" ? null : control.value === "true";
    }
  }
  void lengthRequired;
  return values;
}

/**
 * Write a value map back into the controls. Accepts both form-shaped
 * payloads (booleans, nulls) and optimizer profiles (booleans as 0/1).
 */
export function applyValues(
  form: HTMLElement,
  values: Record<string, number | string | boolean | null | undefined>,
  features: FeatureDescriptor[],
): void {
  for (const descriptor of features) {
    if (!(descriptor.name in values)) continue;
    const control = controlFor(form, descriptor.name);
    if (!control) continue;
    const value = values[descriptor.name];
    if (descriptor.kind === "numeric") {
      const unknown = unknownBoxFor(form, descriptor.name);
      if (value === null || value === undefined) {
        if (unknown) unknown.checked = true;
        control.value = "";
        (control as HTMLInputElement).disabled = true;
      } else {
        if (unknown) unknown.checked = false;
        (control as HTMLInputElement).disabled = false;
        control.value = String(value);
      }
    } else if (descriptor.kind === "categorical") {
      control.value = String(value);
    } else if (value === null || value === undefined) {
      control.value = "unknown";
    } else {
      control.value = value === true || value === 1 || value === "true" ? "true" : "false";
    }
  }
}

/** Client-side checks mirroring the patient-record invariants. */
export function validateValues(
  values: FormValues,
  features: FeatureDescriptor[],
  lengthRequired: boolean,
): FieldIssue[] {
  const issues: FieldIssue[] = [];
  const flag = (name: string, msg: string) => issues.push({ loc: ["body", name], msg });
  for (const descriptor of features) {
    const value = values[descriptor.name];
    const required = isFieldRequired(descriptor.name, lengthRequired);
    if (value === null || value === undefined) {
      if (required) flag(descriptor.name, "value required");
      continue;
    }
    if (descriptor.kind !== "numeric") continue;
    const numeric = value as number;
    if (Number.isNaN(numeric)) {
      flag(descriptor.name, "enter a number");
      continue;
    }
    if (descriptor.lo !== undefined && descriptor.hi !== undefined
        && (numeric < descriptor.lo || numeric > descriptor.hi)) {
      flag(descriptor.name, `must be between ${descriptor.lo} and ${descriptor.hi}`);
    }
    if (INTEGER_FIELDS.has(descriptor.name) && !Number.isInteger(numeric)) {
      flag(descriptor.name, "whole number required");
    }
  }
  const age = values["age_years"];
  const onset = values["age_at_diagnosis"];
  if (typeof age === "number" && typeof onset === "number" && onset > age) {
    flag("age_at_diagnosis", "cannot exceed current age");
  }
  return issues;
}
