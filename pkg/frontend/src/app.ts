/**
 * Application wiring: form events to service calls to renderers.
 *
 * Every number on screen comes from a service payload; the app performs no
 * arithmetic beyond percent formatting and the fixed group aggregation.
 * Failed requests never blank the view: the last rendered state stays up
 * behind a dismissable banner.
 */

import {
  ApiError,
  fetchMeta,
  postOptimize,
  postPredict,
  SweepChannel,
} from "./api.js";
import type { Meta, OptimizeResponse, SweepResponse } from "./api.js";
import { clearChart, renderSweepChart } from "./chart.js";
import {
  applyValues,
  buildForm,
  isLengthRequired,
  serializeForm,
  validateValues,
} from "./form.js";
import { humanize } from "./format.js";
import {
  clearFieldErrors,
  hideBanner,
  renderClassBars,
  renderFieldErrors,
  renderGroupBars,
  renderLength,
  renderOptimize,
  renderPredictedClass,
  showBanner,
} from "./render.js";

export const SWEEP_POINTS = 25;
export const OPTIMIZE_POINTS = 10;
const TARGET_CLASS = "continue";

const TEMPLATE = `
<header class="masthead">
  <h1>Biologic therapy risk simulator</h1>
  <p class="subtitle">per-cause discontinuation risk and projected treatment length</p>
</header>
<div id="banner" class="banner" hidden></div>
<main class="columns">
  <section id="form-panel" class="panel">
    <h2>Patient</h2>
    <form id="patient-form" novalidate></form>
  </section>
  <section id="risk-panel" class="panel">
    <h2>Risk</h2>
    <div class="predicted">most likely: <span id="predicted-class"></span></div>
    <div id="class-bars" class="bars"></div>
    <h3>Grouped</h3>
    <div id="group-bars" class="bars"></div>
    <h3>Projected length</h3>
    <div id="length-view" class="length"></div>
  </section>
  <section id="whatif-panel" class="panel">
    <h2>What if</h2>
    <label class="whatif-pick">feature
      <select id="whatif-feature"></select>
    </label>
    <input type="range" id="whatif-slider">
    <div id="whatif-note" class="note"></div>
    <svg id="sweep-chart" role="img"></svg>
  </section>
  <section id="optimize-panel" class="panel">
    <h2>Best case</h2>
    <label>minimum continue probability
      <input type="number" id="optimize-min" min="0" max="1" step="0.05" value="0.9">
    </label>
    <button type="button" id="optimize-run">search</button>
    <div id="optimize-result"></div>
    <button type="button" id="optimize-load" hidden>load into form</button>
  </section>
</main>
`;

export interface App {
  root: HTMLElement;
  meta: Meta;
  /** Resolves once every in-flight request spawned so far has settled. */
  flush(): Promise<void>;
}

export async function initApp(root: HTMLElement): Promise<App> {
  root.innerHTML = TEMPLATE;
  const pick = <T extends Element>(selector: string): T => {
    const node = root.querySelector<T>(selector);
    if (!node) throw new Error(`missing element ${selector}`);
    return node;
  };
  const form = pick<HTMLFormElement>("#patient-form");
  const banner = pick<HTMLElement>("#banner");
  const classBars = pick<HTMLElement>("#class-bars");
  const groupBars = pick<HTMLElement>("#group-bars");
  const lengthView = pick<HTMLElement>("#length-view");
  const predictedClass = pick<HTMLElement>("#predicted-class");
  const featurePick = pick<HTMLSelectElement>("#whatif-feature");
  const slider = pick<HTMLInputElement>("#whatif-slider");
  const note = pick<HTMLElement>("#whatif-note");
  const chart = pick<SVGElement>("#sweep-chart");
  const optimizeMin = pick<HTMLInputElement>("#optimize-min");
  const optimizeRun = pick<HTMLButtonElement>("#optimize-run");
  const optimizeResult = pick<HTMLElement>("#optimize-result");
  const optimizeLoad = pick<HTMLButtonElement>("#optimize-load");

  const meta = await fetchMeta();
  const lengthRequired = isLengthRequired(meta.mode);
  const classIndex = meta.classes.indexOf(TARGET_CLASS);
  const channel = new SweepChannel();
  const inflight = new Set<Promise<void>>();
  let activeFeature = "";
  let lastSweep: SweepResponse | null = null;
  let lastOptimize: OptimizeResponse | null = null;

  buildForm(form, meta.features, lengthRequired);
  form.addEventListener("submit", (event) => event.preventDefault());

  function spawn(job: () => Promise<void>): void {
    const settled = job().catch(() => {
      showBanner(banner, "service unreachable; showing the last results");
    });
    inflight.add(settled);
    void settled.finally(() => inflight.delete(settled));
  }

  async function flush(): Promise<void> {
    while (inflight.size > 0) {
      await Promise.all([...inflight]);
    }
  }

  function currentValue(feature: string): number | string | null {
    const control = form.querySelector<HTMLInputElement | HTMLSelectElement>(`#field-${feature}`);
    if (!control || control.value === "" || control.value === "unknown") return null;
    const descriptor = meta.features.find((f) => f.name === feature);
    return descriptor?.kind === "numeric" ? Number(control.value) : control.value;
  }

  function redrawChart(): void {
    if (lastSweep && lastSweep.feature === activeFeature) {
      renderSweepChart(chart, lastSweep, classIndex, `P(${TARGET_CLASS})`, currentValue(activeFeature));
    }
  }

  async function refreshPrediction(): Promise<void> {
    const values = serializeForm(form, meta.features, lengthRequired);
    clearFieldErrors(form);
    const issues = validateValues(values, meta.features, lengthRequired);
    if (issues.length > 0) {
      renderFieldErrors(form, issues);
      return;
    }
    try {
      const prediction = await postPredict(values);
      hideBanner(banner);
      renderClassBars(classBars, prediction.probabilities);
      renderGroupBars(groupBars, prediction.probabilities);
      renderLength(lengthView, prediction.predicted_length_months, meta.mae_months);
      renderPredictedClass(predictedClass, prediction.predicted_class);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        const placed = renderFieldErrors(form, err.detail);
        if (placed < err.detail.length) showBanner(banner, err.message);
      } else {
        showBanner(banner, "service unreachable; showing the last results");
      }
    }
  }

  async function refreshSweep(): Promise<void> {
    const feature = activeFeature;
    try {
      const sweep = await channel.request(feature, SWEEP_POINTS);
      if (sweep === null) return;
      lastSweep = sweep;
      redrawChart();
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        slider.disabled = true;
        note.textContent = `${humanize(feature)} cannot be swept`;
        clearChart(chart, "no curve for this input");
      } else {
        showBanner(banner, "service unreachable; showing the last results");
      }
    }
  }

  function configureSlider(): void {
    const descriptor = meta.features.find((f) => f.name === activeFeature);
    if (!descriptor || descriptor.kind !== "numeric") {
      slider.disabled = true;
      note.textContent = descriptor ? "pick the value in the form" : "";
      return;
    }
    slider.disabled = false;
    note.textContent = "";
    slider.min = String(descriptor.lo ?? 0);
    slider.max = String(descriptor.hi ?? 1);
    slider.step = "any";
    const value = currentValue(activeFeature);
    if (typeof value === "number") slider.value = String(value);
  }

  function setActiveFeature(feature: string): void {
    activeFeature = feature;
    featurePick.value = feature;
    configureSlider();
    spawn(refreshSweep);
  }

  for (const descriptor of meta.features) {
    const option = document.createElement("option");
    option.value = descriptor.name;
    option.textContent = humanize(descriptor.name);
    featurePick.appendChild(option);
  }
  featurePick.addEventListener("change", () => setActiveFeature(featurePick.value));

  slider.addEventListener("input", () => {
    const control = form.querySelector<HTMLInputElement>(`#field-${activeFeature}`);
    if (control) {
      const unknown = form.querySelector<HTMLInputElement>(`#unknown-${activeFeature}`);
      if (unknown) {
        unknown.checked = false;
        control.disabled = false;
      }
      control.value = slider.value;
    }
    redrawChart();
    spawn(refreshSweep);
    spawn(refreshPrediction);
  });

  form.addEventListener("input", () => {
    redrawChart();
    spawn(refreshPrediction);
  });

  optimizeRun.addEventListener("click", () => {
    spawn(async () => {
      const minProbability = Number(optimizeMin.value);
      const payload = await postOptimize({
        min_probability: minProbability,
        points: OPTIMIZE_POINTS,
      });
      lastOptimize = payload;
      hideBanner(banner);
      renderOptimize(optimizeResult, payload);
      optimizeLoad.hidden = false;
    });
  });

  optimizeLoad.addEventListener("click", () => {
    if (!lastOptimize) return;
    applyValues(form, lastOptimize.profile, meta.features);
    configureSlider();
    redrawChart();
    spawn(refreshPrediction);
    spawn(refreshSweep);
  });

  const firstNumeric = meta.features.find((f) => f.kind === "numeric")?.name ?? meta.features[0]?.name ?? "";
  const defaultFeature = meta.features.some((f) => f.name === "weight_kg") ? "weight_kg" : firstNumeric;
  spawn(refreshPrediction);
  if (defaultFeature) setActiveFeature(defaultFeature);
  await flush();
  return { root, meta, flush };
}
