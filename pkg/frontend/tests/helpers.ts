/** Shared test helpers: recorded service payloads and a fetch stub. */

import { readFileSync } from "node:fs";
import { join } from "node:path";

import type {
  FieldIssue,
  Meta,
  OptimizeResponse,
  PredictResponse,
  SweepResponse,
} from "../src/api.js";

export type Payload = Record<string, number | string | boolean | null>;

export interface RecordedFixtures {
  meta: Meta;
  payloadFull: Payload;
  predictFull: PredictResponse;
  payloadUnknownWeight: Payload;
  predictUnknownWeight: PredictResponse;
  sweepWeight: SweepResponse;
  sweepBiologic: SweepResponse;
  optimizeRequest: { min_probability: number; points: number };
  optimize: OptimizeResponse;
  invalidDlqi: { status: number; body: { detail: FieldIssue[] } };
  unknownSweepFeature: { status: number; body: { detail: FieldIssue[] } };
}

export function loadFixtures(): RecordedFixtures {
  const path = join(process.cwd(), "tests", "fixtures", "recorded.json");
  return JSON.parse(readFileSync(path, "utf8")) as RecordedFixtures;
}

export function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status < 400,
    status,
    json: async () => body,
  } as unknown as Response;
}

export interface StubOptions {
  failPredictNetwork?: boolean;
  failPredict422?: boolean;
  failSweepFeatures?: Set<string>;
}

export interface StubCall {
  path: string;
  body?: Record<string, unknown>;
  params?: Record<string, string>;
}

/**
 * Install a fetch stub that answers every app route from the recorded
 * payloads. Routing keys off the one field that distinguishes the recorded
 * requests, so tests always see genuine service responses.
 */
export function installFetchStub(fx: RecordedFixtures, options: StubOptions = {}): StubCall[] {
  const calls: StubCall[] = [];
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const [path, query = ""] = String(input).split("?");
    const params = Object.fromEntries(new URLSearchParams(query));
    const body = init?.body ? (JSON.parse(String(init.body)) as Record<string, unknown>) : undefined;
    calls.push({ path, body, params });
    if (path === "/model/meta") {
      return jsonResponse(200, fx.meta);
    }
    if (path === "/predict") {
      if (options.failPredictNetwork) throw new TypeError("fetch failed");
      if (options.failPredict422) return jsonResponse(422, fx.invalidDlqi.body);
      if (body && body.weight_kg === null) return jsonResponse(200, fx.predictUnknownWeight);
      return jsonResponse(200, fx.predictFull);
    }
    if (path === "/sweep") {
      const feature = params.feature ?? "";
      if (options.failSweepFeatures?.has(feature)) {
        return jsonResponse(422, fx.unknownSweepFeature.body);
      }
      if (feature === "weight_kg") return jsonResponse(200, fx.sweepWeight);
      if (feature === "biologic") return jsonResponse(200, fx.sweepBiologic);
      return jsonResponse(422, fx.unknownSweepFeature.body);
    }
    if (path === "/optimize") {
      return jsonResponse(200, fx.optimize);
    }
    return jsonResponse(404, { detail: [] });
  }) as typeof fetch;
  return calls;
}
