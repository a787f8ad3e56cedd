/** Typed client for the prediction service's HTTP/JSON contract. */

export interface FeatureDescriptor {
  name: string;
  kind: "numeric" | "categorical" | "boolean";
  lo?: number;
  hi?: number;
  levels?: string[];
}

export interface Meta {
  kinds: { classifier: string; length: string };
  classes: string[];
  schema_fingerprint: string;
  mode: "baseline" | "retrospective";
  features: FeatureDescriptor[];
  training_meta: Record<string, unknown>;
  mae_months: number | null;
}

export interface PredictResponse {
  probabilities: Record<string, number>;
  predicted_class: string;
  predicted_length_months: number;
}

export interface SweepResponse {
  feature: string;
  values: (number | string)[];
  probabilities: number[][];
}

export interface Constraint {
  feature: string;
  relation: "<=" | ">=" | "=" | "in";
  boundary: number | string | (number | string)[];
  probability: number;
}

export interface OptimizeResponse {
  target_class: string;
  min_probability: number;
  target_reachable: boolean;
  profile: Record<string, number | string>;
  probabilities: Record<string, number>;
  constraints: Constraint[];
}

export interface FieldIssue {
  loc: (string | number)[];
  msg: string;
  type?: string;
}

export class ApiError extends Error {
  readonly status: number;
  readonly detail: FieldIssue[];

  constructor(status: number, detail: FieldIssue[]) {
    super(detail.map((item) => item.msg).join("; ") || `request failed with status ${status}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(path, init);
  const body: unknown = await response.json().catch(() => null);
  if (!response.ok) {
    const detail = (body as { detail?: FieldIssue[] } | null)?.detail ?? [];
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

function jsonInit(payload: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  };
}

export function fetchMeta(): Promise<Meta> {
  return request<Meta>("/model/meta");
}

export function postPredict(payload: Record<string, unknown>): Promise<PredictResponse> {
  return request<PredictResponse>("/predict", jsonInit(payload));
}

export function getSweep(feature: string, points = 25): Promise<SweepResponse> {
  return request<SweepResponse>(`/sweep?feature=${encodeURIComponent(feature)}&points=${points}`);
}

export function postOptimize(payload: {
  min_probability: number;
  target_class?: string;
  points?: number;
}): Promise<OptimizeResponse> {
  return request<OptimizeResponse>("/optimize", jsonInit(payload));
}

/**
 * Latest-wins sweep requests: a response resolves to null whenever a newer
 * request was issued meanwhile, so a stale curve can never replace a newer
 * one regardless of network ordering.
 */
export class SweepChannel {
  private ticket = 0;

  async request(feature: string, points?: number): Promise<SweepResponse | null> {
    const mine = ++this.ticket;
    try {
      const payload = await getSweep(feature, points);
      return mine === this.ticket ? payload : null;
    } catch (err) {
      if (mine === this.ticket) {
        throw err;
      }
      return null;
    }
  }
}
