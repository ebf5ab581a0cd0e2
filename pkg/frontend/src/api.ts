/**
 * Typed client for the pipeline service under /v1/.
 *
 * Every numeric answer the UI shows comes from these endpoints; the client
 * does no math of its own.  Error bodies carry field diagnostics for 400s
 * and a plain message for 404s; both surface as ApiError.
 */

export interface GeometryMeta {
  num_angles: number;
  angle_range: number;
  num_detectors: number;
  detector_spacing: number;
}

export interface PairMeta {
  pair_index: number;
  angle_index: number;
}

export interface ProjectionsMeta {
  num_frames: number;
  frame_shape: [number, number];
  i0: number;
  geometry: GeometryMeta;
  pairs: PairMeta[];
  frames: string[];
}

export interface DifferencePayload {
  pair_index: number;
  angle_index: number;
  opposite_angle_index: number;
  shape: [number, number];
  values: number[][];
  value_min: number;
  value_max: number;
  frame_range: number;
  residual: number;
  render_hint: Record<string, string>;
}

export interface CalibrationBody {
  center_column: number;
  tilt: number;
  residual?: number;
  pair_index?: number;
}

export interface CalibrationResult {
  stored: boolean;
  center_column: number;
  tilt: number;
  residual: number;
  pair_index: number;
}

export interface SlicesMeta {
  num_slices: number;
  shape: [number, number];
  value_min: number;
  value_max: number;
}

export interface SlicePayload {
  z: number;
  shape: [number, number];
  values: number[][];
  value_min: number;
  value_max: number;
  normalized: boolean;
}

export interface FitResult {
  num_samples: number;
  shape: [number, number];
  samples: number[][];
  arc_length: number;
  spacing: number;
  smoothing: number;
}

export interface OptimizeBody {
  points: number[][];
  smoothing?: number;
  slice_index?: number;
  seed?: number;
  population?: number;
  generations?: number;
}

export interface OptimizeSubmit {
  job_id: string;
  state: string;
  generations_total: number;
  slice_index: number;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface JobStatus {
  job_id: string;
  state: JobState;
  generation: number;
  best_fitness: number | null;
  best_samples: number[][] | null;
  error?: string;
  arc_length?: number;
  num_samples?: number;
}

export interface AcceptResult {
  stored: boolean;
  arc_length: number;
  num_samples: number;
}

export interface SheetPayload {
  shape: [number, number];
  num_slices: number;
  num_samples: number;
  values: number[][];
  value_min: number;
  value_max: number;
  band_halfwidth: number;
  provenance: Record<string, unknown>;
}

export interface ServiceMeta {
  tool: string;
  version: string;
  artifact_root: string;
  artifacts: Record<string, boolean>;
}

export interface FieldIssue {
  field: string;
  message: string;
}

export class ApiError extends Error {
  status: number;
  fields: FieldIssue[];

  constructor(status: number, message: string, fields: FieldIssue[] = []) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.fields = fields;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function toApiError(response: Response): Promise<ApiError> {
  let detail: unknown = null;
  try {
    detail = (await response.json()).detail;
  } catch {
    // non-JSON body; fall through to the status line
  }
  if (Array.isArray(detail)) {
    const fields = detail
      .filter((d): d is FieldIssue => typeof d?.field === "string")
      .map((d) => ({ field: d.field, message: String(d.message) }));
    const text = fields.map((f) => `${f.field}: ${f.message}`).join("; ");
    return new ApiError(response.status, text || `HTTP ${response.status}`, fields);
  }
  if (typeof detail === "string" && detail) {
    return new ApiError(response.status, detail);
  }
  return new ApiError(response.status, `HTTP ${response.status}`);
}

export class ApiClient {
  private base: string;
  private fetchFn: FetchLike;

  constructor(base = "", fetchFn?: FetchLike) {
    this.base = base.replace(/\/+$/, "");
    const f = fetchFn ?? globalThis.fetch;
    if (!f) throw new Error("no fetch implementation available");
    this.fetchFn = f.bind(globalThis);
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) throw await toApiError(response);
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  meta(): Promise<ServiceMeta> {
    return this.request("/v1/meta");
  }

  projections(): Promise<ProjectionsMeta> {
    return this.request("/v1/projections");
  }

  difference(pair: number, center: number, tilt: number): Promise<DifferencePayload> {
    const query = new URLSearchParams({
      pair: String(pair),
      center: String(center),
      tilt: String(tilt),
    });
    return this.request(`/v1/difference?${query}`);
  }

  postCalibration(body: CalibrationBody): Promise<CalibrationResult> {
    return this.post("/v1/calibration", body);
  }

  slicesMeta(): Promise<SlicesMeta> {
    return this.request("/v1/slices");
  }

  getSlice(z: number): Promise<SlicePayload> {
    return this.request(`/v1/slices/${z}`);
  }

  fitPath(points: number[][], smoothing?: number): Promise<FitResult> {
    const body: Record<string, unknown> = { points };
    if (smoothing !== undefined) body.smoothing = smoothing;
    return this.post("/v1/path/fit", body);
  }

  submitOptimize(body: OptimizeBody): Promise<OptimizeSubmit> {
    return this.post("/v1/optimize", body);
  }

  job(jobId: string): Promise<JobStatus> {
    return this.request(`/v1/jobs/${encodeURIComponent(jobId)}`);
  }

  acceptPath(jobId: string): Promise<AcceptResult> {
    return this.post("/v1/path/accept", { job_id: jobId });
  }

  sheet(): Promise<SheetPayload> {
    return this.request("/v1/sheet");
  }
}
