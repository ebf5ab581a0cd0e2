/** In-memory /v1 stand-in for view tests: canned payloads plus call capture. */

import type { DifferencePayload, FetchLike, ProjectionsMeta } from "../src/api.js";

export interface RecordedCall {
  method: string;
  path: string;
  url: URL;
  body?: unknown;
}

export type RouteHandler = (url: URL, body?: unknown) => unknown | Promise<unknown>;

export class RouteError {
  constructor(
    public status: number,
    public detail: unknown,
  ) {}
}

/** Routes are keyed "METHOD /v1/path"; handlers return the JSON payload. */
export function makeFetch(routes: Record<string, RouteHandler>) {
  const calls: RecordedCall[] = [];
  const fetchFn: FetchLike = async (rawUrl, init) => {
    const url = new URL(rawUrl, "http://fake");
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    calls.push({ method, path: url.pathname, url, body });
    const handler = routes[`${method} ${url.pathname}`];
    if (!handler) {
      return new Response(JSON.stringify({ detail: `no route ${method} ${url.pathname}` }), {
        status: 404,
        headers: { "content-type": "application/json" },
      });
    }
    try {
      const payload = await handler(url, body);
      return new Response(JSON.stringify(payload), {
        status: 200,
        headers: { "content-type": "application/json" },
      });
    } catch (err) {
      if (err instanceof RouteError) {
        return new Response(JSON.stringify({ detail: err.detail }), {
          status: err.status,
          headers: { "content-type": "application/json" },
        });
      }
      throw err;
    }
  };
  return { calls, fetchFn };
}

export function projectionsPayload(width = 96, height = 16): ProjectionsMeta {
  return {
    num_frames: 200,
    frame_shape: [height, width],
    i0: 40000,
    geometry: {
      num_angles: 200,
      angle_range: 2 * Math.PI,
      num_detectors: width,
      detector_spacing: 1.0,
    },
    pairs: [
      { pair_index: 0, angle_index: 0 },
      { pair_index: 1, angle_index: 25 },
    ],
    frames: [],
  };
}

export function differencePayload(overrides: Partial<DifferencePayload> = {}): DifferencePayload {
  return {
    pair_index: 0,
    angle_index: 0,
    opposite_angle_index: 100,
    shape: [2, 2],
    values: [
      [0, 0],
      [0, 0],
    ],
    value_min: 0,
    value_max: 0,
    frame_range: 40000,
    residual: 0.0,
    render_hint: { positive: "red", negative: "green" },
    ...overrides,
  };
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((res) => {
    resolve = res;
  });
  return { promise, resolve };
}
