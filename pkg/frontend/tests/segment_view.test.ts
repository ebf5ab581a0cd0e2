// @vitest-environment happy-dom
import { describe, expect, it } from "vitest";

import { ApiClient, JobStatus } from "../src/api.js";
import { SegmentView } from "../src/segment_view.js";
import { RecordedCall, RouteError, makeFetch } from "./fake_service.js";

const SLICE_VALUES = [
  [0.0, 0.2, 0.4, 0.6],
  [0.2, 0.4, 0.6, 0.8],
  [0.4, 0.6, 0.8, 1.0],
  [0.6, 0.8, 1.0, 0.8],
];

const POINTS: Array<[number, number]> = [
  [0.5, 0.5],
  [1.5, 0.8],
  [2.5, 1.6],
  [3.2, 2.6],
  [2.6, 3.4],
];

function jobSequence(statuses: Array<Partial<JobStatus>>): (url: URL) => JobStatus {
  let call = 0;
  return () => {
    const step = statuses[Math.min(call, statuses.length - 1)];
    call += 1;
    return {
      job_id: "job-0000",
      state: "running",
      generation: 0,
      best_fitness: null,
      best_samples: null,
      ...step,
    } as JobStatus;
  };
}

function buildView(extraRoutes: Record<string, (url: URL, body?: unknown) => unknown> = {}) {
  const { calls, fetchFn } = makeFetch({
    "GET /v1/slices": () => ({ num_slices: 5, shape: [4, 4], value_min: 0, value_max: 2 }),
    "GET /v1/slices/2": () => ({
      z: 2, shape: [4, 4], values: SLICE_VALUES, value_min: 0, value_max: 2, normalized: true,
    }),
    "GET /v1/slices/3": () => ({
      z: 3, shape: [4, 4], values: SLICE_VALUES, value_min: 0, value_max: 2, normalized: true,
    }),
    "POST /v1/path/fit": (_url, body) => {
      const points = (body as { points: number[][] }).points;
      return {
        num_samples: points.length,
        shape: [points.length, 2],
        samples: points,
        arc_length: 10.0,
        spacing: 0.5,
        smoothing: 0.9,
      };
    },
    ...extraRoutes,
  });
  const root = document.createElement("div");
  document.body.append(root);
  const view = new SegmentView(root, new ApiClient("", fetchFn), { pollIntervalMs: 1 });
  return { view, calls };
}

function fitCalls(calls: RecordedCall[]): RecordedCall[] {
  return calls.filter((c) => c.path === "/v1/path/fit");
}

describe("SegmentView slice pane", () => {
  it("loads metadata and renders the middle slice", async () => {
    const { view } = buildView();
    await view.ready;
    expect(view.sliceIndex).toBe(2);
    expect(view.sliceEntry.max).toBe("4");
    expect(view.lastSliceRender?.width).toBe(4);
    expect(view.lastSliceRender?.height).toBe(4);
    expect(view.overlay.getAttribute("viewBox")).toBe("0 0 4 4");
  });

  it("zoom controls scale the stage around the origin", async () => {
    const { view } = buildView();
    await view.ready;
    view.zoomInBtn.dispatchEvent(new Event("click"));
    expect(view.zoom).toBeCloseTo(1.25);
    expect(view.stage.style.transform).toBe("scale(1.25)");
    expect(view.zoomLabel.textContent).toBe("125%");
    view.zoomResetBtn.dispatchEvent(new Event("click"));
    expect(view.zoom).toBe(1.0);
  });

  it("maps overlay clicks through the rendered rect into image coordinates", async () => {
    const { view } = buildView();
    await view.ready;
    view.overlay.getBoundingClientRect = () =>
      ({ left: 10, top: 20, width: 40, height: 40, right: 50, bottom: 60, x: 10, y: 20 }) as DOMRect;
    view.overlay.dispatchEvent(new MouseEvent("click", { clientX: 30, clientY: 40, bubbles: true }));
    expect(view.model.points).toEqual([[2, 2]]);
    const circle = view.pointsLayer.querySelector("circle.cp");
    expect(circle?.getAttribute("cx")).toBe("2");
  });
});

describe("SegmentView control points", () => {
  it("keeps submission disabled with a message below four points", async () => {
    const { view, calls } = buildView();
    await view.ready;
    POINTS.slice(0, 3).forEach(([x, y]) => view.addPointAt(x, y));
    await view.idle();
    expect(view.launchBtn.disabled).toBe(true);
    expect(view.validationEl.textContent).toContain("at least 4");
    expect(fitCalls(calls)).toHaveLength(0);
  });

  it("refits live once four valid points exist", async () => {
    const { view, calls } = buildView();
    await view.ready;
    POINTS.slice(0, 4).forEach(([x, y]) => view.addPointAt(x, y));
    await view.idle();
    expect(view.launchBtn.disabled).toBe(false);
    expect(view.validationEl.textContent).toBe("");
    const fits = fitCalls(calls);
    expect(fits.length).toBeGreaterThan(0);
    expect((fits.at(-1)?.body as { points: number[][] }).points).toHaveLength(4);
    expect(view.splineLine.getAttribute("points")).toContain("0.5,0.5");
  });

  it("preserves order through moves and deletes, disabling at three points", async () => {
    const { view, calls } = buildView();
    await view.ready;
    POINTS.forEach(([x, y]) => view.addPointAt(x, y));
    view.movePoint(2, 2.4, 1.5);
    await view.idle();
    let body = fitCalls(calls).at(-1)?.body as { points: number[][] };
    expect(body.points[2]).toEqual([2.4, 1.5]);
    expect(body.points[1]).toEqual([1.5, 0.8]);

    view.removePoint(4);
    await view.idle();
    body = fitCalls(calls).at(-1)?.body as { points: number[][] };
    expect(body.points).toHaveLength(4);

    const before = fitCalls(calls).length;
    view.removePoint(3);
    await view.idle();
    expect(view.launchBtn.disabled).toBe(true);
    expect(view.validationEl.textContent).toContain("at least 4");
    expect(view.splineLine.getAttribute("points")).toBe("");
    expect(fitCalls(calls)).toHaveLength(before);
  });

  it("blocks self-crossing chains before they reach the service", async () => {
    const { view, calls } = buildView();
    await view.ready;
    view.addPointAt(0, 0);
    view.addPointAt(10, 10);
    view.addPointAt(10, 0);
    view.addPointAt(12, -2);
    await view.idle();
    const before = fitCalls(calls).length;
    view.movePoint(3, 0, 10); // now a bowtie
    await view.idle();
    expect(view.launchBtn.disabled).toBe(true);
    expect(view.validationEl.textContent).toContain("crosses");
    expect(fitCalls(calls)).toHaveLength(before);
  });

  it("deletes a point on double click", async () => {
    const { view } = buildView();
    await view.ready;
    POINTS.forEach(([x, y]) => view.addPointAt(x, y));
    await view.idle();
    const circle = view.pointsLayer.querySelectorAll("circle.cp")[1];
    circle.dispatchEvent(new MouseEvent("dblclick", { bubbles: true }));
    await view.idle();
    expect(view.model.length).toBe(4);
    expect(view.model.points[1]).toEqual(POINTS[2]);
  });

  it("drags a point through mousedown, mousemove, mouseup", async () => {
    const { view } = buildView();
    await view.ready;
    POINTS.forEach(([x, y]) => view.addPointAt(x, y));
    await view.idle();
    view.overlay.getBoundingClientRect = () =>
      ({ left: 0, top: 0, width: 4, height: 4, right: 4, bottom: 4, x: 0, y: 0 }) as DOMRect;
    const circle = view.pointsLayer.querySelectorAll("circle.cp")[0];
    circle.dispatchEvent(new MouseEvent("mousedown", { bubbles: true }));
    view.overlay.dispatchEvent(
      new MouseEvent("mousemove", { clientX: 0.9, clientY: 0.4, bubbles: true }),
    );
    view.overlay.dispatchEvent(new MouseEvent("mouseup", { bubbles: true }));
    await view.idle();
    expect(view.model.points[0][0]).toBeCloseTo(0.9);
    expect(view.model.points[0][1]).toBeCloseTo(0.4);
  });
});

describe("SegmentView GA panel", () => {
  it("polls the job to completion with a non-decreasing chart", async () => {
    const { view, calls } = buildView({
      "POST /v1/optimize": () => ({
        job_id: "job-0000", state: "queued", generations_total: 3, slice_index: 2,
      }),
      "GET /v1/jobs/job-0000": jobSequence([
        { state: "running", generation: 1, best_fitness: 1.0, best_samples: [[1, 1], [2, 2]] },
        { state: "running", generation: 2, best_fitness: 1.2, best_samples: [[1, 1], [2, 2]] },
        {
          state: "done", generation: 3, best_fitness: 1.5,
          best_samples: [[1, 1], [2, 2]], arc_length: 12.5, num_samples: 26,
        },
      ]),
    });
    await view.ready;
    POINTS.forEach(([x, y]) => view.addPointAt(x, y));
    await view.idle();
    view.seedEntry.value = "7";
    view.populationEntry.value = "12";
    view.generationsEntry.value = "3";
    const status = await view.launch();
    expect(status.state).toBe("done");
    const optimize = calls.find((c) => c.path === "/v1/optimize");
    expect(optimize?.body).toMatchObject({ slice_index: 2, seed: 7, population: 12, generations: 3 });
    expect((optimize?.body as { points: number[][] }).points).toHaveLength(5);

    const series = view.fitnessSeries();
    expect(series).toEqual([
      [1, 1.0],
      [2, 1.2],
      [3, 1.5],
    ]);
    for (let i = 1; i < series.length; i++) {
      expect(series[i][1]).toBeGreaterThanOrEqual(series[i - 1][1]);
    }
    expect(view.acceptBtn.disabled).toBe(false);
    expect(view.jobStatusEl.textContent).toContain("done");
    expect(view.bestLine.getAttribute("points")).toBe("1,1 2,2");
  });

  it("shows failed jobs in the error banner and keeps accept disabled", async () => {
    const { view } = buildView({
      "POST /v1/optimize": () => ({
        job_id: "job-0000", state: "queued", generations_total: 3, slice_index: 2,
      }),
      "GET /v1/jobs/job-0000": jobSequence([
        { state: "failed", generation: 4, error: "no feasible path after 10 generations" },
      ]),
    });
    await view.ready;
    POINTS.forEach(([x, y]) => view.addPointAt(x, y));
    await view.idle();
    const status = await view.launch();
    expect(status.state).toBe("failed");
    expect(view.errorBanner.textContent).toContain("no feasible path");
    expect(view.acceptBtn.disabled).toBe(true);
  });

  it("rejects a programmatic launch while the points are invalid", async () => {
    const { view } = buildView();
    await view.ready;
    view.addPointAt(1, 1);
    await view.idle();
    await expect(view.launch()).rejects.toThrow("invariants");
  });

  it("surfaces optimize submission errors inline", async () => {
    const { view } = buildView({
      "POST /v1/optimize": () => {
        throw new RouteError(400, [{ field: "ga", message: "population must be positive" }]);
      },
    });
    await view.ready;
    POINTS.forEach(([x, y]) => view.addPointAt(x, y));
    await view.idle();
    await expect(view.launch()).rejects.toThrow("population");
    expect(view.errorBanner.textContent).toContain("population must be positive");
    expect(view.launchBtn.disabled).toBe(false); // revalidated, points still fine
  });

  it("accepts the finished path and renders the sheet at the contracted size", async () => {
    const sheetValues = Array.from({ length: 5 }, (_, r) =>
      Array.from({ length: 7 }, (_, c) => (r + c) / 10),
    );
    let acceptedJob: unknown = null;
    const { view } = buildView({
      "POST /v1/optimize": () => ({
        job_id: "job-0000", state: "queued", generations_total: 2, slice_index: 2,
      }),
      "GET /v1/jobs/job-0000": jobSequence([
        { state: "done", generation: 2, best_fitness: 2.0, best_samples: [[1, 1], [2, 2]] },
      ]),
      "POST /v1/path/accept": (_url, body) => {
        acceptedJob = body;
        return { stored: true, arc_length: 33.25, num_samples: 67 };
      },
      "GET /v1/sheet": () => ({
        shape: [5, 7], num_slices: 5, num_samples: 7, values: sheetValues,
        value_min: 0, value_max: 1, band_halfwidth: 1.2, provenance: {},
      }),
    });
    await view.ready;
    POINTS.forEach(([x, y]) => view.addPointAt(x, y));
    await view.idle();
    await view.launch();
    await view.accept();
    expect(acceptedJob).toEqual({ job_id: "job-0000" });
    expect(view.lastSheetRender?.width).toBe(7);
    expect(view.lastSheetRender?.height).toBe(5);
    expect(view.sheetCaption.textContent).toContain("5 slices x 7 samples");
  });
});
