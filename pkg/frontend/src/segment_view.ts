/**
 * Interactive spiral segmentation: browse reconstructed slices, click an
 * ordered chain of control points onto one, watch the fitted spline overlay
 * refit live on every edit, launch the genetic refinement as an async job
 * with a polled fitness chart, then accept the best path and inspect the
 * unwrapped sheet.  Points are validated locally with the same rules the
 * service applies, and submission stays disabled while they fail.
 */

import {
  ApiClient,
  FitResult,
  JobState,
  JobStatus,
  SheetPayload,
  SlicePayload,
  SlicesMeta,
} from "./api.js";
import { clientToLocal, el, svgEl } from "./dom.js";
import { LatestWins } from "./latest.js";
import { PointsModel } from "./points.js";
import { RenderedImage, blit, drawChart, grayToRgba } from "./render.js";

const ZOOM_STEP = 1.25;
const ZOOM_MIN = 0.25;
const ZOOM_MAX = 16.0;

export interface SegmentOptions {
  /** Job poll period; the default matches the 2 Hz service contract. */
  pollIntervalMs?: number;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

function toPointsAttr(samples: number[][]): string {
  return samples.map(([x, y]) => `${x},${y}`).join(" ");
}

export class SegmentView {
  readonly root: HTMLElement;
  readonly ready: Promise<void>;

  readonly sliceEntry: HTMLInputElement;
  readonly zoomInBtn: HTMLButtonElement;
  readonly zoomOutBtn: HTMLButtonElement;
  readonly zoomResetBtn: HTMLButtonElement;
  readonly zoomLabel: HTMLSpanElement;
  readonly stage: HTMLDivElement;
  readonly sliceCanvas: HTMLCanvasElement;
  readonly overlay: SVGSVGElement;
  readonly splineLine: SVGPolylineElement;
  readonly bestLine: SVGPolylineElement;
  readonly pointsLayer: SVGGElement;
  readonly validationEl: HTMLDivElement;
  readonly seedEntry: HTMLInputElement;
  readonly populationEntry: HTMLInputElement;
  readonly generationsEntry: HTMLInputElement;
  readonly launchBtn: HTMLButtonElement;
  readonly chartCanvas: HTMLCanvasElement;
  readonly jobStatusEl: HTMLDivElement;
  readonly acceptBtn: HTMLButtonElement;
  readonly errorBanner: HTMLDivElement;
  readonly sheetCanvas: HTMLCanvasElement;
  readonly sheetCaption: HTMLDivElement;

  slicesMeta: SlicesMeta | null = null;
  sliceIndex = 0;
  zoom = 1.0;
  model = new PointsModel();
  lastSlice: SlicePayload | null = null;
  lastSliceRender: RenderedImage | null = null;
  lastFit: FitResult | null = null;
  jobId: string | null = null;
  jobState: JobState | null = null;
  lastJob: JobStatus | null = null;
  lastSheet: SheetPayload | null = null;
  lastSheetRender: RenderedImage | null = null;
  /** Settle when the most recent launch / accept button click has finished. */
  launchPending: Promise<JobStatus> | null = null;
  acceptPending: Promise<void> | null = null;

  private api: ApiClient;
  private pollIntervalMs: number;
  private fitGate = new LatestWins();
  private sliceGate = new LatestWins();
  private chart = new Map<number, number>();
  private dragIndex = -1;
  private watchSeq = 0;

  constructor(root: HTMLElement, api: ApiClient, options: SegmentOptions = {}) {
    this.root = root;
    this.api = api;
    this.pollIntervalMs = options.pollIntervalMs ?? 500;

    this.sliceEntry = el("input", { type: "number", class: "slice-entry", step: "1", min: "0" });
    this.zoomInBtn = el("button", { class: "zoom-in" }, "+");
    this.zoomOutBtn = el("button", { class: "zoom-out" }, "-");
    this.zoomResetBtn = el("button", { class: "zoom-reset" }, "1:1");
    this.zoomLabel = el("span", { class: "zoom-label" }, "100%");
    this.sliceCanvas = el("canvas", { class: "slice-canvas" });
    this.overlay = svgEl("svg", { class: "overlay", preserveAspectRatio: "none" });
    this.splineLine = svgEl("polyline", { class: "spline", fill: "none" });
    this.bestLine = svgEl("polyline", { class: "best-path", fill: "none" });
    this.pointsLayer = svgEl("g", { class: "points" });
    this.overlay.append(this.splineLine, this.bestLine, this.pointsLayer);
    this.validationEl = el("div", { class: "validation" });
    this.seedEntry = el("input", { type: "number", class: "ga-seed", placeholder: "seed" });
    this.populationEntry = el("input", {
      type: "number", class: "ga-population", placeholder: "population",
    });
    this.generationsEntry = el("input", {
      type: "number", class: "ga-generations", placeholder: "generations",
    });
    this.launchBtn = el("button", { class: "launch-btn" }, "refine with GA");
    this.chartCanvas = el("canvas", { class: "fitness-chart", width: "320", height: "96" });
    this.jobStatusEl = el("div", { class: "job-status" }, "no job");
    this.acceptBtn = el("button", { class: "accept-path-btn" }, "accept path");
    this.errorBanner = el("div", { class: "error-banner" });
    this.sheetCanvas = el("canvas", { class: "sheet-canvas" });
    this.sheetCaption = el("div", { class: "sheet-caption" }, "no sheet yet");

    const sliceRow = el("div", { class: "controls-row" });
    sliceRow.append(
      el("label", {}, "slice "),
      this.sliceEntry,
      this.zoomOutBtn,
      this.zoomLabel,
      this.zoomInBtn,
      this.zoomResetBtn,
    );
    this.stage = el("div", { class: "slice-stage" });
    this.stage.append(this.sliceCanvas, this.overlay as unknown as Node);
    const stageWrap = el("div", { class: "stage-wrap" });
    stageWrap.append(this.stage);
    const gaRow = el("div", { class: "controls-row ga-panel" });
    gaRow.append(
      el("label", {}, "GA "),
      this.seedEntry,
      this.populationEntry,
      this.generationsEntry,
      this.launchBtn,
      this.acceptBtn,
    );
    const sheetPane = el("div", { class: "sheet-pane" });
    sheetPane.append(this.sheetCaption, this.sheetCanvas);

    root.append(
      sliceRow,
      stageWrap,
      this.validationEl,
      gaRow,
      this.chartCanvas,
      this.jobStatusEl,
      this.errorBanner,
      sheetPane,
    );

    this.acceptBtn.disabled = true;
    this.sliceEntry.addEventListener("change", () => {
      void this.setSlice(Number(this.sliceEntry.value));
    });
    this.zoomInBtn.addEventListener("click", () => this.setZoom(this.zoom * ZOOM_STEP));
    this.zoomOutBtn.addEventListener("click", () => this.setZoom(this.zoom / ZOOM_STEP));
    this.zoomResetBtn.addEventListener("click", () => this.setZoom(1.0));
    this.stage.addEventListener("wheel", (event) => {
      event.preventDefault();
      this.setZoom(event.deltaY < 0 ? this.zoom * ZOOM_STEP : this.zoom / ZOOM_STEP);
    });
    this.overlay.addEventListener("mousedown", (event) => {
      const target = event.target as Element;
      if (target.classList?.contains("cp")) {
        this.dragIndex = Number(target.getAttribute("data-index"));
        event.preventDefault();
      }
    });
    this.overlay.addEventListener("mousemove", (event) => {
      if (this.dragIndex < 0) return;
      const [x, y] = this.eventToImage(event);
      this.movePoint(this.dragIndex, x, y);
    });
    const endDrag = () => {
      this.dragIndex = -1;
    };
    this.overlay.addEventListener("mouseup", endDrag);
    this.overlay.addEventListener("mouseleave", endDrag);
    this.overlay.addEventListener("click", (event) => {
      const target = event.target as Element;
      if (target.classList?.contains("cp")) return;
      const [x, y] = this.eventToImage(event);
      this.addPointAt(x, y);
    });
    this.overlay.addEventListener("dblclick", (event) => {
      const target = event.target as Element;
      if (target.classList?.contains("cp")) {
        this.removePoint(Number(target.getAttribute("data-index")));
      }
    });
    this.launchBtn.addEventListener("click", () => {
      this.launchPending = this.launch();
      this.launchPending.catch(() => undefined); // errors land in the banner
    });
    this.acceptBtn.addEventListener("click", () => {
      this.acceptPending = this.accept();
    });

    this.updateValidation();
    this.ready = this.init();
  }

  private async init(): Promise<void> {
    try {
      this.slicesMeta = await this.api.slicesMeta();
    } catch (err) {
      this.showError(err);
      return;
    }
    this.sliceEntry.max = String(this.slicesMeta.num_slices - 1);
    await this.setSlice(Math.floor(this.slicesMeta.num_slices / 2));
  }

  /** Load and render one reconstructed slice; stale loads are dropped. */
  async setSlice(z: number): Promise<void> {
    const total = this.slicesMeta?.num_slices ?? 1;
    const clamped = Math.min(Math.max(Math.round(z), 0), total - 1);
    this.sliceIndex = clamped;
    this.sliceEntry.value = String(clamped);
    try {
      const payload = await this.sliceGate.run(() => this.api.getSlice(clamped));
      if (payload === undefined) return;
      this.lastSlice = payload;
      this.lastSliceRender = grayToRgba(payload.values);
      blit(this.sliceCanvas, this.lastSliceRender);
      const [h, w] = payload.shape;
      this.overlay.setAttribute("viewBox", `0 0 ${w} ${h}`);
      this.errorBanner.textContent = "";
    } catch (err) {
      this.showError(err);
    }
  }

  setZoom(zoom: number): void {
    this.zoom = Math.min(Math.max(zoom, ZOOM_MIN), ZOOM_MAX);
    this.stage.style.transform = `scale(${this.zoom})`;
    this.stage.style.transformOrigin = "0 0";
    this.zoomLabel.textContent = `${Math.round(this.zoom * 100)}%`;
  }

  private eventToImage(event: MouseEvent): [number, number] {
    const [h, w] = this.lastSlice?.shape ?? [1, 1];
    const rect = this.overlay.getBoundingClientRect();
    return clientToLocal(rect, w, h, event.clientX, event.clientY);
  }

  addPointAt(x: number, y: number): void {
    this.model.add(x, y);
    this.edited();
  }

  movePoint(index: number, x: number, y: number): void {
    this.model.move(index, x, y);
    this.edited();
  }

  removePoint(index: number): void {
    this.model.remove(index);
    this.edited();
  }

  private edited(): void {
    this.renderPoints();
    if (this.updateValidation()) {
      void this.refit();
    } else {
      this.lastFit = null;
      this.splineLine.setAttribute("points", "");
    }
  }

  private renderPoints(): void {
    const nodes: SVGElement[] = [];
    this.model.points.forEach(([x, y], index) => {
      nodes.push(
        svgEl("circle", {
          class: "cp",
          "data-index": String(index),
          cx: String(x),
          cy: String(y),
          r: "1.5",
        }),
      );
      const label = svgEl("text", {
        class: "cp-label",
        x: String(x + 2),
        y: String(y - 2),
      });
      label.textContent = String(index);
      nodes.push(label);
    });
    this.pointsLayer.replaceChildren(...nodes);
  }

  /** Re-check the local point invariants; returns whether submission is allowed. */
  private updateValidation(): boolean {
    const issues = this.model.issues();
    const valid = issues.length === 0;
    this.validationEl.textContent = valid ? "" : issues[0].message;
    this.launchBtn.disabled = !valid;
    return valid;
  }

  /** Refit the spline through the current points; stale fits are dropped. */
  async refit(): Promise<void> {
    try {
      const fit = await this.fitGate.run(() => this.api.fitPath(this.model.toList()));
      if (fit === undefined) return;
      this.lastFit = fit;
      this.splineLine.setAttribute("points", toPointsAttr(fit.samples));
      this.errorBanner.textContent = "";
    } catch (err) {
      this.showError(err);
    }
  }

  /** Submit the GA job and poll it to a terminal state. */
  async launch(): Promise<JobStatus> {
    if (!this.updateValidation()) {
      throw new Error("control points do not satisfy the submission invariants");
    }
    const body: Parameters<ApiClient["submitOptimize"]>[0] = {
      points: this.model.toList(),
      slice_index: this.sliceIndex,
    };
    const seed = this.seedEntry.value.trim();
    const population = this.populationEntry.value.trim();
    const generations = this.generationsEntry.value.trim();
    if (seed !== "") body.seed = Number(seed);
    if (population !== "") body.population = Number(population);
    if (generations !== "") body.generations = Number(generations);

    this.chart.clear();
    this.acceptBtn.disabled = true;
    this.launchBtn.disabled = true;
    this.errorBanner.textContent = "";
    const token = ++this.watchSeq;
    try {
      const submitted = await this.api.submitOptimize(body);
      this.jobId = submitted.job_id;
      this.jobState = "queued";
      this.jobStatusEl.textContent = `job ${submitted.job_id}: queued`;
      return await this.watch(submitted.job_id, token);
    } catch (err) {
      this.showError(err);
      throw err;
    } finally {
      if (token === this.watchSeq) this.updateValidation();
    }
  }

  private async watch(jobId: string, token: number): Promise<JobStatus> {
    for (;;) {
      const status = await this.api.job(jobId);
      if (token !== this.watchSeq) return status; // a newer launch took over
      this.applyJobStatus(status);
      if (status.state === "done" || status.state === "failed") return status;
      await sleep(this.pollIntervalMs);
    }
  }

  private applyJobStatus(status: JobStatus): void {
    this.lastJob = status;
    this.jobState = status.state;
    if (status.best_fitness !== null && status.generation > 0) {
      this.chart.set(status.generation, status.best_fitness);
      drawChart(this.chartCanvas, this.fitnessSeries());
    }
    const fitness = status.best_fitness !== null ? status.best_fitness.toFixed(4) : "n/a";
    this.jobStatusEl.textContent =
      `job ${status.job_id}: ${status.state}, generation ${status.generation}, ` +
      `best fitness ${fitness}`;
    if (status.best_samples) {
      this.bestLine.setAttribute("points", toPointsAttr(status.best_samples));
    }
    if (status.state === "failed") {
      this.errorBanner.textContent = `optimize failed: ${status.error ?? "unknown error"}`;
    }
    if (status.state === "done") {
      this.acceptBtn.disabled = false;
    }
  }

  /** The polled (generation, best fitness) curve, in generation order. */
  fitnessSeries(): Array<[number, number]> {
    return [...this.chart.entries()].sort((a, b) => a[0] - b[0]);
  }

  /** Accept the finished job's path, then fetch and render the unwrapped sheet. */
  async accept(): Promise<void> {
    if (this.jobId === null) {
      this.errorBanner.textContent = "no finished job to accept";
      return;
    }
    try {
      const accepted = await this.api.acceptPath(this.jobId);
      this.lastSheet = await this.api.sheet();
      this.lastSheetRender = grayToRgba(this.lastSheet.values);
      blit(this.sheetCanvas, this.lastSheetRender);
      this.sheetCaption.textContent =
        `unwrapped sheet: ${this.lastSheet.num_slices} slices x ` +
        `${this.lastSheet.num_samples} samples, arc length ${accepted.arc_length.toFixed(2)} px`;
      this.errorBanner.textContent = "";
    } catch (err) {
      this.showError(err);
    }
  }

  idle(): Promise<void> {
    return Promise.all([this.fitGate.idle(), this.sliceGate.idle()]).then(() => undefined);
  }

  private showError(err: unknown): void {
    this.errorBanner.textContent = `error: ${err instanceof Error ? err.message : String(err)}`;
  }
}
