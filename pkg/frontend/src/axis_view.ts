/**
 * Interactive axis finding: pick an opposing projection pair, drag center
 * and tilt until the signed difference canvas goes black, then accept.
 * Positive differences render red and negative green; the residual readout
 * and the image both come straight from the difference endpoint.  Slider
 * changes fetch latest-wins so a slow response never overwrites a newer one.
 */

import { ApiClient, DifferencePayload, ProjectionsMeta } from "./api.js";
import { el } from "./dom.js";
import { LatestWins } from "./latest.js";
import { RenderedImage, blit, signedToRgba } from "./render.js";

const DEG = Math.PI / 180.0;
const TILT_SLIDER_DEG = 2.5;
const TILT_LIMIT_DEG = 22.0; // service rejects |tilt| >= pi/8

export class AxisView {
  readonly root: HTMLElement;
  readonly ready: Promise<void>;

  readonly pairSelect: HTMLSelectElement;
  readonly pairInfo: HTMLSpanElement;
  readonly centerRange: HTMLInputElement;
  readonly centerEntry: HTMLInputElement;
  readonly tiltRange: HTMLInputElement;
  readonly tiltEntry: HTMLInputElement;
  readonly canvas: HTMLCanvasElement;
  readonly residualEl: HTMLSpanElement;
  readonly maxDiffEl: HTMLSpanElement;
  readonly acceptBtn: HTMLButtonElement;
  readonly statusEl: HTMLDivElement;

  meta: ProjectionsMeta | null = null;
  pairIndex = 0;
  center = 0;
  tiltRad = 0;
  lastDifference: DifferencePayload | null = null;
  lastRender: RenderedImage | null = null;
  /** Settles when the most recent accept-button click has finished. */
  acceptPending: Promise<void> | null = null;

  private api: ApiClient;
  private gate = new LatestWins();

  constructor(root: HTMLElement, api: ApiClient) {
    this.root = root;
    this.api = api;

    this.pairSelect = el("select", { class: "pair-select" });
    this.pairInfo = el("span", { class: "pair-info" });
    this.centerRange = el("input", { type: "range", class: "center-range", step: "0.05" });
    this.centerEntry = el("input", { type: "number", class: "center-entry", step: "0.01" });
    this.tiltRange = el("input", {
      type: "range",
      class: "tilt-range",
      min: String(-TILT_SLIDER_DEG),
      max: String(TILT_SLIDER_DEG),
      step: "0.01",
      value: "0",
    });
    this.tiltEntry = el("input", { type: "number", class: "tilt-entry", step: "0.001", value: "0" });
    this.canvas = el("canvas", { class: "diff-canvas" });
    this.residualEl = el("span", { class: "residual" }, "residual: n/a");
    this.maxDiffEl = el("span", { class: "max-diff" }, "");
    this.acceptBtn = el("button", { class: "accept-btn" }, "accept calibration");
    this.statusEl = el("div", { class: "status" });

    const pairRow = el("div", { class: "controls-row" });
    pairRow.append(el("label", {}, "projection pair "), this.pairSelect, this.pairInfo);
    const centerRow = el("div", { class: "controls-row" });
    centerRow.append(el("label", {}, "center (px)"), this.centerRange, this.centerEntry);
    const tiltRow = el("div", { class: "controls-row" });
    tiltRow.append(el("label", {}, "tilt (deg)"), this.tiltRange, this.tiltEntry);
    const canvasWrap = el("div", { class: "canvas-wrap" });
    canvasWrap.append(this.canvas);
    const readout = el("div", { class: "readout" });
    readout.append(
      el("span", { class: "legend" }, "positive red, negative green"),
      this.residualEl,
      this.maxDiffEl,
    );

    root.append(pairRow, centerRow, tiltRow, canvasWrap, readout, this.acceptBtn, this.statusEl);

    this.pairSelect.addEventListener("change", () => {
      this.setPair(Number(this.pairSelect.value));
    });
    this.centerRange.addEventListener("input", () => {
      this.setCenter(Number(this.centerRange.value));
    });
    this.centerEntry.addEventListener("change", () => {
      this.setCenter(Number(this.centerEntry.value));
    });
    this.tiltRange.addEventListener("input", () => {
      this.setTiltDeg(Number(this.tiltRange.value));
    });
    this.tiltEntry.addEventListener("change", () => {
      this.setTiltDeg(Number(this.tiltEntry.value));
    });
    this.acceptBtn.addEventListener("click", () => {
      this.acceptPending = this.accept();
    });

    this.ready = this.init();
  }

  private async init(): Promise<void> {
    try {
      this.meta = await this.api.projections();
    } catch (err) {
      this.showError(err);
      return;
    }
    const [, width] = this.meta.frame_shape;
    this.centerRange.min = "0";
    this.centerRange.max = String(width - 1);
    this.centerEntry.min = "0";
    this.centerEntry.max = String(width - 1);
    this.pairSelect.replaceChildren(
      ...this.meta.pairs.map((p) =>
        el("option", { value: String(p.pair_index) }, `pair ${p.pair_index} (angle ${p.angle_index})`),
      ),
    );
    this.center = (width - 1) / 2.0;
    this.syncInputs();
    await this.refresh();
  }

  private syncInputs(): void {
    this.centerRange.value = String(this.center);
    this.centerEntry.value = String(this.center);
    const deg = this.tiltRad / DEG;
    this.tiltRange.value = String(deg);
    this.tiltEntry.value = String(deg);
  }

  setPair(pairIndex: number): Promise<void> {
    this.pairIndex = pairIndex;
    this.pairSelect.value = String(pairIndex);
    return this.refresh();
  }

  setCenter(px: number): Promise<void> {
    const width = this.meta ? this.meta.frame_shape[1] : 1;
    this.center = Math.min(Math.max(px, 0), width - 1);
    this.syncInputs();
    return this.refresh();
  }

  setTiltDeg(deg: number): Promise<void> {
    const clamped = Math.min(Math.max(deg, -TILT_LIMIT_DEG), TILT_LIMIT_DEG);
    this.tiltRad = clamped * DEG;
    this.syncInputs();
    return this.refresh();
  }

  /** Fetch the difference for the current state; stale responses are dropped. */
  async refresh(): Promise<void> {
    try {
      const payload = await this.gate.run(() =>
        this.api.difference(this.pairIndex, this.center, this.tiltRad),
      );
      if (payload === undefined) return; // superseded
      this.applyDifference(payload);
    } catch (err) {
      this.showError(err);
    }
  }

  private applyDifference(payload: DifferencePayload): void {
    this.lastDifference = payload;
    this.lastRender = signedToRgba(payload.values, payload.frame_range, payload.render_hint);
    blit(this.canvas, this.lastRender);
    this.residualEl.textContent = `residual: ${payload.residual.toExponential(4)}`;
    const peak = Math.max(Math.abs(payload.value_min), Math.abs(payload.value_max));
    const relative = payload.frame_range > 0 ? peak / payload.frame_range : 0;
    this.maxDiffEl.textContent = `max |diff|: ${relative.toExponential(2)} of frame range`;
    this.pairInfo.textContent = `angle ${payload.angle_index} vs ${payload.opposite_angle_index}`;
    this.statusEl.textContent = "";
  }

  /** Post the current center and tilt as the accepted calibration. */
  async accept(): Promise<void> {
    try {
      const stored = await this.api.postCalibration({
        center_column: this.center,
        tilt: this.tiltRad,
        residual: this.lastDifference?.residual ?? 0.0,
        pair_index: this.pairIndex,
      });
      this.statusEl.textContent =
        `calibration stored: center ${stored.center_column}, tilt ${stored.tilt}`;
    } catch (err) {
      this.showError(err);
    }
  }

  idle(): Promise<void> {
    return this.gate.idle();
  }

  private showError(err: unknown): void {
    this.statusEl.textContent = `error: ${err instanceof Error ? err.message : String(err)}`;
  }
}
