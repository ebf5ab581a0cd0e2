/**
 * Single-page entry: a tab for each interactive stage, both talking to the
 * pipeline service under /v1/.  The service origin defaults to the page's
 * own (use the bundled proxy server) and can be overridden with ?service=.
 */

import { ApiClient } from "./api.js";
import { AxisView } from "./axis_view.js";
import { el } from "./dom.js";
import { SegmentView } from "./segment_view.js";

function mount(root: HTMLElement): { axis: AxisView; segment: SegmentView } {
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient(params.get("service") ?? "");

  const axisTab = el("button", { class: "tab active" }, "axis finder");
  const segmentTab = el("button", { class: "tab" }, "segmentation");
  const tabs = el("div", { class: "tabs" });
  tabs.append(axisTab, segmentTab);

  const axisRoot = el("div", { class: "pane axis-pane" });
  const segmentRoot = el("div", { class: "pane segment-pane" });
  segmentRoot.style.display = "none";
  root.append(tabs, axisRoot, segmentRoot);

  const select = (which: "axis" | "segment") => {
    axisRoot.style.display = which === "axis" ? "" : "none";
    segmentRoot.style.display = which === "segment" ? "" : "none";
    axisTab.classList.toggle("active", which === "axis");
    segmentTab.classList.toggle("active", which === "segment");
  };
  axisTab.addEventListener("click", () => select("axis"));
  segmentTab.addEventListener("click", () => select("segment"));

  return {
    axis: new AxisView(axisRoot, api),
    segment: new SegmentView(segmentRoot, api),
  };
}

const appRoot = document.getElementById("app");
if (appRoot) {
  const views = mount(appRoot);
  // handy for poking at state from the browser console
  (window as unknown as Record<string, unknown>).unfurlStudio = views;
}

export { mount };
