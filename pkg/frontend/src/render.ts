/**
 * Display normalization only: service value matrices to RGBA buffers and
 * chart coordinates.  Signed differences map positive to red and negative to
 * green (zero stays black); normalized images map to grayscale.  Scaling is
 * against the value range the service reports, never recomputed locally.
 */

export interface RenderedImage {
  width: number;
  height: number;
  rgba: Uint8ClampedArray<ArrayBuffer>;
}

function channelIndex(color: string): number {
  if (color === "red") return 0;
  if (color === "green") return 1;
  if (color === "blue") return 2;
  return 0;
}

/** Signed matrix to RGBA; |value| = scale saturates the sign's channel. */
export function signedToRgba(
  values: number[][],
  scale: number,
  hint?: Record<string, string>,
): RenderedImage {
  const height = values.length;
  const width = height > 0 ? values[0].length : 0;
  const positive = channelIndex(hint?.positive ?? "red");
  const negative = channelIndex(hint?.negative ?? "green");
  const safeScale = scale > 0 ? scale : 1.0;
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let row = 0; row < height; row++) {
    const line = values[row];
    for (let col = 0; col < width; col++) {
      const v = line[col];
      const level = Math.round(Math.min(1.0, Math.abs(v) / safeScale) * 255);
      const base = (row * width + col) * 4;
      if (v > 0) rgba[base + positive] = level;
      else if (v < 0) rgba[base + negative] = level;
      rgba[base + 3] = 255;
    }
  }
  return { width, height, rgba };
}

/** Matrix of [0, 1] values to grayscale RGBA. */
export function grayToRgba(values: number[][]): RenderedImage {
  const height = values.length;
  const width = height > 0 ? values[0].length : 0;
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let row = 0; row < height; row++) {
    const line = values[row];
    for (let col = 0; col < width; col++) {
      const level = Math.round(Math.min(1.0, Math.max(0.0, line[col])) * 255);
      const base = (row * width + col) * 4;
      rgba[base] = level;
      rgba[base + 1] = level;
      rgba[base + 2] = level;
      rgba[base + 3] = 255;
    }
  }
  return { width, height, rgba };
}

/** Paint a rendered buffer onto a canvas; no-op where 2d contexts are absent. */
export function blit(canvas: HTMLCanvasElement, image: RenderedImage): void {
  canvas.width = image.width;
  canvas.height = image.height;
  const ctx = canvas.getContext("2d");
  if (!ctx || typeof ImageData === "undefined") return;
  ctx.putImageData(new ImageData(image.rgba, image.width, image.height), 0, 0);
}

export interface ChartPoint {
  x: number;
  y: number;
}

/**
 * Map an (x, value) series to canvas pixel coordinates, larger values up.
 * Degenerate ranges (single point, constant series) center the line.
 */
export function chartPath(
  series: Array<[number, number]>,
  width: number,
  height: number,
  pad = 6,
): ChartPoint[] {
  if (series.length === 0) return [];
  const xs = series.map(([x]) => x);
  const ys = series.map(([, y]) => y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax > xMin ? xMax - xMin : 1.0;
  const ySpan = yMax > yMin ? yMax - yMin : 1.0;
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  return series.map(([x, y]) => ({
    x: pad + ((x - xMin) / xSpan) * innerW,
    y: pad + (1.0 - (y - yMin) / ySpan) * innerH,
  }));
}

/** Redraw a line chart on a canvas; no-op where 2d contexts are absent. */
export function drawChart(
  canvas: HTMLCanvasElement,
  series: Array<[number, number]>,
  color = "#6fce8f",
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const points = chartPath(series, canvas.width, canvas.height);
  if (points.length === 0) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.moveTo(points[0].x, points[0].y);
  for (const p of points.slice(1)) ctx.lineTo(p.x, p.y);
  ctx.stroke();
}
