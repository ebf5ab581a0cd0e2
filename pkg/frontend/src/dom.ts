/** Small element builders; views assemble their layout from these. */

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

export const SVG_NS = "http://www.w3.org/2000/svg";

export function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

/** Map a client-space event position into element-intrinsic coordinates. */
export function clientToLocal(
  rect: { left: number; top: number; width: number; height: number },
  intrinsicWidth: number,
  intrinsicHeight: number,
  clientX: number,
  clientY: number,
): [number, number] {
  const sx = rect.width > 0 ? intrinsicWidth / rect.width : 1.0;
  const sy = rect.height > 0 ? intrinsicHeight / rect.height : 1.0;
  return [(clientX - rect.left) * sx, (clientY - rect.top) * sy];
}
