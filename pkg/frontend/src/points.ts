/**
 * Ordered control points with the same invariants the service enforces:
 * at least 4 points, finite coordinates, consecutive points over 0.5 px
 * apart, and a polyline that never crosses itself.  Validation runs before
 * every submission so the service only ever sees well-formed point sets.
 */

export const MIN_POINTS = 4;
export const MIN_GAP = 0.5;

export type Point = [number, number];

export interface PointIssue {
  index: number | null;
  message: string;
}

function orient(a: Point, b: Point, c: Point): number {
  const cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
  if (cross > 0) return 1;
  if (cross < 0) return -1;
  return 0;
}

function onSegment(a: Point, b: Point, p: Point): boolean {
  return (
    Math.min(a[0], b[0]) <= p[0] &&
    p[0] <= Math.max(a[0], b[0]) &&
    Math.min(a[1], b[1]) <= p[1] &&
    p[1] <= Math.max(a[1], b[1])
  );
}

/** Closed-segment intersection test, collinear overlap included. */
export function segmentsIntersect(a: Point, b: Point, c: Point, d: Point): boolean {
  const o1 = orient(a, b, c);
  const o2 = orient(a, b, d);
  const o3 = orient(c, d, a);
  const o4 = orient(c, d, b);
  if (o1 !== o2 && o3 !== o4) return true;
  if (o1 === 0 && onSegment(a, b, c)) return true;
  if (o2 === 0 && onSegment(a, b, d)) return true;
  if (o3 === 0 && onSegment(c, d, a)) return true;
  if (o4 === 0 && onSegment(c, d, b)) return true;
  return false;
}

/** Issues that would make the service reject these points; empty means valid. */
export function validatePoints(points: ReadonlyArray<Point>): PointIssue[] {
  const issues: PointIssue[] = [];
  if (points.length < MIN_POINTS) {
    issues.push({
      index: null,
      message: `need at least ${MIN_POINTS} control points, got ${points.length}`,
    });
  }
  points.forEach((p, i) => {
    if (!Number.isFinite(p[0]) || !Number.isFinite(p[1])) {
      issues.push({ index: i, message: `point ${i} has non-finite coordinates` });
    }
  });
  for (let i = 0; i + 1 < points.length; i++) {
    const dx = points[i + 1][0] - points[i][0];
    const dy = points[i + 1][1] - points[i][1];
    if (Math.hypot(dx, dy) <= MIN_GAP) {
      issues.push({
        index: i + 1,
        message: `points ${i} and ${i + 1} must be over ${MIN_GAP} px apart`,
      });
    }
  }
  // adjacent segments share an endpoint; they only overlap further when the
  // path doubles straight back on itself
  for (let i = 0; i + 2 < points.length; i++) {
    if (orient(points[i], points[i + 1], points[i + 2]) === 0) {
      const dx1 = points[i + 1][0] - points[i][0];
      const dy1 = points[i + 1][1] - points[i][1];
      const dx2 = points[i + 2][0] - points[i + 1][0];
      const dy2 = points[i + 2][1] - points[i + 1][1];
      if (dx1 * dx2 + dy1 * dy2 < 0) {
        issues.push({ index: i + 2, message: "control polyline doubles back on itself" });
        return issues;
      }
    }
  }
  // non-adjacent segments may not touch at all
  for (let i = 0; i + 1 < points.length; i++) {
    for (let j = i + 2; j + 1 < points.length; j++) {
      if (segmentsIntersect(points[i], points[i + 1], points[j], points[j + 1])) {
        issues.push({ index: j, message: "control polyline crosses itself" });
        return issues;
      }
    }
  }
  return issues;
}

/** Insertion-ordered point list; edits never reorder surviving points. */
export class PointsModel {
  points: Point[] = [];

  get length(): number {
    return this.points.length;
  }

  add(x: number, y: number): number {
    this.points.push([x, y]);
    return this.points.length - 1;
  }

  move(index: number, x: number, y: number): void {
    if (index < 0 || index >= this.points.length) return;
    this.points[index] = [x, y];
  }

  remove(index: number): void {
    if (index < 0 || index >= this.points.length) return;
    this.points.splice(index, 1);
  }

  issues(): PointIssue[] {
    return validatePoints(this.points);
  }

  valid(): boolean {
    return this.issues().length === 0;
  }

  toList(): number[][] {
    return this.points.map(([x, y]) => [x, y]);
  }
}
