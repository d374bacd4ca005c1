/** Convert raw canvas gestures into schema-valid prompt JSON.
 *
 * Canvas coordinates are (y, x) pixels on the current axial slice; the
 * prompt schema wants voxel indices, (z, y, x) for points. A click makes
 * a point, a drag-rectangle a box, a freehand path a scribble if open or
 * a lasso (downsampled to at most 12 vertices) if it ends near its start.
 */

import type { BoxPrompt, LassoPrompt, Polarity, PointPrompt,
              ScribblePrompt } from "./schema.js";

export const LASSO_MAX_VERTICES = 12;
/** A freehand path counts as closed when its ends are this close (px). */
export const CLOSE_DISTANCE = 8;

export function clickToPoint(z: number, y: number, x: number,
                             radius: number,
                             polarity: Polarity): PointPrompt {
  return {
    kind: "point",
    polarity,
    center: [z, Math.round(y), Math.round(x)],
    radius,
  };
}

/** Drag rectangle between any two corners; max corner is upper-exclusive. */
export function dragToBox(z: number,
                          a: [number, number], b: [number, number],
                          polarity: Polarity): BoxPrompt {
  const yLo = Math.round(Math.min(a[0], b[0]));
  const yHi = Math.round(Math.max(a[0], b[0]));
  const xLo = Math.round(Math.min(a[1], b[1]));
  const xHi = Math.round(Math.max(a[1], b[1]));
  return {
    kind: "box",
    polarity,
    slice: z,
    min: [yLo, xLo],
    max: [yHi + 1, xHi + 1],
  };
}

function dist(a: [number, number], b: [number, number]): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1]);
}

/** Drop consecutive duplicates after rounding to the pixel grid. */
function dedupe(path: [number, number][]): [number, number][] {
  const out: [number, number][] = [];
  for (const p of path) {
    const last = out[out.length - 1];
    if (!last || last[0] !== p[0] || last[1] !== p[1]) {
      out.push(p);
    }
  }
  return out;
}

export function isClosedPath(path: [number, number][]): boolean {
  return path.length >= 3 && dist(path[0]!, path[path.length - 1]!) <= CLOSE_DISTANCE;
}

/** Evenly downsample a polygon outline to at most `limit` vertices. */
export function downsampleOutline(path: [number, number][],
                                  limit: number): [number, number][] {
  if (path.length <= limit) {
    return path.slice();
  }
  const out: [number, number][] = [];
  for (let i = 0; i < limit; i++) {
    out.push(path[Math.floor((i * path.length) / limit)]!);
  }
  return out;
}

/** Open freehand path -> scribble prompt (vertices kept dense). */
export function pathToScribble(z: number, path: [number, number][],
                               thickness: number,
                               polarity: Polarity): ScribblePrompt {
  const vertices = dedupe(path.map(
    ([y, x]) => [Math.round(y), Math.round(x)] as [number, number]));
  if (vertices.length < 2) {
    throw new Error("scribble gesture too short");
  }
  return { kind: "scribble", polarity, slice: z, vertices, thickness };
}

/** Closed freehand path -> lasso prompt with at most 12 vertices,
 *  mirroring the vertex range the model was trained on. */
export function pathToLasso(z: number, path: [number, number][],
                            polarity: Polarity): LassoPrompt {
  let outline = dedupe(path.map(
    ([y, x]) => [Math.round(y), Math.round(x)] as [number, number]));
  // the closing point duplicates the start; the polygon is implicit
  const first = outline[0];
  const last = outline[outline.length - 1];
  if (outline.length > 1 && first && last &&
      dist(first, last) <= CLOSE_DISTANCE) {
    outline = outline.slice(0, -1);
  }
  if (outline.length < 4) {
    throw new Error("lasso gesture needs at least 4 distinct points");
  }
  return {
    kind: "lasso",
    polarity,
    slice: z,
    vertices: downsampleOutline(outline, LASSO_MAX_VERTICES),
  };
}
