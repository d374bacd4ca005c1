import { describe, expect, it } from "vitest";

import { clickToPoint, downsampleOutline, dragToBox, isClosedPath,
         pathToLasso, pathToScribble } from "../src/gestures.js";
import { validatePrompt } from "../src/schema.js";

describe("clickToPoint", () => {
  it("rounds pixel coordinates into a voxel center", () => {
    const p = clickToPoint(12, 30.6, 40.2, 2, "positive");
    expect(p).toEqual({ kind: "point", polarity: "positive",
                        center: [12, 31, 40], radius: 2 });
    expect(validatePrompt(p)).toEqual([]);
  });
});

describe("dragToBox", () => {
  it("normalizes corner order and makes max upper-exclusive", () => {
    const p = dragToBox(3, [22, 22], [7, 7], "positive");
    expect(p.min).toEqual([7, 7]);
    expect(p.max).toEqual([23, 23]);
    expect(validatePrompt(p)).toEqual([]);
  });

  it("min is strictly below max even for a degenerate drag", () => {
    const p = dragToBox(3, [5, 5], [5, 5], "negative");
    expect(validatePrompt(p)).toEqual([]);
  });
});

describe("freehand paths", () => {
  const square: [number, number][] = [];
  for (let i = 0; i < 10; i++) square.push([10, 10 + i]);     // top edge
  for (let i = 0; i < 10; i++) square.push([10 + i, 19]);     // right edge
  for (let i = 0; i < 10; i++) square.push([19, 19 - i]);     // bottom edge
  for (let i = 0; i < 9; i++) square.push([19 - i, 10]);      // left edge

  it("detects closure by endpoint distance", () => {
    expect(isClosedPath(square)).toBe(true);
    expect(isClosedPath([[0, 0], [0, 50], [50, 50]])).toBe(false);
  });

  it("open path becomes a schema-valid scribble with dense vertices", () => {
    const path: [number, number][] = [[5, 5], [5.4, 6.2], [6, 7], [7, 8]];
    const p = pathToScribble(4, path, 1, "positive");
    expect(p.kind).toBe("scribble");
    expect(p.vertices.length).toBeGreaterThanOrEqual(2);
    expect(validatePrompt(p)).toEqual([]);
  });

  it("closed path becomes a lasso with at most 12 vertices", () => {
    const p = pathToLasso(4, square, "positive");
    expect(p.kind).toBe("lasso");
    expect(p.vertices.length).toBeLessThanOrEqual(12);
    expect(p.vertices.length).toBeGreaterThanOrEqual(4);
    expect(validatePrompt(p)).toEqual([]);
    // downsampling must keep points from the original outline
    for (const v of p.vertices) {
      expect(square.some(([y, x]) => y === v[0] && x === v[1])).toBe(true);
    }
  });

  it("rejects gestures too short for their prompt type", () => {
    expect(() => pathToScribble(0, [[1, 1]], 1, "positive")).toThrow(/short/);
    expect(() => pathToLasso(0, [[0, 0], [0, 1], [1, 1]], "positive"))
      .toThrow(/at least 4/);
  });
});

describe("downsampleOutline", () => {
  it("keeps short outlines untouched and bounds long ones", () => {
    const short: [number, number][] = [[0, 0], [0, 1], [1, 1], [1, 0]];
    expect(downsampleOutline(short, 12)).toEqual(short);
    const long = Array.from({ length: 100 },
      (_, i) => [i, i] as [number, number]);
    const down = downsampleOutline(long, 12);
    expect(down.length).toBe(12);
    expect(down[0]).toEqual([0, 0]);
  });
});
