import { describe, expect, it } from "vitest";

import { isValidPrompt, validatePrompt } from "../src/schema.js";

const point = { kind: "point", polarity: "positive",
                center: [10, 20, 30], radius: 3 };
const box = { kind: "box", polarity: "positive", slice: 5,
              min: [7, 7], max: [23, 23] };
const scribble = { kind: "scribble", polarity: "negative", slice: 5,
                   vertices: [[10, 10], [10, 11], [11, 12]], thickness: 1 };
const lasso = { kind: "lasso", polarity: "positive", slice: 5,
                vertices: [[10, 10], [10, 19], [19, 19], [19, 10]] };

describe("validatePrompt", () => {
  it("accepts one valid prompt of each kind", () => {
    for (const p of [point, box, scribble, lasso]) {
      expect(validatePrompt(p)).toEqual([]);
      expect(isValidPrompt(p)).toBe(true);
    }
  });

  it("rejects non-objects and unknown kinds", () => {
    expect(validatePrompt(null)).toHaveLength(1);
    expect(validatePrompt([1, 2])).toHaveLength(1);
    expect(validatePrompt({ kind: "circle", polarity: "positive" })[0])
      .toMatch(/unknown prompt kind/);
  });

  it("rejects bad polarity", () => {
    expect(validatePrompt({ ...point, polarity: "maybe" })[0])
      .toMatch(/unknown polarity/);
  });

  it("rejects missing and extra fields", () => {
    const { radius, ...missing } = point;
    expect(validatePrompt(missing)[0]).toMatch(/exactly fields/);
    expect(validatePrompt({ ...point, extra: 1 })[0]).toMatch(/exactly fields/);
    // box fields on a point prompt
    expect(validatePrompt({ kind: "point", polarity: "positive",
                            slice: 5, min: [0, 0], max: [1, 1] })[0])
      .toMatch(/exactly fields/);
  });

  it("rejects malformed geometry", () => {
    expect(validatePrompt({ ...point, center: [1, 2] })).not.toEqual([]);
    expect(validatePrompt({ ...point, center: [1.5, 2, 3] })).not.toEqual([]);
    expect(validatePrompt({ ...point, radius: 0 })).not.toEqual([]);
    expect(validatePrompt({ ...box, min: [23, 23], max: [7, 7] })[0])
      .toMatch(/strictly below/);
    expect(validatePrompt({ ...scribble, vertices: [[1, 1]] })).not.toEqual([]);
    expect(validatePrompt({ ...scribble, thickness: 3 })).not.toEqual([]);
    expect(validatePrompt({ ...lasso, vertices: lasso.vertices.slice(0, 3) }))
      .not.toEqual([]);
    const tooMany = Array.from({ length: 13 }, (_, i) => [i, i]);
    expect(validatePrompt({ ...lasso, vertices: tooMany })).not.toEqual([]);
  });

  it("allows fractional scribble and lasso vertices", () => {
    expect(validatePrompt({
      ...lasso,
      vertices: [[10.5, 10.2], [10.1, 19.9], [19.4, 19.5], [19.8, 10.0]],
    })).toEqual([]);
  });
});
