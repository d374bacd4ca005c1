/** Shared prompt wire schema: the exact JSON the server accepts.
 *
 * All coordinates are voxel indices in preprocessed (z, y, x) order;
 * in-plane vertices are (y, x). Box max corners are upper-exclusive.
 * Every prompt kind carries exactly its required fields — extras are
 * rejected server-side, so they are rejected here too.
 */

export type Polarity = "positive" | "negative";

export interface PointPrompt {
  kind: "point";
  polarity: Polarity;
  center: [number, number, number];
  radius: number;
}

export interface BoxPrompt {
  kind: "box";
  polarity: Polarity;
  slice: number;
  min: [number, number];
  max: [number, number];
}

export interface ScribblePrompt {
  kind: "scribble";
  polarity: Polarity;
  slice: number;
  vertices: [number, number][];
  thickness: number;
}

export interface LassoPrompt {
  kind: "lasso";
  polarity: Polarity;
  slice: number;
  vertices: [number, number][];
}

export type Prompt = PointPrompt | BoxPrompt | ScribblePrompt | LassoPrompt;

const REQUIRED_FIELDS: Record<string, string[]> = {
  point: ["center", "radius"],
  box: ["slice", "min", "max"],
  scribble: ["slice", "vertices", "thickness"],
  lasso: ["slice", "vertices"],
};

function isIntTriple(v: unknown): v is [number, number, number] {
  return Array.isArray(v) && v.length === 3 &&
    v.every((c) => Number.isInteger(c));
}

function isIntPair(v: unknown): v is [number, number] {
  return Array.isArray(v) && v.length === 2 &&
    v.every((c) => Number.isInteger(c));
}

function isVertexList(v: unknown): v is [number, number][] {
  return Array.isArray(v) &&
    v.every((p) => Array.isArray(p) && p.length === 2 &&
      p.every((c) => typeof c === "number" && Number.isFinite(c)));
}

/** Validate an arbitrary object against the wire schema.
 *
 * Returns a list of problems; an empty list means the object is a valid
 * prompt. Mirrors the server's parser so a bad gesture never leaves the
 * browser.
 */
export function validatePrompt(obj: unknown): string[] {
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return ["prompt must be a JSON object"];
  }
  const o = obj as Record<string, unknown>;
  const errors: string[] = [];

  const kind = o["kind"];
  if (typeof kind !== "string" || !(kind in REQUIRED_FIELDS)) {
    return [`unknown prompt kind ${JSON.stringify(kind)}`];
  }
  if (o["polarity"] !== "positive" && o["polarity"] !== "negative") {
    errors.push(`unknown polarity ${JSON.stringify(o["polarity"])}`);
  }

  const required = REQUIRED_FIELDS[kind]!;
  const fields = Object.keys(o).filter((k) => k !== "kind" && k !== "polarity");
  const missing = required.filter((f) => !(f in o));
  const extra = fields.filter((f) => !required.includes(f));
  if (missing.length > 0 || extra.length > 0) {
    errors.push(`${kind} prompt must carry exactly fields ` +
      `[${[...required].sort().join(", ")}]`);
    return errors;
  }

  switch (kind) {
    case "point":
      if (!isIntTriple(o["center"])) errors.push("center must be 3 integers");
      if (!Number.isInteger(o["radius"]) || (o["radius"] as number) < 1) {
        errors.push("radius must be a positive integer");
      }
      break;
    case "box": {
      if (!Number.isInteger(o["slice"])) errors.push("slice must be an integer");
      if (!isIntPair(o["min"]) || !isIntPair(o["max"])) {
        errors.push("min/max must be 2 integers each");
      } else {
        const [mn, mx] = [o["min"] as number[], o["max"] as number[]];
        if (!(mn[0]! < mx[0]! && mn[1]! < mx[1]!)) {
          errors.push("min corner must be strictly below max corner");
        }
      }
      break;
    }
    case "scribble":
      if (!Number.isInteger(o["slice"])) errors.push("slice must be an integer");
      if (!isVertexList(o["vertices"]) ||
          (o["vertices"] as unknown[]).length < 2) {
        errors.push("scribble needs at least 2 vertices");
      }
      if (!Number.isInteger(o["thickness"]) ||
          (o["thickness"] as number) < 1 || (o["thickness"] as number) > 2) {
        errors.push("thickness must be 1 or 2");
      }
      break;
    case "lasso":
      if (!Number.isInteger(o["slice"])) errors.push("slice must be an integer");
      if (!isVertexList(o["vertices"]) ||
          (o["vertices"] as unknown[]).length < 4 ||
          (o["vertices"] as unknown[]).length > 12) {
        errors.push("lasso needs 4 to 12 vertices");
      }
      break;
  }
  return errors;
}

export function isValidPrompt(obj: unknown): obj is Prompt {
  return validatePrompt(obj).length === 0;
}
