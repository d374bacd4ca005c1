/** In-memory fake of the /v1 API, faithful to its status codes and bodies.
 *
 * The fake predictor stamps prompt geometry into the mask (points as
 * balls, boxes as filled rectangles, scribble/lasso vertices as pixels),
 * which is enough for the UI to observe the overlay changing per round.
 */

import { encodeRle } from "../src/rle.js";
import { validatePrompt, type Prompt } from "../src/schema.js";

interface FakeSession {
  shape: [number, number, number];
  prompts: Prompt[];
  masks: Uint8Array[];   // one per round
}

export class MockServer {
  sessions = new Map<string, FakeSession>();
  receivedPrompts: unknown[] = [];
  private nextId = 1;

  /** fetch-compatible entry point to hand to ApiClient. */
  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = (init?.method ?? "GET").toUpperCase();
    const path = url.replace(/^https?:\/\/[^/]+/, "");

    if (method === "GET" && path === "/v1/health") {
      return json(200, { status: "ok" });
    }
    if (method === "POST" && path === "/v1/sessions") {
      const body = init?.body as ArrayBuffer;
      if (!body || (body as ArrayBuffer).byteLength < 16) {
        return json(400, { error: "malformed volume: too short" });
      }
      const id = `s${this.nextId++}`;
      this.sessions.set(id, { shape: [16, 32, 32], prompts: [], masks: [] });
      return json(200, { session_id: id, shape: [16, 32, 32],
                         spacing: [1, 1, 1], rounds: 0 });
    }

    const match = path.match(/^\/v1\/sessions\/([^/]+)(\/.*)?$/);
    if (!match) {
      return json(404, { error: "not found" });
    }
    const session = this.sessions.get(match[1]!);
    const rest = match[2] ?? "";
    if (!session) {
      return json(404, { error: "unknown session" });
    }

    if (method === "POST" && rest === "/prompts") {
      const prompt = JSON.parse(init!.body as string);
      this.receivedPrompts.push(prompt);
      const problems = validatePrompt(prompt);
      if (problems.length > 0) {
        return json(422, { error: problems.join("; ") });
      }
      session.prompts.push(prompt as Prompt);
      session.masks.push(stampMask(session.shape, session.prompts));
      const masks = session.masks;
      const prev = masks.length > 1 ? masks[masks.length - 2]! : null;
      const cur = masks[masks.length - 1]!;
      let changed = 0;
      for (let i = 0; i < cur.length; i++) {
        if ((prev ? prev[i] : 0) !== cur[i]) changed++;
      }
      return json(200, { round: masks.length, changed_voxels: changed,
                         mask_version: masks.length });
    }
    if (method === "GET" && rest === "/mask") {
      const mask = session.masks[session.masks.length - 1];
      if (!mask) {
        return json(409, { error: "no prediction yet" });
      }
      return json(200, encodeRle(mask, session.shape as unknown as number[]));
    }
    if (method === "GET" && rest.startsWith("/slice/")) {
      const z = Number(rest.slice("/slice/".length).split("?")[0]);
      if (!(z >= 0 && z < session.shape[0])) {
        return json(404, { error: "slice out of range" });
      }
      return new Response(new Uint8Array([0x89, 0x50, 0x4e, 0x47]),
                          { status: 200, headers: { "Content-Type": "image/png" } });
    }
    if (method === "POST" && rest === "/undo") {
      if (session.masks.length === 0) {
        return json(409, { error: "nothing to undo at round 0" });
      }
      session.prompts.pop();
      session.masks.pop();
      return json(200, { round: session.masks.length });
    }
    if (method === "GET" && rest === "/export") {
      if (session.masks.length === 0) {
        return json(409, { error: "no prediction to export yet" });
      }
      return new Response(new Uint8Array(348),
                          { status: 200,
                            headers: { "Content-Type": "application/gzip" } });
    }
    if (method === "DELETE" && rest === "") {
      this.sessions.delete(match[1]!);
      return new Response(null, { status: 204 });
    }
    return json(404, { error: "not found" });
  };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function stampMask(shape: [number, number, number],
                   prompts: Prompt[]): Uint8Array {
  const [nz, ny, nx] = shape;
  const mask = new Uint8Array(nz * ny * nx);
  const put = (z: number, y: number, x: number) => {
    if (z >= 0 && z < nz && y >= 0 && y < ny && x >= 0 && x < nx) {
      mask[(z * ny + y) * nx + x] = 1;
    }
  };
  for (const p of prompts) {
    if (p.polarity !== "positive") continue;
    if (p.kind === "point") {
      const [cz, cy, cx] = p.center;
      for (let dz = -p.radius; dz <= p.radius; dz++) {
        for (let dy = -p.radius; dy <= p.radius; dy++) {
          for (let dx = -p.radius; dx <= p.radius; dx++) {
            if (dz * dz + dy * dy + dx * dx <= p.radius * p.radius) {
              put(cz + dz, cy + dy, cx + dx);
            }
          }
        }
      }
    } else if (p.kind === "box") {
      for (let y = p.min[0]; y < p.max[0]; y++) {
        for (let x = p.min[1]; x < p.max[1]; x++) {
          put(p.slice, y, x);
        }
      }
    } else {
      for (const [y, x] of p.vertices) {
        put(p.slice, Math.round(y), Math.round(x));
      }
    }
  }
  return mask;
}
