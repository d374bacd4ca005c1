import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { isValidPrompt } from "../src/schema.js";
import { MockServer } from "./mock_server.js";

let server: MockServer;
let app: App;

beforeEach(() => {
  server = new MockServer();
  app = new App(new ApiClient("", server.fetch));
});

const fixtureVolume = () => new Uint8Array(512).fill(7);

function closedSquare(): [number, number][] {
  const path: [number, number][] = [];
  for (let i = 0; i < 8; i++) path.push([8, 8 + i]);
  for (let i = 0; i < 8; i++) path.push([8 + i, 15]);
  for (let i = 0; i < 8; i++) path.push([15, 15 - i]);
  for (let i = 0; i < 8; i++) path.push([15 - i, 8]);
  return path;
}

describe("smoke flow", () => {
  it("open, prompt with every tool, watch the overlay, undo, export", async () => {
    await app.openCase(fixtureVolume());
    expect(app.state!.shape).toEqual([16, 32, 32]);
    expect(app.state!.slice).toBe(8);
    expect(app.overlayPlane()).toBeNull();

    // one gesture per tool; each round must change the visible overlay
    let previous = 0;
    const gestures = [
      { type: "click", y: 16, x: 16 } as const,
      { type: "rect", a: [5, 5] as [number, number],
        b: [12, 12] as [number, number] } as const,
      { type: "path", points: closedSquare() } as const,            // lasso
      { type: "path",
        points: [[20, 4], [20, 8], [21, 12], [22, 16]] as [number, number][],
        thickness: 1 } as const,                                     // scribble
    ];
    const kinds: string[] = [];
    for (const gesture of gestures) {
      const prompt = await app.placePrompt(gesture);
      kinds.push(prompt.kind);
      const overlaySum = sum(app.mask!);
      expect(overlaySum).toBeGreaterThan(previous);
      previous = overlaySum;
      expect(app.state!.round).toBe(kinds.length);
    }
    expect(kinds).toEqual(["point", "box", "lasso", "scribble"]);

    // everything that reached the wire was schema-valid
    expect(server.receivedPrompts.length).toBe(4);
    for (const p of server.receivedPrompts) {
      expect(isValidPrompt(p)).toBe(true);
    }

    // undo peels rounds back off
    await app.undo();
    expect(app.state!.round).toBe(3);
    expect(sum(app.mask!)).toBeLessThan(previous);

    const exported = await app.exportMask();
    expect(exported.byteLength).toBeGreaterThan(0);
  });

  it("corrupt upload: error surfaced, no session", async () => {
    await expect(app.openCase(new Uint8Array(4))).rejects.toThrow();
    expect(app.state).toBeNull();
    expect(app.error).toMatch(/malformed volume/);
  });
});

describe("error handling", () => {
  beforeEach(async () => {
    await app.openCase(fixtureVolume());
  });

  it("rejected prompts leave overlay and rounds untouched", async () => {
    await app.placePrompt({ type: "click", y: 10, x: 10 });
    const before = app.mask!.slice();

    // a 3-point freehand path is too short for any prompt
    await expect(app.placePrompt(
      { type: "path", points: [[0, 0], [0, 1], [1, 1]] })).rejects.toThrow();
    expect(app.error).not.toBeNull();
    expect(Array.from(app.mask!)).toEqual(Array.from(before));
    expect(app.state!.round).toBe(1);
    expect(server.receivedPrompts.length).toBe(1); // never hit the wire
  });

  it("undo at round 0 is a 409 surfaced inline", async () => {
    await expect(app.undo()).rejects.toThrow();
    expect(app.error).toMatch(/409/);
  });

  it("server loss mid-session preserves state", async () => {
    await app.placePrompt({ type: "click", y: 10, x: 10 });
    const round = app.state!.round;
    server.sessions.clear(); // simulate the server forgetting us
    await expect(app.placePrompt({ type: "click", y: 12, x: 12 }))
      .rejects.toThrow();
    expect(app.state!.round).toBe(round);
    expect(app.mask).not.toBeNull();
  });

  it("undo clears the overlay back at round 0", async () => {
    await app.placePrompt({ type: "click", y: 10, x: 10 });
    await app.undo();
    expect(app.state!.round).toBe(0);
    expect(app.overlayPlane()).toBeNull();
  });
});

describe("viewer state invariants", () => {
  beforeEach(async () => {
    await app.openCase(fixtureVolume());
  });

  it("slice index clamps to volume bounds", () => {
    app.state!.slice = 99;
    expect(app.state!.slice).toBe(15);
    app.state!.slice = -4;
    expect(app.state!.slice).toBe(0);
  });

  it("overlay opacity clamps to [0, 1]", () => {
    app.state!.overlayOpacity = 1.7;
    expect(app.state!.overlayOpacity).toBe(1);
    app.state!.overlayOpacity = -2;
    expect(app.state!.overlayOpacity).toBe(0);
  });
});

function sum(mask: Uint8Array): number {
  let total = 0;
  for (const v of mask) total += v;
  return total;
}
