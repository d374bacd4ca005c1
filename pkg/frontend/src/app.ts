/** Headless application core: gestures in, API calls out, state updated.
 *
 * The DOM layer (main.ts) renders whatever this class holds; tests drive
 * it directly with a mocked fetch. One prompt request is in flight at a
 * time — placePrompt() rejects re-entry while awaiting the server, which
 * is what disables the tools in the UI.
 */

import { ApiClient, ApiError } from "./api.js";
import { clickToPoint, dragToBox, isClosedPath, pathToLasso,
         pathToScribble } from "./gestures.js";
import { decodeRle, maskPlane, type RleMask } from "./rle.js";
import type { Prompt } from "./schema.js";
import { validatePrompt } from "./schema.js";
import { ViewerState } from "./viewer.js";

export type Gesture =
  | { type: "click"; y: number; x: number; radius?: number }
  | { type: "rect"; a: [number, number]; b: [number, number] }
  | { type: "path"; points: [number, number][]; thickness?: number };

export class App {
  state: ViewerState | null = null;
  mask: Uint8Array | null = null;       // full decoded 3D mask, C order
  maskShape: number[] | null = null;
  error: string | null = null;
  busy = false;

  constructor(private api: ApiClient) {}

  /** Upload a NIfTI file and open a session on its preprocessed volume. */
  async openCase(volume: ArrayBuffer | Uint8Array): Promise<void> {
    this.error = null;
    try {
      const info = await this.api.createSession(volume);
      this.state = new ViewerState(info.session_id, info.shape);
      this.mask = null;
      this.maskShape = null;
    } catch (e) {
      this.state = null;
      this.error = this.describe(e);
      throw e;
    }
  }

  /** Convert a gesture on the current slice into a prompt, post it, and
   *  refresh the overlay. Invalid gestures never reach the server. */
  async placePrompt(gesture: Gesture): Promise<Prompt> {
    const state = this.required();
    if (this.busy) {
      throw new Error("a prompt request is already in flight");
    }
    let prompt: Prompt;
    try {
      prompt = this.toPrompt(gesture, state.slice);
    } catch (e) {
      this.error = this.describe(e);
      throw e;
    }
    const problems = validatePrompt(prompt);
    if (problems.length > 0) {
      this.error = problems.join("; ");
      throw new Error(this.error);
    }

    this.busy = true;
    this.error = null;
    try {
      const result = await this.api.addPrompt(state.sessionId, prompt);
      state.pushRound(result.round, result.changed_voxels,
                      `${prompt.polarity} ${prompt.kind}`);
      await this.refreshMask();
      return prompt;
    } catch (e) {
      this.error = this.describe(e);   // overlay and rounds stay as they were
      throw e;
    } finally {
      this.busy = false;
    }
  }

  async undo(): Promise<void> {
    const state = this.required();
    try {
      const round = await this.api.undo(state.sessionId);
      state.popRound();
      if (round === 0) {
        this.mask = null;
        this.maskShape = null;
      } else {
        await this.refreshMask();
      }
      this.error = null;
    } catch (e) {
      this.error = this.describe(e);
      throw e;
    }
  }

  async exportMask(): Promise<ArrayBuffer> {
    const state = this.required();
    try {
      return await this.api.exportMask(state.sessionId);
    } catch (e) {
      this.error = this.describe(e);
      throw e;
    }
  }

  /** Overlay pixels for the current slice, or null before any prediction. */
  overlayPlane(): Uint8Array | null {
    if (!this.state || !this.mask || !this.maskShape) {
      return null;
    }
    return maskPlane(this.mask, this.maskShape, this.state.slice);
  }

  private async refreshMask(): Promise<void> {
    const state = this.required();
    const rle: RleMask = await this.api.getMask(state.sessionId);
    this.mask = decodeRle(rle);
    this.maskShape = rle.shape;
  }

  private toPrompt(gesture: Gesture, z: number): Prompt {
    const state = this.required();
    switch (gesture.type) {
      case "click":
        return clickToPoint(z, gesture.y, gesture.x, gesture.radius ?? 2,
                            state.polarity);
      case "rect":
        return dragToBox(z, gesture.a, gesture.b, state.polarity);
      case "path":
        return isClosedPath(gesture.points)
          ? pathToLasso(z, gesture.points, state.polarity)
          : pathToScribble(z, gesture.points, gesture.thickness ?? 1,
                           state.polarity);
    }
  }

  private required(): ViewerState {
    if (!this.state) {
      throw new Error("no open session");
    }
    return this.state;
  }

  private describe(e: unknown): string {
    if (e instanceof ApiError) {
      return `server rejected the request (${e.status}): ${e.message}`;
    }
    return e instanceof Error ? e.message : String(e);
  }
}
