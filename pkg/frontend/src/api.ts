/** Typed client for the /v1 session API.
 *
 * Every non-2xx response carries {"error": message}; ApiError surfaces
 * both the status and that message so the UI can show it inline.
 */

import type { Prompt } from "./schema.js";
import type { RleMask } from "./rle.js";

export interface SessionInfo {
  session_id: string;
  shape: number[];
  spacing: number[];
  rounds: number;
}

export interface PromptResult {
  round: number;
  changed_voxels: number;
  mask_version: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(private base: string = "",
              private fetchImpl: FetchLike = fetch.bind(globalThis)) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let message = `HTTP ${response.status}`;
      try {
        const body = await response.json();
        if (body && typeof body.error === "string") message = body.error;
      } catch { /* non-JSON error body; keep the status text */ }
      throw new ApiError(response.status, message);
    }
    return response;
  }

  async health(): Promise<boolean> {
    const r = await this.request("/v1/health");
    return (await r.json()).status === "ok";
  }

  /** Upload a NIfTI volume; the server preprocesses and opens a session. */
  async createSession(volume: ArrayBuffer | Uint8Array): Promise<SessionInfo> {
    const body = volume instanceof Uint8Array
      ? volume.slice().buffer as ArrayBuffer : volume;
    const r = await this.request("/v1/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/octet-stream" },
      body,
    });
    return r.json();
  }

  async addPrompt(sessionId: string, prompt: Prompt): Promise<PromptResult> {
    const r = await this.request(`/v1/sessions/${sessionId}/prompts`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(prompt),
    });
    return r.json();
  }

  async getMask(sessionId: string, slice?: number): Promise<RleMask> {
    const query = slice === undefined ? "" : `?slice=${slice}`;
    const r = await this.request(`/v1/sessions/${sessionId}/mask${query}`);
    return r.json();
  }

  sliceUrl(sessionId: string, z: number, window?: [number, number]): string {
    const query = window ? `?window=${window[0]},${window[1]}` : "";
    return `${this.base}/v1/sessions/${sessionId}/slice/${z}${query}`;
  }

  async undo(sessionId: string): Promise<number> {
    const r = await this.request(`/v1/sessions/${sessionId}/undo`,
                                 { method: "POST" });
    return (await r.json()).round;
  }

  /** Download the current mask as NIfTI bytes in the original geometry. */
  async exportMask(sessionId: string): Promise<ArrayBuffer> {
    const r = await this.request(`/v1/sessions/${sessionId}/export`);
    return r.arrayBuffer();
  }

  async deleteSession(sessionId: string): Promise<void> {
    await this.request(`/v1/sessions/${sessionId}`, { method: "DELETE" });
  }
}
