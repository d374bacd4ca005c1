/** Pure viewer state: everything the UI shows, nothing about the DOM.
 *
 * Invariants are enforced on mutation: the slice index stays within the
 * volume bounds and overlay opacity stays in [0, 1].
 */

export type Tool = "point" | "box" | "lasso" | "scribble";
export type Polarity = "positive" | "negative";

export interface RoundEntry {
  round: number;
  changedVoxels: number;
  description: string;
}

export class ViewerState {
  readonly sessionId: string;
  readonly shape: number[];
  windowLo: number | null = null;   // null -> server picks min/max
  windowHi: number | null = null;
  tool: Tool = "point";
  polarity: Polarity = "positive";
  rounds: RoundEntry[] = [];
  private _slice: number;
  private _opacity = 0.5;

  constructor(sessionId: string, shape: number[]) {
    if (shape.length !== 3 || shape.some((s) => !Number.isInteger(s) || s <= 0)) {
      throw new Error(`bad volume shape [${shape.join(", ")}]`);
    }
    this.sessionId = sessionId;
    this.shape = shape.slice();
    this._slice = Math.floor(shape[0]! / 2);
  }

  get slice(): number {
    return this._slice;
  }

  set slice(z: number) {
    const nz = this.shape[0]!;
    this._slice = Math.min(Math.max(Math.round(z), 0), nz - 1);
  }

  get overlayOpacity(): number {
    return this._opacity;
  }

  set overlayOpacity(v: number) {
    this._opacity = Math.min(Math.max(v, 0), 1);
  }

  get round(): number {
    return this.rounds.length === 0
      ? 0 : this.rounds[this.rounds.length - 1]!.round;
  }

  pushRound(round: number, changedVoxels: number, description: string): void {
    this.rounds.push({ round, changedVoxels, description });
  }

  popRound(): void {
    this.rounds.pop();
  }
}
