/** Run-length encoded binary masks, C order, flat [start, len, ...] runs. */

export interface RleMask {
  shape: number[];
  order: "C";
  runs: number[];
}

/** Expand an RLE payload into a flat Uint8Array (C order). */
export function decodeRle(obj: RleMask): Uint8Array {
  if (obj.order !== "C") {
    throw new Error("only C-order RLE is supported");
  }
  if (obj.runs.length % 2 !== 0) {
    throw new Error("runs must be [start, len, ...] pairs");
  }
  const total = obj.shape.reduce((a, b) => a * b, 1);
  const flat = new Uint8Array(total);
  let prevEnd = 0;
  for (let i = 0; i < obj.runs.length; i += 2) {
    const start = obj.runs[i]!;
    const length = obj.runs[i + 1]!;
    if (start < prevEnd || length <= 0 || start + length > total) {
      throw new Error(`invalid run (${start}, ${length})`);
    }
    flat.fill(1, start, start + length);
    prevEnd = start + length;
  }
  return flat;
}

/** Inverse of decodeRle; used by tests to round-trip masks exactly. */
export function encodeRle(flat: Uint8Array, shape: number[]): RleMask {
  const runs: number[] = [];
  let start = -1;
  for (let i = 0; i < flat.length; i++) {
    if (flat[i]! > 0 && start < 0) {
      start = i;
    } else if (flat[i] === 0 && start >= 0) {
      runs.push(start, i - start);
      start = -1;
    }
  }
  if (start >= 0) {
    runs.push(start, flat.length - start);
  }
  return { shape, order: "C", runs };
}

/** One axial plane (z fixed) of a decoded 3D mask as a 2D Uint8Array. */
export function maskPlane(flat: Uint8Array, shape: number[], z: number): Uint8Array {
  const [nz, ny, nx] = [shape[0]!, shape[1]!, shape[2]!];
  if (z < 0 || z >= nz) {
    throw new Error(`slice ${z} out of range`);
  }
  return flat.subarray(z * ny * nx, (z + 1) * ny * nx);
}
