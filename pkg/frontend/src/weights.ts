/**
 * Indicator weight sliders: raw slider positions normalize to a sum of 1
 * before any PATCH leaves the client.
 */

export type Weights = [number, number, number];

export function normalizeWeights(raw: readonly number[]): Weights {
  if (raw.length !== 3) {
    throw new Error(`expected three weights, got ${raw.length}`);
  }
  const clamped = raw.map((w) => (Number.isFinite(w) && w > 0 ? w : 0));
  const total = clamped[0]! + clamped[1]! + clamped[2]!;
  if (total === 0) {
    return [1 / 3, 1 / 3, 1 / 3];
  }
  return [clamped[0]! / total, clamped[1]! / total, clamped[2]! / total];
}

export function weightsEqual(a: readonly number[], b: readonly number[], eps = 1e-9): boolean {
  return a.length === b.length && a.every((w, i) => Math.abs(w - (b[i] ?? NaN)) <= eps);
}
