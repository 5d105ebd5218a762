/**
 * Quota reallocation editor backing the per-discipline sliders.
 *
 * Edits clamp to [0, pool size]; the save patch is only available when the
 * working quotas still sum to the global total (zero-sum rule).
 */

import type { SessionView } from './types.js';

export class AllocationEditor {
  private readonly original: Map<number, number>;
  private readonly working: Map<number, number>;
  private readonly poolSizes: Map<number, number>;
  readonly globalQuota: number;

  constructor(view: SessionView) {
    this.globalQuota = view.global_quota;
    this.original = new Map(
      Object.entries(view.per_ud).map(([ud, quota]) => [Number(ud), quota]),
    );
    this.working = new Map(this.original);
    this.poolSizes = new Map(view.uds.map((block) => [block.ud_code, block.pool_size]));
  }

  udCodes(): number[] {
    return [...this.working.keys()].sort((a, b) => a - b);
  }

  quota(ud: number): number {
    return this.working.get(ud) ?? 0;
  }

  poolSize(ud: number): number {
    return this.poolSizes.get(ud) ?? 0;
  }

  /** Set one discipline's quota, clamped to [0, pool size]; returns the applied value. */
  setQuota(ud: number, value: number): number {
    if (!this.working.has(ud)) {
      throw new Error(`unknown UD ${ud}`);
    }
    const clamped = Math.max(0, Math.min(Math.round(value), this.poolSize(ud)));
    this.working.set(ud, clamped);
    return clamped;
  }

  adjust(ud: number, delta: number): number {
    return this.setQuota(ud, this.quota(ud) + delta);
  }

  /** Units still to place (positive) or over-placed (negative). */
  remaining(): number {
    let sum = 0;
    for (const quota of this.working.values()) sum += quota;
    return this.globalQuota - sum;
  }

  isBalanced(): boolean {
    return this.remaining() === 0;
  }

  hasChanges(): boolean {
    for (const [ud, quota] of this.working) {
      if (this.original.get(ud) !== quota) return true;
    }
    return false;
  }

  reset(): void {
    for (const [ud, quota] of this.original) this.working.set(ud, quota);
  }

  /** Patch payload with only the edited disciplines; null unless balanced. */
  changes(): Record<string, number> | null {
    if (!this.isBalanced() || !this.hasChanges()) return null;
    const edited: Record<string, number> = {};
    for (const [ud, quota] of this.working) {
      if (this.original.get(ud) !== quota) edited[String(ud)] = quota;
    }
    return edited;
  }
}
