/**
 * Workbench session state: the latest server view plus unsaved edits.
 *
 * Saving sends a PATCH carrying the current version. A 409 conflict never
 * overwrites anything: the pending edits stay staged, the stale view stays
 * on screen, and the caller must resolve explicitly (reload, which re-bases
 * the unsaved toggles onto the fresh view and reports any that no longer
 * apply).
 */

import type { ApiClient, PatchOutcome } from './api.js';
import type { SessionPatch, SessionView } from './types.js';
import {
  PendingEdits,
  changedPicks,
  emptyEdits,
  hasEdits,
} from './candidates.js';

export interface ConflictState {
  currentVersion: number;
  message: string;
}

export class SessionStore {
  view: SessionView | null = null;
  /** unsaved pick toggles per discipline */
  edits = new Map<number, PendingEdits>();
  conflict: ConflictState | null = null;
  errors: string[] = [];
  /** publications whose pick state changed in the last server response, per UD */
  changed = new Map<number, Set<string>>();

  constructor(private readonly api: ApiClient) {}

  editsFor(ud: number): PendingEdits {
    let edits = this.edits.get(ud);
    if (!edits) {
      edits = emptyEdits();
      this.edits.set(ud, edits);
    }
    return edits;
  }

  hasUnsavedEdits(): boolean {
    for (const edits of this.edits.values()) {
      if (hasEdits(edits)) return true;
    }
    return false;
  }

  /** Adopt a server view; highlights pick-state changes against the previous one. */
  applyView(view: SessionView, { clearEdits = false } = {}): void {
    const previous = this.view;
    this.changed = new Map();
    if (previous && previous.session_id === view.session_id) {
      for (const block of view.uds) {
        const before = previous.uds.find((b) => b.ud_code === block.ud_code);
        this.changed.set(block.ud_code, changedPicks(before, block));
      }
    }
    this.view = view;
    this.conflict = null;
    this.errors = [];
    if (clearEdits) {
      this.edits = new Map();
    } else {
      this.rebaseEdits();
    }
  }

  /** Drop staged toggles that no longer make sense against the current view. */
  private rebaseEdits(): void {
    const view = this.view;
    if (!view) return;
    const dropped: string[] = [];
    for (const block of view.uds) {
      const edits = this.edits.get(block.ud_code);
      if (!edits) continue;
      const rows = new Map(block.candidates.map((row) => [row.pub_id, row]));
      for (const id of [...edits.addIn]) {
        const row = rows.get(id);
        if (!row || row.picked) {
          edits.addIn.delete(id);
          if (!row) dropped.push(id);
        }
      }
      for (const id of [...edits.dropIn]) {
        const row = rows.get(id);
        if (!row || !(row.picked && row.pick_source === 'manual')) {
          edits.dropIn.delete(id);
        }
      }
      for (const id of [...edits.addOut]) {
        const row = rows.get(id);
        if (!row || !(row.picked && row.pick_source === 'default')) {
          edits.addOut.delete(id);
        }
      }
      const manualOut = new Set(view.manual_out[String(block.ud_code)] ?? []);
      for (const id of [...edits.dropOut]) {
        if (!manualOut.has(id)) edits.dropOut.delete(id);
      }
    }
    if (dropped.length) {
      this.errors = [`dropped stale toggles: ${dropped.join(', ')}`];
    }
  }

  /** Full manual maps implied by the server state plus unsaved toggles. */
  manualMaps(): { manual_in: Record<string, string[]>; manual_out: Record<string, string[]> } {
    const view = this.view;
    if (!view) throw new Error('no session loaded');
    const manualIn: Record<string, string[]> = {};
    const manualOut: Record<string, string[]> = {};
    for (const block of view.uds) {
      const ud = String(block.ud_code);
      const edits = this.edits.get(block.ud_code) ?? emptyEdits();
      const baseIn = new Set(view.manual_in[ud] ?? []);
      for (const id of edits.dropIn) baseIn.delete(id);
      for (const id of edits.addIn) baseIn.add(id);
      const baseOut = new Set(view.manual_out[ud] ?? []);
      for (const id of edits.dropOut) baseOut.delete(id);
      for (const id of edits.addOut) baseOut.add(id);
      if (baseIn.size) manualIn[ud] = [...baseIn].sort();
      if (baseOut.size) manualOut[ud] = [...baseOut].sort();
    }
    return { manual_in: manualIn, manual_out: manualOut };
  }

  private async send(patch: SessionPatch): Promise<PatchOutcome> {
    const view = this.view;
    if (!view) throw new Error('no session loaded');
    const outcome = await this.api.patchSession(view.session_id, view.version, patch);
    switch (outcome.kind) {
      case 'ok':
        this.applyView(outcome.view, { clearEdits: 'manual_in' in patch });
        break;
      case 'conflict':
        // Keep everything: stale view on screen, unsaved edits staged.
        this.conflict = {
          currentVersion: outcome.currentVersion,
          message:
            `session changed elsewhere (server version ${outcome.currentVersion}); ` +
            'reload to continue, unsaved toggles are kept',
        };
        break;
      case 'invalid':
        this.errors = outcome.reasons;
        break;
    }
    return outcome;
  }

  async saveManualEdits(): Promise<PatchOutcome> {
    return this.send(this.manualMaps());
  }

  async saveWeights(weights: [number, number, number]): Promise<PatchOutcome> {
    return this.send({ weights });
  }

  async saveQuotas(quotas: Record<string, number>): Promise<PatchOutcome> {
    return this.send({ quotas });
  }

  /** Explicit conflict resolution: fetch the fresh view, re-base unsaved edits. */
  async reload(): Promise<SessionView> {
    const view = this.view;
    if (!view) throw new Error('no session loaded');
    const fresh = await this.api.getSession(view.session_id);
    this.applyView(fresh);
    return fresh;
  }

  /** Finalize enabled only when every discipline's deficit is zero. */
  canFinalize(): boolean {
    const view = this.view;
    if (!view || view.finalized) return false;
    return view.uds.every((block) => block.deficit === 0);
  }
}
