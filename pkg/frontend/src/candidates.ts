/**
 * Candidate table view-models: sorting, filtering and pick toggling.
 *
 * Unsaved toggles live in a PendingEdits structure until an explicit save;
 * every displayed value is passed through from the server row untouched.
 */

import type { CandidateRow, UdBlock } from './types.js';

export type SortKey = 'composite' | 'jir' | 'air' | 'aii' | 'year' | 'pub_id';
export type SortDirection = 'asc' | 'desc';
export type FilterMode = 'all' | 'intersection' | 'picked';

export interface PendingEdits {
  addIn: Set<string>; // stage as manual picks
  dropIn: Set<string>; // remove existing manual picks
  addOut: Set<string>; // exclude current default picks
  dropOut: Set<string>; // re-admit previously excluded publications
}

export function emptyEdits(): PendingEdits {
  return { addIn: new Set(), dropIn: new Set(), addOut: new Set(), dropOut: new Set() };
}

export function hasEdits(edits: PendingEdits): boolean {
  return (
    edits.addIn.size + edits.dropIn.size + edits.addOut.size + edits.dropOut.size > 0
  );
}

export interface RowVM {
  row: CandidateRow;
  /** pick state after applying unsaved toggles */
  effectivePicked: boolean;
  pending: boolean;
  changed: boolean;
}

export function effectivePicked(row: CandidateRow, edits: PendingEdits): boolean {
  if (edits.addIn.has(row.pub_id)) return true;
  if (row.picked && row.pick_source === 'manual' && edits.dropIn.has(row.pub_id)) {
    return false;
  }
  if (row.picked && row.pick_source === 'default' && edits.addOut.has(row.pub_id)) {
    return false;
  }
  return row.picked;
}

export function effectivePickCount(block: UdBlock, edits: PendingEdits): number {
  return block.candidates.filter((row) => effectivePicked(row, edits)).length;
}

export function remainingSlots(block: UdBlock, edits: PendingEdits): number {
  return block.quota - effectivePickCount(block, edits);
}

export type ToggleResult =
  | { ok: true }
  | { ok: false; message: string };

/**
 * Toggle one row's pick state in place. Adding a pick beyond the quota is
 * rejected with the remaining-slot count; a second toggle reverts a still
 * unsaved change.
 */
export function togglePick(
  block: UdBlock,
  edits: PendingEdits,
  pubId: string,
  manualOut: readonly string[],
): ToggleResult {
  const row = block.candidates.find((candidate) => candidate.pub_id === pubId);
  if (!row) {
    return { ok: false, message: `unknown candidate ${pubId}` };
  }
  if (edits.addIn.has(pubId)) {
    edits.addIn.delete(pubId);
    return { ok: true };
  }
  if (edits.dropIn.has(pubId)) {
    edits.dropIn.delete(pubId);
    return { ok: true };
  }
  if (edits.addOut.has(pubId)) {
    edits.addOut.delete(pubId);
    return { ok: true };
  }
  if (row.picked) {
    if (row.pick_source === 'manual') {
      edits.dropIn.add(pubId);
    } else {
      edits.addOut.add(pubId);
    }
    return { ok: true };
  }
  // unpicked: re-admit an excluded publication, or stage a manual pick
  if (manualOut.includes(pubId) && !edits.dropOut.has(pubId)) {
    edits.dropOut.add(pubId);
    return { ok: true };
  }
  const remaining = remainingSlots(block, edits);
  if (remaining <= 0) {
    return {
      ok: false,
      message: `quota reached for UD ${block.ud_code}: 0 of ${block.quota} slots remaining`,
    };
  }
  edits.addIn.add(pubId);
  return { ok: true };
}

const sortValue = (row: CandidateRow, key: SortKey): number | string => {
  switch (key) {
    case 'composite':
      return row.composite;
    case 'jir':
      return row.jir ?? -1; // unranked journals sink to the bottom
    case 'air':
      return row.air;
    case 'aii':
      return row.aii;
    case 'year':
      return row.year;
    case 'pub_id':
      return row.pub_id;
  }
};

export function sortRows(
  rows: CandidateRow[],
  key: SortKey,
  direction: SortDirection = 'desc',
): CandidateRow[] {
  const sign = direction === 'desc' ? 1 : -1;
  return [...rows].sort((a, b) => {
    const va = sortValue(a, key);
    const vb = sortValue(b, key);
    if (va < vb) return sign;
    if (va > vb) return -sign;
    return a.pub_id < b.pub_id ? -1 : a.pub_id > b.pub_id ? 1 : 0;
  });
}

export function filterRows(
  rows: CandidateRow[],
  mode: FilterMode,
  edits: PendingEdits,
): CandidateRow[] {
  switch (mode) {
    case 'all':
      return rows;
    case 'intersection':
      return rows.filter((row) => row.in_intersection);
    case 'picked':
      return rows.filter((row) => effectivePicked(row, edits));
  }
}

/**
 * Build the final view-models for a block: filter, sort, mark pending and
 * changed rows. `changedIds` carries publications whose pick state moved in
 * the last server response (highlighted after weight changes).
 */
export function buildRows(
  block: UdBlock,
  edits: PendingEdits,
  options: {
    sortKey?: SortKey;
    direction?: SortDirection;
    filter?: FilterMode;
    changedIds?: ReadonlySet<string>;
  } = {},
): RowVM[] {
  const { sortKey = 'composite', direction = 'desc', filter = 'all' } = options;
  const changed = options.changedIds ?? new Set<string>();
  const visible = filterRows(sortRows(block.candidates, sortKey, direction), filter, edits);
  return visible.map((row) => ({
    row,
    effectivePicked: effectivePicked(row, edits),
    pending:
      edits.addIn.has(row.pub_id) ||
      edits.dropIn.has(row.pub_id) ||
      edits.addOut.has(row.pub_id) ||
      edits.dropOut.has(row.pub_id),
    changed: changed.has(row.pub_id),
  }));
}

/** Publications whose pick state differs between two server views of a block. */
export function changedPicks(before: UdBlock | undefined, after: UdBlock): Set<string> {
  const changed = new Set<string>();
  if (!before) return changed;
  const previous = new Map(before.candidates.map((row) => [row.pub_id, row.picked]));
  for (const row of after.candidates) {
    if ((previous.get(row.pub_id) ?? false) !== row.picked) {
      changed.add(row.pub_id);
    }
  }
  return changed;
}
