/**
 * HTML renderers. Pure string builders so they are testable without a DOM;
 * numbers are formatted for display only, always from server-provided values.
 */

import type { AllocationEditor } from './allocation.js';
import type { RowVM } from './candidates.js';
import type { SessionView, UdBlock, UdSummaryDoc } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

export function fmt(value: number | null | undefined, decimals = 2): string {
  return value === null || value === undefined ? '–' : value.toFixed(decimals);
}

export function renderCandidateTable(block: UdBlock, rows: RowVM[]): string {
  const head = `
    <thead><tr>
      <th></th>
      <th data-sort="pub_id">publication</th>
      <th>year</th>
      <th>sector</th>
      <th data-sort="jir">JIR</th>
      <th data-sort="air">AIR</th>
      <th data-sort="aii">AII</th>
      <th data-sort="composite">composite</th>
      <th>set</th>
    </tr></thead>`;
  const body = rows
    .map((vm) => {
      const r = vm.row;
      const classes = [
        r.in_intersection ? 'intersection' : '',
        vm.effectivePicked ? 'picked' : '',
        vm.pending ? 'pending' : '',
        vm.changed ? 'changed' : '',
      ]
        .filter(Boolean)
        .join(' ');
      return `
    <tr class="${classes}" data-pub-id="${escapeHtml(r.pub_id)}">
      <td><input type="checkbox" data-toggle="${escapeHtml(r.pub_id)}"
           ${vm.effectivePicked ? 'checked' : ''}></td>
      <td><code>${escapeHtml(r.pub_id)}</code> ${escapeHtml(r.title)}</td>
      <td>${r.year}</td>
      <td>${escapeHtml(r.sector_code)}</td>
      <td data-col="jir">${fmt(r.jir)}</td>
      <td data-col="air">${fmt(r.air)}</td>
      <td data-col="aii">${fmt(r.aii)}</td>
      <td data-col="composite">${fmt(r.composite)}</td>
      <td>${r.in_intersection ? '∩' : '∪'}</td>
    </tr>`;
    })
    .join('');
  return `<table class="candidates" data-ud="${block.ud_code}">${head}<tbody>${body}</tbody></table>`;
}

export function renderUdHeader(block: UdBlock, remaining: number): string {
  const shortfall = block.shortfall ? ' <span class="warn">shortfall</span>' : '';
  const deficit = block.deficit
    ? ` <span class="warn">deficit ${block.deficit}</span>`
    : '';
  return `
  <header class="ud-header" data-ud="${block.ud_code}">
    <h2>UD ${block.ud_code}</h2>
    <span data-col="quota">quota ${block.quota}</span>
    <span>pool ${block.pool_size}</span>
    <span>k=${block.k}</span>
    <span>sets ${block.set_sizes.jir}/${block.set_sizes.air}/${block.set_sizes.aii}</span>
    <span>∩ ${block.intersection_size}</span>
    <span data-col="remaining">slots left ${remaining}</span>${shortfall}${deficit}
  </header>`;
}

export function renderAllocationPanel(
  editor: AllocationEditor,
  summaries: Map<number, UdSummaryDoc>,
): string {
  const rows = editor
    .udCodes()
    .map((ud) => {
      const doc = summaries.get(ud);
      const means = doc
        ? `<td>${fmt(doc.averages.intersection.jir)}/${fmt(doc.averages.intersection.air)}/` +
          `${fmt(doc.averages.intersection.aii)}</td>` +
          `<td>${fmt(doc.averages.candidates.jir)}/${fmt(doc.averages.candidates.air)}/` +
          `${fmt(doc.averages.candidates.aii)}</td>`
        : '<td>–</td><td>–</td>';
      return `
    <tr data-ud="${ud}">
      <td>UD ${ud}</td>
      <td><input type="range" data-quota-slider="${ud}" min="0"
           max="${editor.poolSize(ud)}" value="${editor.quota(ud)}">
          <output data-quota-value="${ud}">${editor.quota(ud)}</output>
          / ${editor.poolSize(ud)}</td>
      ${means}
    </tr>`;
    })
    .join('');
  const remaining = editor.remaining();
  const balanced = editor.isBalanced();
  return `
  <section class="allocation">
    <h2>Quota allocation</h2>
    <table>
      <thead><tr><th>UD</th><th>quota / pool</th>
        <th>∩ means (JIR/AIR/AII)</th><th>∪ means</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    <p data-col="allocation-remaining" class="${balanced ? '' : 'warn'}">
      unallocated: ${remaining}</p>
    <button data-action="save-quotas" ${balanced && editor.hasChanges() ? '' : 'disabled'}>
      Save allocation</button>
  </section>`;
}

export function renderWeightsPanel(weights: readonly number[]): string {
  const labels = ['JIR', 'AIR', 'AII'];
  const sliders = labels
    .map(
      (label, i) => `
    <label>${label}
      <input type="range" data-weight-slider="${i}" min="0" max="100"
             value="${Math.round((weights[i] ?? 0) * 100)}">
      <output data-weight-value="${i}">${fmt(weights[i] ?? 0, 2)}</output>
    </label>`,
    )
    .join('');
  return `
  <section class="weights">
    <h2>Indicator weights</h2>
    ${sliders}
    <button data-action="save-weights">Apply weights</button>
  </section>`;
}

export function renderConflictBanner(message: string): string {
  return `
  <div class="conflict-banner" role="alert">
    <strong>Edit conflict.</strong> ${escapeHtml(message)}
    <button data-action="reload">Reload session</button>
  </div>`;
}

export function renderErrors(errors: readonly string[]): string {
  if (!errors.length) return '';
  const items = errors.map((e) => `<li>${escapeHtml(e)}</li>`).join('');
  return `<ul class="errors">${items}</ul>`;
}

export function renderSessionHeader(view: SessionView, canFinalize: boolean): string {
  return `
  <header class="session-header">
    <h1>${escapeHtml(view.institution_id)}</h1>
    <span data-col="global-quota">global quota ${view.global_quota}</span>
    <span>version ${view.version}</span>
    ${view.finalized ? '<span class="badge">finalized</span>' : ''}
    <button data-action="save-picks">Save picks</button>
    <button data-action="export" ${canFinalize ? '' : 'disabled'}>Finalize &amp; export</button>
  </header>`;
}
