/**
 * Browser bootstrap: wires the store, renderers and DOM events together.
 * All selection math happens server-side; this file only routes events.
 */

import { ApiClient } from './api.js';
import { AllocationEditor } from './allocation.js';
import {
  FilterMode,
  SortDirection,
  SortKey,
  buildRows,
  remainingSlots,
  togglePick,
} from './candidates.js';
import {
  renderAllocationPanel,
  renderCandidateTable,
  renderConflictBanner,
  renderErrors,
  renderSessionHeader,
  renderUdHeader,
  renderWeightsPanel,
} from './render.js';
import { SessionStore } from './store.js';
import { normalizeWeights } from './weights.js';

interface UiState {
  sortKey: SortKey;
  direction: SortDirection;
  filter: FilterMode;
}

const ui: UiState = { sortKey: 'composite', direction: 'desc', filter: 'all' };

function apiBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get('api') ?? 'http://127.0.0.1:8877';
}

const api = new ApiClient(apiBase());
const store = new SessionStore(api);
let allocation: AllocationEditor | null = null;

function root(): HTMLElement {
  const el = document.getElementById('app');
  if (!el) throw new Error('missing #app element');
  return el;
}

function render(): void {
  const view = store.view;
  if (!view) return;
  allocation = allocation ?? new AllocationEditor(view);
  const summaries = new Map(view.summary.ud.map((doc) => [doc.ud_code, doc]));
  const blocks = view.uds
    .map((block) => {
      const edits = store.editsFor(block.ud_code);
      const rows = buildRows(block, edits, {
        sortKey: ui.sortKey,
        direction: ui.direction,
        filter: ui.filter,
        changedIds: store.changed.get(block.ud_code),
      });
      return (
        renderUdHeader(block, remainingSlots(block, edits)) +
        renderCandidateTable(block, rows)
      );
    })
    .join('');
  root().innerHTML = [
    store.conflict ? renderConflictBanner(store.conflict.message) : '',
    renderErrors(store.errors),
    renderSessionHeader(view, store.canFinalize()),
    renderWeightsPanel(view.weights),
    renderAllocationPanel(allocation, summaries),
    `<section class="filter">
       <label>filter
         <select data-filter>
           <option value="all">all candidates</option>
           <option value="intersection">intersection only</option>
           <option value="picked">picked only</option>
         </select>
       </label>
     </section>`,
    blocks,
  ].join('\n');
  const filterEl = root().querySelector<HTMLSelectElement>('[data-filter]');
  if (filterEl) filterEl.value = ui.filter;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get('session');
  if (sessionId) {
    store.applyView(await api.getSession(sessionId));
  } else {
    const institutions = await api.listInstitutions();
    const withStaff = institutions.find((i) => i.ud_codes.length > 0);
    if (!withStaff) throw new Error('no institution with a staff roster');
    store.applyView(await api.createSession(withStaff.institution_id));
  }
  render();
}

function onClick(event: Event): void {
  const target = event.target as HTMLElement;
  const toggle = target.getAttribute('data-toggle');
  if (toggle) {
    const table = target.closest('table[data-ud]');
    const ud = Number(table?.getAttribute('data-ud'));
    const block = store.view?.uds.find((b) => b.ud_code === ud);
    if (!block) return;
    const manualOut = store.view?.manual_out[String(ud)] ?? [];
    const result = togglePick(block, store.editsFor(ud), toggle, manualOut);
    if (!result.ok) window.alert(result.message);
    render();
    return;
  }
  const sortKey = target.getAttribute('data-sort') as SortKey | null;
  if (sortKey) {
    if (ui.sortKey === sortKey) {
      ui.direction = ui.direction === 'desc' ? 'asc' : 'desc';
    } else {
      ui.sortKey = sortKey;
      ui.direction = 'desc';
    }
    render();
    return;
  }
  const action = target.getAttribute('data-action');
  if (!action) return;
  void (async () => {
    switch (action) {
      case 'save-picks':
        await store.saveManualEdits();
        break;
      case 'save-weights': {
        const raw = [0, 1, 2].map((i) => {
          const slider = root().querySelector<HTMLInputElement>(
            `[data-weight-slider="${i}"]`,
          );
          return slider ? Number(slider.value) : 0;
        });
        await store.saveWeights(normalizeWeights(raw));
        break;
      }
      case 'save-quotas': {
        const changes = allocation?.changes();
        if (changes) {
          const outcome = await store.saveQuotas(changes);
          if (outcome.kind === 'ok') allocation = null; // rebuild from fresh view
        }
        break;
      }
      case 'reload':
        await store.reload();
        allocation = null;
        break;
      case 'export': {
        const view = store.view;
        if (view) {
          const outcome = await api.exportSession(view.session_id);
          if (outcome.kind === 'blocked') {
            store.errors = outcome.reasons;
          } else {
            store.applyView(await api.getSession(view.session_id));
          }
        }
        break;
      }
    }
    render();
  })();
}

function onInput(event: Event): void {
  const target = event.target as HTMLInputElement;
  const quotaUd = target.getAttribute('data-quota-slider');
  if (quotaUd && allocation) {
    const applied = allocation.setQuota(Number(quotaUd), Number(target.value));
    target.value = String(applied); // slider blocks at the pool size
    render();
    return;
  }
  if (target.hasAttribute('data-filter')) {
    ui.filter = target.value as FilterMode;
    render();
  }
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  document.addEventListener('click', onClick);
  document.addEventListener('input', onInput);
  boot().catch((error) => {
    root().innerHTML = `<p class="errors">failed to start: ${String(error)}</p>`;
  });
}
