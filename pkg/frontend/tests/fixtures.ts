/**
 * Mock payloads and a tiny in-memory API double.
 *
 * The mock PATCH recomputes composite ordering the way the server documents
 * it for pure-weight cases, bumps the version, and reports 409 on stale
 * versions, so client behavior can be tested without the real service.
 */

import type {
  CandidateRow,
  SessionPatch,
  SessionView,
  UdBlock,
  UdSummaryDoc,
} from '../src/types';
import type { FetchLike } from '../src/api';

export function candidate(partial: Partial<CandidateRow> & { pub_id: string }): CandidateRow {
  return {
    title: `Title of ${partial.pub_id}`,
    year: 2004,
    sector_code: 'Optics',
    jir: 50,
    air: 50,
    aii: 1,
    composite: 50,
    in_intersection: false,
    picked: false,
    pick_source: null,
    ...partial,
  };
}

export function block(
  udCode: number,
  quota: number,
  candidates: CandidateRow[],
  partial: Partial<UdBlock> = {},
): UdBlock {
  const picked = candidates.filter((c) => c.picked).length;
  return {
    ud_code: udCode,
    quota,
    pool_size: candidates.length + 4,
    k: 3,
    shortfall: false,
    set_sizes: { jir: 3, air: 3, aii: 3 },
    intersection_size: candidates.filter((c) => c.in_intersection).length,
    candidate_count: candidates.length,
    deficit: Math.max(0, quota - picked),
    candidates,
    ...partial,
  };
}

function summaryFor(blocks: UdBlock[]): SessionView['summary'] {
  const ud: UdSummaryDoc[] = blocks.map((b) => ({
    ud_code: b.ud_code,
    fte: b.quota * 4,
    quota: b.quota,
    production: b.pool_size,
    quota_share_pct: (100 * b.quota) / b.pool_size,
    candidates: b.candidate_count,
    candidate_share_pct: (100 * b.candidate_count) / b.pool_size,
    candidates_per_quota: b.quota ? b.candidate_count / b.quota : null,
    k: b.k,
    shortfall: b.shortfall,
    set_sizes: b.set_sizes,
    intersection_size: b.intersection_size,
    averages: {
      candidates: { n: b.candidate_count, jir: 61.5, air: 58.25, aii: 1.42 },
      intersection: { n: b.intersection_size, jir: 77.25, air: 74.5, aii: 2.08 },
    },
    years: [
      { year: 2004, selected: 1, selected_share_pct: 100 / 3, production: 3, production_share_pct: 100 / 3 },
      { year: 2005, selected: 1, selected_share_pct: 100 / 3, production: 3, production_share_pct: 100 / 3 },
      { year: 2006, selected: 1, selected_share_pct: 100 / 3, production: 3, production_share_pct: 100 / 3 },
    ],
    sectors: [
      { sector_code: 'Optics', selected: 2, selected_share_pct: 50, production: 6, production_share_pct: 50 },
      { sector_code: 'Mechanics', selected: 2, selected_share_pct: 50, production: 6, production_share_pct: 50 },
    ],
    pearson_r: 0.97,
  }));
  return {
    institution_id: 'UMIL',
    ratio: 0.25,
    global_quota: blocks.reduce((sum, b) => sum + b.quota, 0),
    weights: [1 / 3, 1 / 3, 1 / 3],
    ud,
    totals: {
      fte: ud.reduce((s, d) => s + d.fte, 0),
      quota: ud.reduce((s, d) => s + d.quota, 0),
      production: ud.reduce((s, d) => s + d.production, 0),
      quota_share_pct: 5.2,
      candidates: ud.reduce((s, d) => s + d.candidates, 0),
      candidate_share_pct: 25.2,
      candidates_per_quota: 4.8,
    },
  };
}

export function makeView(blocks?: UdBlock[]): SessionView {
  const uds = blocks ?? [
    block(1, 2, [
      candidate({ pub_id: 'a', jir: 90.5, air: 30, aii: 3.5, composite: 61.5, in_intersection: true, picked: true, pick_source: 'default' }),
      candidate({ pub_id: 'b', jir: 70, air: 80.25, aii: 2.25, composite: 58.4, in_intersection: true, picked: true, pick_source: 'default' }),
      candidate({ pub_id: 'c', jir: null, air: 95, aii: 4.1, composite: 55.1, in_intersection: false }),
      candidate({ pub_id: 'd', jir: 40, air: 60, aii: 1.75, composite: 47.2, in_intersection: true }),
    ]),
    block(2, 1, [
      candidate({ pub_id: 'x', jir: 88, air: 77, aii: 2.9, composite: 70.0, in_intersection: true, picked: true, pick_source: 'default' }),
      candidate({ pub_id: 'y', jir: 12, air: 22, aii: 0.4, composite: 18.9, in_intersection: false }),
    ]),
  ];
  return {
    session_id: 'sess-1',
    institution_id: 'UMIL',
    ratio: 0.25,
    global_quota: uds.reduce((sum, b) => sum + b.quota, 0),
    per_ud: Object.fromEntries(uds.map((b) => [String(b.ud_code), b.quota])),
    weights: [1 / 3, 1 / 3, 1 / 3],
    version: 1,
    finalized: false,
    manual_in: {},
    manual_out: {},
    uds,
    summary: summaryFor(uds),
  };
}

const json = (body: unknown, status = 200): Response =>
  new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });

/** In-memory stand-in for the session service. */
export class MockServer {
  view: SessionView;
  patchCalls: Array<{ version: number; patch: SessionPatch }> = [];

  constructor(view: SessionView = makeView()) {
    this.view = view;
  }

  /** Simulate a concurrent edit from another client. */
  bumpVersionElsewhere(): void {
    this.view = { ...this.view, version: this.view.version + 1 };
  }

  private applyWeights(weights: [number, number, number]): void {
    // Mirror the documented server behavior for weight edits: composite is
    // the weighted blend, with a missing journal ranking contributing zero.
    // The impact-index percentile term only matters to these tests through
    // pure (1,0,0)/(0,1,0) weights, so aii enters via its pool percentile.
    const [wJir, wAir, wAii] = weights;
    const uds = this.view.uds.map((b) => {
      const aiiSorted = [...b.candidates].map((c) => c.aii).sort((p, q) => p - q);
      const pctl = (v: number) =>
        (100 * aiiSorted.filter((o) => o < v).length) / aiiSorted.length;
      const candidates = b.candidates
        .map((c) => ({
          ...c,
          composite: wJir * (c.jir ?? 0) + wAir * c.air + wAii * pctl(c.aii),
        }))
        .sort((p, q) => q.composite - p.composite || (p.pub_id < q.pub_id ? -1 : 1));
      const picked = candidates.map((c, i) => ({
        ...c,
        picked: i < b.quota && c.in_intersection,
        pick_source: (i < b.quota && c.in_intersection ? 'default' : null) as
          | 'default'
          | null,
      }));
      return { ...b, candidates: picked };
    });
    this.view = { ...this.view, uds, weights };
  }

  fetch: FetchLike = async (input, init) => {
    const method = init?.method ?? 'GET';
    const url = new URL(input, 'http://mock');
    const path = url.pathname;
    if (path === '/institutions') {
      return json({
        institutions: [
          {
            institution_id: 'UMIL',
            canonical_name: 'Università degli Studi di Milano',
            kind: 'university',
            fte_total: 1670,
            ud_codes: [1, 2],
          },
        ],
      });
    }
    if (method === 'POST' && path === '/sessions') {
      return json(this.view, 201);
    }
    if (method === 'GET' && path === `/sessions/${this.view.session_id}`) {
      return json(this.view);
    }
    if (method === 'PATCH' && path === `/sessions/${this.view.session_id}`) {
      const body = JSON.parse(String(init?.body)) as {
        version: number;
        patch: SessionPatch;
      };
      this.patchCalls.push(body);
      if (body.version !== this.view.version) {
        return json(
          { detail: { error: 'version conflict', current_version: this.view.version } },
          409,
        );
      }
      if (body.patch.quotas) {
        const perUd = { ...this.view.per_ud, ...body.patch.quotas };
        const total = Object.values(perUd).reduce((s, q) => s + q, 0);
        if (total !== this.view.global_quota) {
          return json(
            { detail: { error: 'invalid patch', reasons: ['quotas: sum mismatch'] } },
            422,
          );
        }
        this.view = { ...this.view, per_ud: perUd };
      }
      if (body.patch.weights) {
        this.applyWeights(body.patch.weights);
      }
      if (body.patch.manual_in) {
        this.view = { ...this.view, manual_in: body.patch.manual_in };
      }
      if (body.patch.manual_out) {
        this.view = { ...this.view, manual_out: body.patch.manual_out };
      }
      this.view = { ...this.view, version: this.view.version + 1 };
      return json(this.view);
    }
    return json({ detail: 'not found' }, 404);
  };
}
