/**
 * Payload types mirroring the session service schemas.
 *
 * The workbench is a thin client: these are the only sources of indicator,
 * quota and pick values. Nothing in src/ recomputes a score.
 */

export type PickSource = 'default' | 'manual';

export interface CandidateRow {
  pub_id: string;
  title: string;
  year: number;
  sector_code: string;
  jir: number | null;
  air: number;
  aii: number;
  composite: number;
  in_intersection: boolean;
  picked: boolean;
  pick_source: PickSource | null;
}

export interface UdBlock {
  ud_code: number;
  quota: number;
  pool_size: number;
  k: number;
  shortfall: boolean;
  set_sizes: { jir: number; air: number; aii: number };
  intersection_size: number;
  candidate_count: number;
  deficit: number;
  candidates: CandidateRow[];
}

export interface MeanTriple {
  n: number;
  jir: number | null;
  air: number | null;
  aii: number | null;
}

export interface UdSummaryDoc {
  ud_code: number;
  fte: number;
  quota: number;
  production: number;
  quota_share_pct: number | null;
  candidates: number;
  candidate_share_pct: number | null;
  candidates_per_quota: number | null;
  k: number;
  shortfall: boolean;
  set_sizes: { jir: number; air: number; aii: number };
  intersection_size: number;
  averages: { candidates: MeanTriple; intersection: MeanTriple };
  years: Array<{
    year: number;
    selected: number;
    selected_share_pct: number;
    production: number;
    production_share_pct: number;
  }>;
  sectors: Array<{
    sector_code: string;
    selected: number;
    selected_share_pct: number;
    production: number;
    production_share_pct: number;
  }>;
  pearson_r: number | null;
}

export interface SessionSummary {
  institution_id: string;
  ratio: number;
  global_quota: number;
  weights: number[];
  ud: UdSummaryDoc[];
  totals: {
    fte: number;
    quota: number;
    production: number;
    quota_share_pct: number | null;
    candidates: number;
    candidate_share_pct: number | null;
    candidates_per_quota: number | null;
  };
}

export interface SessionView {
  session_id: string;
  institution_id: string;
  ratio: number;
  global_quota: number;
  per_ud: Record<string, number>;
  weights: [number, number, number];
  version: number;
  finalized: boolean;
  manual_in: Record<string, string[]>;
  manual_out: Record<string, string[]>;
  uds: UdBlock[];
  summary: SessionSummary;
}

export interface SessionPatch {
  quotas?: Record<string, number>;
  weights?: [number, number, number];
  manual_in?: Record<string, string[]>;
  manual_out?: Record<string, string[]>;
}

export interface InstitutionInfo {
  institution_id: string;
  canonical_name: string;
  kind: string;
  fte_total: number;
  ud_codes: number[];
}

export interface ReportDoc {
  table: string;
  rows: Array<Record<string, unknown>>;
}

export interface PortfolioRow {
  ud_code: number;
  rank: number;
  pub_id: string;
  jir: number | null;
  air: number;
  aii: number;
  in_intersection: boolean;
  manual: boolean;
}

export interface ExportResponse {
  session_id: string;
  portfolio: PortfolioRow[];
  files: Record<string, string>;
}
