/**
 * Typed client over the session wire API.
 *
 * PATCH outcomes are a discriminated union so callers are forced to handle
 * version conflicts explicitly; the client itself never retries or merges.
 */

import type {
  ExportResponse,
  InstitutionInfo,
  ReportDoc,
  SessionPatch,
  SessionView,
} from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export type PatchOutcome =
  | { kind: 'ok'; view: SessionView }
  | { kind: 'conflict'; currentVersion: number }
  | { kind: 'invalid'; reasons: string[] };

export type ExportOutcome =
  | { kind: 'ok'; result: ExportResponse }
  | { kind: 'blocked'; reasons: string[] };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`api error ${status}: ${JSON.stringify(detail)}`);
  }
}

async function detailOf(response: Response): Promise<unknown> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    return body.detail ?? body;
  } catch {
    return response.statusText;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.url(path));
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as T;
  }

  async listInstitutions(): Promise<InstitutionInfo[]> {
    const body = await this.getJson<{ institutions: InstitutionInfo[] }>('/institutions');
    return body.institutions;
  }

  async createSession(institutionId: string, ratio = 0.25): Promise<SessionView> {
    const response = await this.fetchFn(this.url('/sessions'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ institution_id: institutionId, ratio }),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as SessionView;
  }

  async getSession(sessionId: string): Promise<SessionView> {
    return this.getJson<SessionView>(`/sessions/${sessionId}`);
  }

  async patchSession(
    sessionId: string,
    version: number,
    patch: SessionPatch,
  ): Promise<PatchOutcome> {
    const response = await this.fetchFn(this.url(`/sessions/${sessionId}`), {
      method: 'PATCH',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ version, patch }),
    });
    if (response.ok) {
      return { kind: 'ok', view: (await response.json()) as SessionView };
    }
    const detail = await detailOf(response);
    if (response.status === 409) {
      const current = (detail as { current_version?: number }).current_version;
      return { kind: 'conflict', currentVersion: current ?? -1 };
    }
    if (response.status === 422) {
      const reasons = (detail as { reasons?: string[] }).reasons;
      return { kind: 'invalid', reasons: reasons ?? [String(detail)] };
    }
    throw new ApiError(response.status, detail);
  }

  async getReport(sessionId: string, table: string): Promise<ReportDoc> {
    return this.getJson<ReportDoc>(`/sessions/${sessionId}/reports/${table}`);
  }

  async exportSession(sessionId: string): Promise<ExportOutcome> {
    const response = await this.fetchFn(this.url(`/sessions/${sessionId}/export`), {
      method: 'POST',
    });
    if (response.ok) {
      return { kind: 'ok', result: (await response.json()) as ExportResponse };
    }
    const detail = await detailOf(response);
    if (response.status === 422) {
      const reasons = (detail as { reasons?: string[] }).reasons;
      return { kind: 'blocked', reasons: reasons ?? [String(detail)] };
    }
    throw new ApiError(response.status, detail);
  }
}
