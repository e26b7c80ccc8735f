/** Thin typed client over the investigation API. */

import type {
  ApiErrorBody,
  CaseSummary,
  Fact,
  GapInterval,
  RecordRow,
  Recommendation,
  SimOutcome,
  UneventFinding,
  ValidationResult,
  Verdict,
  WbgDocument,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ApiErrorBody,
  ) {
    super(`${status}: ${body.message}`);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let body: ApiErrorBody = { code: 'unknown', message: response.statusText };
  try {
    const doc = await response.json();
    if (doc && typeof doc.detail === 'object') body = doc.detail;
    else if (typeof doc.detail === 'string') body = { code: 'error', message: doc.detail };
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(response.status, body);
}

export class ApiClient {
  constructor(public baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  listCases(): Promise<string[]> {
    return this.request('GET', '/cases');
  }

  getCase(caseId: string): Promise<CaseSummary> {
    return this.request('GET', `/cases/${caseId}`);
  }

  getRecords(
    caseId: string,
    window?: { from?: string; to?: string; channel?: string },
  ): Promise<RecordRow[]> {
    const params = new URLSearchParams();
    if (window?.from) params.set('from', window.from);
    if (window?.to) params.set('to', window.to);
    if (window?.channel) params.set('channel', window.channel);
    const query = params.toString();
    return this.request('GET', `/cases/${caseId}/records${query ? '?' + query : ''}`);
  }

  getGaps(caseId: string, channel: string, minGapMs: number): Promise<GapInterval[]> {
    const params = new URLSearchParams({ channel, min_gap_ms: String(minGapMs) });
    return this.request('GET', `/cases/${caseId}/gaps?${params}`);
  }

  getUnevents(caseId: string): Promise<UneventFinding[]> {
    return this.request('GET', `/cases/${caseId}/unevents`);
  }

  getWbg(caseId: string): Promise<WbgDocument> {
    return this.request('GET', `/cases/${caseId}/wbg`);
  }

  putWbg(caseId: string, doc: WbgDocument): Promise<WbgDocument> {
    return this.request('PUT', `/cases/${caseId}/wbg`, doc);
  }

  validateWbg(caseId: string): Promise<ValidationResult> {
    return this.request('POST', `/cases/${caseId}/wbg/validate`);
  }

  testEdge(caseId: string, cause: string, effect: string, seed = 0): Promise<Verdict> {
    return this.request('POST', `/cases/${caseId}/wbg/test-edge`, { cause, effect, seed });
  }

  testNode(caseId: string, node: string, seed = 0): Promise<Verdict> {
    return this.request('POST', `/cases/${caseId}/wbg/test-node`, { node, seed });
  }

  getVerdicts(caseId: string): Promise<Verdict[]> {
    return this.request('GET', `/cases/${caseId}/verdicts`);
  }

  getFacts(caseId: string): Promise<Fact[]> {
    return this.request('GET', `/cases/${caseId}/facts`);
  }

  runSim(caseId: string, remedies: string[], seed = 0): Promise<SimOutcome> {
    return this.request('POST', `/cases/${caseId}/sim/run`, { remedies, seed });
  }

  getRecommendations(caseId: string): Promise<Recommendation[]> {
    return this.request('GET', `/cases/${caseId}/recommendations`);
  }

  putRecommendations(caseId: string, recs: Recommendation[]): Promise<Recommendation[]> {
    return this.request('PUT', `/cases/${caseId}/recommendations`, recs);
  }
}
