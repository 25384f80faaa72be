import type {
  CorrelationTable,
  Deployment,
  IterationMetrics,
  Job,
  Label,
  QueueView,
  RuleView,
  SessionSummary,
  WordCloud,
} from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

let baseUrl = '';

export function setBaseUrl(url: string): void {
  baseUrl = url.replace(/\/$/, '');
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const headers: Record<string, string> = { Accept: 'application/json' };
  if (init?.body) {
    headers['Content-Type'] = 'application/json';
  }
  const res = await fetch(`${baseUrl}${path}`, { ...init, headers });
  if (!res.ok) {
    let code = `HTTP${res.status}`;
    let message = res.statusText;
    try {
      const body = (await res.json()) as { code?: string; message?: string };
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // non-JSON error body; keep the HTTP status text
    }
    throw new ApiError(res.status, code, message);
  }
  return (await res.json()) as T;
}

export const api = {
  listSessions: () => request<SessionSummary[]>('/sessions'),

  queue: (sid: string) => request<QueueView>(`/sessions/${sid}/queue`),

  // documented label POST body: {pmid, label}
  submitLabel: (sid: string, pmid: string, label: Label) =>
    request<{ accepted: string[] }>(`/sessions/${sid}/labels`, {
      method: 'POST',
      body: JSON.stringify({ pmid, label }),
    }),

  rules: (sid: string) => request<RuleView[]>(`/sessions/${sid}/rules`),

  addRule: (sid: string, text: string, label: Label) =>
    request<{ ok: boolean }>(`/sessions/${sid}/rules`, {
      method: 'POST',
      body: JSON.stringify({ text, label }),
    }),

  removeRule: (sid: string, ruleId: number) =>
    request<{ ok: boolean }>(`/sessions/${sid}/rules/${ruleId}`, { method: 'DELETE' }),

  train: (sid: string) =>
    request<{ job_id: string }>(`/sessions/${sid}/train`, { method: 'POST' }),

  job: (jobId: string) => request<Job>(`/jobs/${jobId}`),

  metrics: (sid: string) => request<IterationMetrics[]>(`/sessions/${sid}/metrics`),

  correlations: (sid: string) =>
    request<CorrelationTable>(`/sessions/${sid}/correlations`),

  wordcloud: (sid: string) => request<WordCloud>(`/sessions/${sid}/wordcloud`),

  deploy: (sid: string) =>
    request<Deployment>(`/sessions/${sid}/deploy`, {
      method: 'POST',
      body: JSON.stringify({}),
    }),

  prismaSvg: async (sid: string): Promise<string> => {
    const res = await fetch(`${baseUrl}/sessions/${sid}/prisma.svg`);
    if (!res.ok) {
      throw new ApiError(res.status, `HTTP${res.status}`, res.statusText);
    }
    return res.text();
  },
};
