import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { vi } from 'vitest';

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, 'fixtures', name), 'utf8')) as T;
}

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export interface FetchStub {
  calls: RecordedCall[];
  respondWith(matcher: string, status: number, payload: unknown): void;
}

// fetch stub: JSON 200 by default, per-path overrides for error cases.
export function stubFetch(routes: Record<string, unknown>): FetchStub {
  const overrides = new Map<string, { status: number; payload: unknown }>();
  const calls: RecordedCall[] = [];
  vi.stubGlobal('fetch', async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    calls.push({ url, method, body });
    for (const [matcher, response] of overrides) {
      if (url.includes(matcher)) {
        return jsonResponse(response.status, response.payload);
      }
    }
    for (const [matcher, payload] of Object.entries(routes)) {
      if (url.includes(matcher)) {
        return jsonResponse(200, payload);
      }
    }
    return jsonResponse(404, { code: 'NoSuchSession', message: `no route for ${url}` });
  });
  return {
    calls,
    respondWith(matcher, status, payload) {
      overrides.set(matcher, { status, payload });
    },
  };
}

function jsonResponse(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

export function mount(): HTMLElement {
  document.body.innerHTML = '<div id="root"></div>';
  return document.getElementById('root')!;
}

export async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}
