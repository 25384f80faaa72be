import { afterEach, describe, expect, it, vi } from 'vitest';

import { api, ApiError, setBaseUrl } from '../src/api.js';
import { stubFetch } from './helpers.js';

afterEach(() => {
  vi.unstubAllGlobals();
  setBaseUrl('');
});

describe('api client', () => {
  it('maps structured error payloads to ApiError', async () => {
    const stub = stubFetch({});
    stub.respondWith('/labels', 409, { code: 'UnknownPmid', message: 'outside queue' });
    await expect(api.submitLabel('s', '1', 'INCLUDE')).rejects.toMatchObject({
      name: 'ApiError',
      status: 409,
      code: 'UnknownPmid',
    });
  });

  it('prefixes the configured base url', async () => {
    const stub = stubFetch({ '/sessions': [] });
    setBaseUrl('http://api.example:8787/');
    await api.listSessions();
    expect(stub.calls[0]!.url).toBe('http://api.example:8787/sessions');
  });

  it('falls back to HTTP status when the error body is not JSON', async () => {
    vi.stubGlobal('fetch', async () => new Response('boom', { status: 500 }));
    try {
      await api.listSessions();
      expect.unreachable('should have thrown');
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).code).toBe('HTTP500');
    }
  });
});
