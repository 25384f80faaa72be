import { escapeHtml } from './format.js';
import type { Highlight } from './types.js';

// Render record text with <mark> spans for the rule matches the server
// reported. Overlapping spans keep the earliest-starting one.

export function renderHighlighted(
  text: string,
  highlights: Highlight[],
  field: 'title' | 'abstract',
): string {
  const spans = highlights
    .filter((h) => h.field === field && h.start < h.end && h.end <= text.length)
    .sort((a, b) => a.start - b.start || a.end - b.end);
  let cursor = 0;
  const parts: string[] = [];
  for (const span of spans) {
    if (span.start < cursor) {
      continue;
    }
    parts.push(escapeHtml(text.slice(cursor, span.start)));
    const cls = span.label === 'INCLUDE' ? 'mark-include' : 'mark-exclude';
    parts.push(
      `<mark class="${cls}" title="${escapeHtml(span.rule)} (${span.label})">` +
        escapeHtml(text.slice(span.start, span.end)) +
        '</mark>',
    );
    cursor = span.end;
  }
  parts.push(escapeHtml(text.slice(cursor)));
  return parts.join('');
}
