// Display-only formatting. Values arrive from the API as fractions; the UI
// renders them at fixed precision and never recomputes statistics.

export function percent(fraction: number): string {
  return `${(fraction * 100).toFixed(2)}%`;
}

export function kappaValue(value: number): string {
  return value.toFixed(4);
}

export function coverageChip(hits: number, total: number): string {
  return `${hits} / ${total}`;
}

export function probabilityChip(p: number): string {
  return p.toFixed(3);
}

export function escapeHtml(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;');
}
