import { escapeHtml, kappaValue, percent } from './format.js';
import type {
  CorrelationRow,
  CorrelationTable,
  IterationMetrics,
  WordCloud,
} from './types.js';

export type CorrelationSort = 'correlation' | 'adjusted-p';

const CORRELATION_VALUE = 'Correlation value';
const ADJUSTED_P = 'P-value (FDR-adjusted)';

export function sortCorrelations(
  rows: CorrelationRow[],
  by: CorrelationSort,
): CorrelationRow[] {
  const sorted = [...rows];
  if (by === 'correlation') {
    sorted.sort((a, b) => Number(b[CORRELATION_VALUE]) - Number(a[CORRELATION_VALUE]));
  } else {
    sorted.sort((a, b) => Number(a[ADJUSTED_P]) - Number(b[ADJUSTED_P]));
  }
  return sorted;
}

function polyline(values: number[], color: string, width = 560, height = 150): string {
  if (values.length === 0) {
    return '';
  }
  const step = values.length > 1 ? width / (values.length - 1) : 0;
  const points = values
    .map((value, i) => `${(i * step).toFixed(1)},${(height - value * height).toFixed(1)}`)
    .join(' ');
  return `<polyline fill="none" stroke="${color}" stroke-width="2" points="${points}"/>`;
}

// Metric history as a plain inline SVG: kappa, accuracy, average potential
// per iteration, one point per snapshot.
export function renderMetricsChart(metrics: IterationMetrics[]): string {
  const kappa = metrics.map((m) => Math.max(0, m.kappa));
  const accuracy = metrics.map((m) => m.accuracy);
  const potential = metrics.map((m) => m.average_potential);
  return `
<svg viewBox="0 0 600 170" class="metric-chart" role="img" aria-label="metrics per iteration">
  <g transform="translate(20,10)">
    ${polyline(kappa, '#7c3aed')}
    ${polyline(accuracy, '#0369a1')}
    ${polyline(potential, '#ca8a04')}
  </g>
</svg>
<div class="legend">
  <span style="color:#7c3aed">kappa</span>
  <span style="color:#0369a1">accuracy</span>
  <span style="color:#ca8a04">average potential</span>
</div>`;
}

export class DashboardView {
  private sort: CorrelationSort = 'correlation';

  constructor(
    private readonly root: HTMLElement,
    private readonly metrics: IterationMetrics[],
    private readonly correlations: CorrelationTable,
    private readonly wordcloud: WordCloud,
    private readonly prismaSvg: string,
  ) {}

  render(): void {
    if (this.metrics.length === 0) {
      this.root.innerHTML =
        '<p class="empty" data-role="empty">No iteration snapshots yet. Train first.</p>';
      return;
    }
    const metricRows = this.metrics
      .map(
        (m) => `
<tr data-iteration="${m.iteration}">
  <td>${m.iteration}</td>
  <td class="cell-kappa">${kappaValue(m.kappa)}</td>
  <td class="cell-accuracy">${percent(m.accuracy)}</td>
  <td class="cell-potential">${percent(m.average_potential)}</td>
  <td>${m.n_labeled}</td>
</tr>`,
      )
      .join('\n');

    const latest = this.metrics[this.metrics.length - 1]!;
    const classRows = Object.entries(latest.per_class)
      .sort(([a], [b]) => (a < b ? 1 : -1)) // INCLUDE first
      .map(
        ([cls, m]) => `
<tr data-class="${cls}">
  <td>${cls}</td>
  <td>${percent(m.recall)}</td>
  <td>${percent(m.precision)}</td>
  <td>${percent(m.f_score)}</td>
</tr>`,
      )
      .join('\n');

    const correlationRows = sortCorrelations(this.correlations.rows, this.sort)
      .map(
        (row) => `
<tr>
  <td>${escapeHtml(row['Rule 1'] ?? '')}</td>
  <td>${escapeHtml(row['Rule 2'] ?? '')}</td>
  <td>${escapeHtml(row['Rule 1 Class'] ?? '')}</td>
  <td>${escapeHtml(row['Rule 2 Class'] ?? '')}</td>
  <td class="cell-v">${escapeHtml(row[CORRELATION_VALUE] ?? '')}</td>
  <td>${escapeHtml(row['P-value (raw)'] ?? '')}</td>
  <td class="cell-adj">${escapeHtml(row[ADJUSTED_P] ?? '')}</td>
  <td>${escapeHtml(row['Rule 1 Report Coverage'] ?? '')}</td>
  <td>${escapeHtml(row['Rule 2 Report Coverage'] ?? '')}</td>
</tr>`,
      )
      .join('\n');

    const clouds = Object.entries(this.wordcloud)
      .sort(([a], [b]) => (a < b ? 1 : -1))
      .map(([cls, terms]) => {
        const max = terms.length ? terms[0]![1] : 1;
        const spans = terms
          .slice(0, 40)
          .map(
            ([term, count]) =>
              `<span class="cloud-term" style="font-size:${(0.8 + 1.4 * (count / max)).toFixed(2)}em" title="${count}">${escapeHtml(term)}</span>`,
          )
          .join(' ');
        return `<div class="cloud" data-class="${cls}"><h4>${cls}</h4>${spans}</div>`;
      })
      .join('\n');

    const confusion = latest.confusion
      ? `
<table class="confusion" data-role="confusion">
  <thead><tr><th></th><th>pred INCLUDE</th><th>pred EXCLUDE</th></tr></thead>
  <tbody>
    <tr><th>user INCLUDE</th><td>${latest.confusion[0]![0]}</td><td>${latest.confusion[0]![1]}</td></tr>
    <tr><th>user EXCLUDE</th><td>${latest.confusion[1]![0]}</td><td>${latest.confusion[1]![1]}</td></tr>
  </tbody>
</table>`
      : '<p class="muted">No labeled records yet.</p>';

    this.root.innerHTML = `
<section class="dashboard">
  <div class="panel" data-panel="metrics">
    <h3>Performance by iteration</h3>
    ${renderMetricsChart(this.metrics)}
    <table>
      <thead><tr><th>Iteration</th><th>Cohen's Kappa</th><th>Accuracy</th><th>Average Potential</th><th>Labeled</th></tr></thead>
      <tbody>${metricRows}</tbody>
    </table>
  </div>
  <div class="panel" data-panel="classes">
    <h3>Class metrics (iteration ${latest.iteration})</h3>
    <table>
      <thead><tr><th>Label</th><th>Recall</th><th>Precision</th><th>F-score</th></tr></thead>
      <tbody>${classRows}</tbody>
    </table>
    <h3>User labels vs model</h3>
    ${confusion}
  </div>
  <div class="panel" data-panel="correlations">
    <h3>Rule correlations${this.correlations.iteration ? ` (iteration ${this.correlations.iteration})` : ''}</h3>
    <div class="sort-controls">
      sort by
      <button type="button" data-sort="correlation" ${this.sort === 'correlation' ? 'class="active"' : ''}>V</button>
      <button type="button" data-sort="adjusted-p" ${this.sort === 'adjusted-p' ? 'class="active"' : ''}>adjusted p</button>
    </div>
    <table data-role="correlation-table">
      <thead><tr><th>Rule 1</th><th>Rule 2</th><th>Class 1</th><th>Class 2</th><th>V</th><th>p raw</th><th>p adj</th><th>Coverage 1</th><th>Coverage 2</th></tr></thead>
      <tbody>${correlationRows}</tbody>
    </table>
  </div>
  <div class="panel" data-panel="wordcloud"><h3>Word cloud</h3>${clouds}</div>
  <div class="panel" data-panel="prisma"><h3>PRISMA flow</h3><div data-role="prisma-pane">${this.prismaSvg}</div></div>
</section>`;

    this.root.querySelectorAll<HTMLButtonElement>('button[data-sort]').forEach((button) => {
      button.addEventListener('click', () => {
        this.sort = button.dataset.sort as CorrelationSort;
        this.render();
      });
    });
  }
}
