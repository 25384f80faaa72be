import { ApiError } from './api.js';
import { escapeHtml, probabilityChip } from './format.js';
import { renderHighlighted } from './highlight.js';
import type { Label, QueueView } from './types.js';

export interface ScreeningHandlers {
  submitLabel(pmid: string, label: Label): Promise<unknown>;
  continueTraining(): void;
  refreshQueue(): void;
}

// Screening queue: one card per record, keyboard-first labeling
// (i = include, e = exclude, space = next), submissions idempotent per
// (iteration, pmid, label).
export class ScreeningView {
  private labeled = new Map<string, Label>();
  private cursor = 0;
  private notice = '';

  constructor(
    private readonly root: HTMLElement,
    private readonly view: QueueView,
    private readonly handlers: ScreeningHandlers,
  ) {
    for (const pmid of view.labeled) {
      this.labeled.set(pmid, 'INCLUDE');
    }
    this.onKey = this.onKey.bind(this);
  }

  get labeledCount(): number {
    return this.labeled.size;
  }

  mount(): void {
    this.render();
    this.root.addEventListener('keydown', this.onKey);
  }

  unmount(): void {
    this.root.removeEventListener('keydown', this.onKey);
  }

  private onKey(event: KeyboardEvent): void {
    if (event.key === 'i') {
      void this.label(this.currentPmid(), 'INCLUDE');
    } else if (event.key === 'e') {
      void this.label(this.currentPmid(), 'EXCLUDE');
    } else if (event.key === ' ') {
      event.preventDefault();
      this.advance();
    }
  }

  private currentPmid(): string | null {
    const item = this.view.items[this.cursor];
    return item ? item.pmid : null;
  }

  private advance(): void {
    if (this.cursor < this.view.items.length - 1) {
      this.cursor += 1;
      this.render();
    }
  }

  async label(pmid: string | null, label: Label): Promise<void> {
    if (!pmid) {
      return;
    }
    if (this.labeled.get(pmid) === label) {
      return; // idempotent per (session, iteration, pmid)
    }
    try {
      await this.handlers.submitLabel(pmid, label);
      this.labeled.set(pmid, label);
      this.notice = '';
      this.advance();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.notice = `Queue is stale (${err.code}). Refresh to continue.`;
      } else {
        this.notice = err instanceof Error ? err.message : String(err);
      }
    }
    this.render();
  }

  render(): void {
    const { items } = this.view;
    const progress = `${this.labeled.size} / ${items.length} labeled`;
    const cards = items
      .map((item, index) => {
        const decided = this.labeled.get(item.pmid);
        const classes = [
          'card',
          index === this.cursor ? 'card-current' : '',
          decided ? `card-${decided.toLowerCase()}` : '',
        ]
          .filter(Boolean)
          .join(' ');
        return `
<article class="${classes}" data-pmid="${item.pmid}">
  <header>
    <span class="pmid">PMID ${item.pmid}</span>
    <span class="chip chip-${item.prediction.toLowerCase()}">model: ${item.prediction} (${probabilityChip(item.probability)})</span>
    <span class="chip">potential ${item.potential.value.toFixed(3)}</span>
    ${decided ? `<span class="chip chip-decided">you: ${decided}</span>` : ''}
  </header>
  <h3>${renderHighlighted(item.title, item.highlights, 'title')}</h3>
  <p>${renderHighlighted(item.abstract, item.highlights, 'abstract')}</p>
  <footer>
    <button type="button" class="btn-include" data-action="include" data-pmid="${item.pmid}">Include (i)</button>
    <button type="button" class="btn-exclude" data-action="exclude" data-pmid="${item.pmid}">Exclude (e)</button>
  </footer>
</article>`;
      })
      .join('\n');

    this.root.innerHTML = `
<section class="screening" tabindex="0">
  <div class="toolbar">
    <span class="progress" data-role="progress">${progress}</span>
    <button type="button" data-action="submit" ${this.labeled.size === 0 ? 'disabled' : ''}>
      Continue training
    </button>
    <button type="button" data-action="refresh">Refresh queue</button>
    ${this.notice ? `<span class="notice" data-role="notice">${escapeHtml(this.notice)}</span>` : ''}
  </div>
  <div class="cards">${cards}</div>
</section>`;

    this.root.querySelectorAll<HTMLButtonElement>('button[data-pmid]').forEach((button) => {
      button.addEventListener('click', () => {
        const label: Label = button.dataset.action === 'include' ? 'INCLUDE' : 'EXCLUDE';
        void this.label(button.dataset.pmid ?? null, label);
      });
    });
    this.root
      .querySelector<HTMLButtonElement>('button[data-action="submit"]')
      ?.addEventListener('click', () => this.handlers.continueTraining());
    this.root
      .querySelector<HTMLButtonElement>('button[data-action="refresh"]')
      ?.addEventListener('click', () => this.handlers.refreshQueue());
  }
}
