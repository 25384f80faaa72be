import { api } from './api.js';
import { DashboardView } from './dashboard.js';
import { RulesView } from './rules.js';
import { ScreeningView } from './screening.js';
import type { SessionSummary } from './types.js';

type Tab = 'screen' | 'rules' | 'dashboard';

// Single-page shell: session picker, three tabs, training job polling.
export class App {
  private sessionId = '';
  private tab: Tab = 'screen';
  private status = '';
  private screening: ScreeningView | null = null;

  constructor(private readonly root: HTMLElement) {}

  async start(): Promise<void> {
    const sessions = await api.listSessions();
    this.renderShell(sessions);
    if (sessions.length > 0) {
      this.sessionId = sessions[0]!.session_id;
      await this.showTab(this.tab);
    }
  }

  private renderShell(sessions: SessionSummary[]): void {
    const options = sessions
      .map((s) => `<option value="${s.session_id}">${s.session_id} (${s.phase})</option>`)
      .join('');
    this.root.innerHTML = `
<header class="topbar">
  <h1>Literature Review Network</h1>
  <select data-role="session">${options}</select>
  <nav>
    <button type="button" data-tab="screen">Screen</button>
    <button type="button" data-tab="rules">Rules</button>
    <button type="button" data-tab="dashboard">Dashboard</button>
  </nav>
  <button type="button" data-action="train">Train</button>
  <span class="status" data-role="status">${this.status}</span>
</header>
<main data-role="view" tabindex="0"></main>`;

    this.root.querySelector<HTMLSelectElement>('select[data-role="session"]')
      ?.addEventListener('change', (event) => {
        this.sessionId = (event.target as HTMLSelectElement).value;
        void this.showTab(this.tab);
      });
    this.root.querySelectorAll<HTMLButtonElement>('button[data-tab]').forEach((button) => {
      button.addEventListener('click', () => {
        void this.showTab(button.dataset.tab as Tab);
      });
    });
    this.root.querySelector<HTMLButtonElement>('button[data-action="train"]')
      ?.addEventListener('click', () => void this.train());
  }

  private view(): HTMLElement {
    return this.root.querySelector<HTMLElement>('main[data-role="view"]')!;
  }

  private setStatus(text: string): void {
    this.status = text;
    const el = this.root.querySelector<HTMLElement>('[data-role="status"]');
    if (el) {
      el.textContent = text;
    }
  }

  async showTab(tab: Tab): Promise<void> {
    this.tab = tab;
    this.screening?.unmount();
    this.screening = null;
    const view = this.view();
    if (!this.sessionId) {
      view.innerHTML = '<p class="empty">No sessions on the server.</p>';
      return;
    }
    if (tab === 'screen') {
      const queue = await api.queue(this.sessionId);
      this.screening = new ScreeningView(view, queue, {
        submitLabel: (pmid, label) => api.submitLabel(this.sessionId, pmid, label),
        continueTraining: () => void this.train(),
        refreshQueue: () => void this.showTab('screen'),
      });
      this.screening.mount();
    } else if (tab === 'rules') {
      const rules = await api.rules(this.sessionId);
      new RulesView(view, rules, {
        addRule: (text, label) => api.addRule(this.sessionId, text, label),
        removeRule: (ruleId) => api.removeRule(this.sessionId, ruleId),
        reload: () => void this.showTab('rules'),
      }).render();
    } else {
      const [metrics, correlations, wordcloud] = await Promise.all([
        api.metrics(this.sessionId),
        api.correlations(this.sessionId),
        api.wordcloud(this.sessionId),
      ]);
      let prisma = '';
      try {
        prisma = await api.prismaSvg(this.sessionId);
      } catch {
        prisma = '<p class="muted">PRISMA not available yet.</p>';
      }
      new DashboardView(view, metrics, correlations, wordcloud, prisma).render();
    }
  }

  async train(): Promise<void> {
    this.setStatus('training…');
    try {
      const { job_id } = await api.train(this.sessionId);
      await this.pollJob(job_id);
      this.setStatus('training done');
      await this.showTab(this.tab);
    } catch (err) {
      this.setStatus(err instanceof Error ? err.message : String(err));
    }
  }

  private async pollJob(jobId: string): Promise<void> {
    for (;;) {
      const job = await api.job(jobId);
      if (job.status === 'done') {
        return;
      }
      if (job.status === 'error') {
        throw new Error(job.error?.message ?? 'training failed');
      }
      await new Promise((resolve) => setTimeout(resolve, 500));
    }
  }
}
