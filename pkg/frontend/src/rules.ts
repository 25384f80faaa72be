import { ApiError } from './api.js';
import { coverageChip, escapeHtml } from './format.js';
import type { Label, RuleView } from './types.js';

export interface RuleHandlers {
  addRule(text: string, label: Label): Promise<unknown>;
  removeRule(ruleId: number): Promise<unknown>;
  reload(): void;
}

// Rule editor: active and removed rules with their iteration notation
// ("2, 4 / 3") and live coverage chips straight from the API.
export class RulesView {
  private error = '';

  constructor(
    private readonly root: HTMLElement,
    private readonly rules: RuleView[],
    private readonly handlers: RuleHandlers,
  ) {}

  render(): void {
    const rows = this.rules
      .map(
        (rule) => `
<tr class="${rule.active ? '' : 'rule-removed'}" data-rule-id="${rule.rule_id}">
  <td>${rule.rule_id}</td>
  <td class="rule-text">${escapeHtml(rule.text)}</td>
  <td><span class="chip chip-${rule.label.toLowerCase()}">${rule.label}</span></td>
  <td><span class="chip notation">${escapeHtml(rule.notation)}</span></td>
  <td><span class="chip coverage">${coverageChip(rule.coverage.hits, rule.coverage.total)}</span></td>
  <td>${
    rule.active
      ? `<button type="button" data-action="remove" data-rule-id="${rule.rule_id}">Remove</button>`
      : '<span class="muted">removed</span>'
  }</td>
</tr>`,
      )
      .join('\n');

    this.root.innerHTML = `
<section class="rules">
  <form data-role="add-rule">
    <input name="text" placeholder="concept phrase" required />
    <select name="label">
      <option value="INCLUDE">INCLUDE</option>
      <option value="EXCLUDE">EXCLUDE</option>
    </select>
    <button type="submit">Add rule</button>
    ${this.error ? `<span class="notice" data-role="rule-error">${escapeHtml(this.error)}</span>` : ''}
  </form>
  <table>
    <thead>
      <tr><th>#</th><th>Rule</th><th>Label</th><th>Iterations</th><th>Coverage</th><th></th></tr>
    </thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;

    const form = this.root.querySelector<HTMLFormElement>('form[data-role="add-rule"]');
    form?.addEventListener('submit', (event) => {
      event.preventDefault();
      const data = new FormData(form);
      void this.add(String(data.get('text') ?? ''), String(data.get('label')) as Label);
    });
    this.root.querySelectorAll<HTMLButtonElement>('button[data-action="remove"]').forEach((button) => {
      button.addEventListener('click', () => {
        void this.remove(Number(button.dataset.ruleId));
      });
    });
  }

  async add(text: string, label: Label): Promise<void> {
    try {
      await this.handlers.addRule(text, label);
      this.error = '';
      this.handlers.reload();
    } catch (err) {
      // duplicate-rule conflicts surface inline without touching the list
      this.error = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      this.render();
    }
  }

  async remove(ruleId: number): Promise<void> {
    try {
      await this.handlers.removeRule(ruleId);
      this.error = '';
      this.handlers.reload();
    } catch (err) {
      this.error = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      this.render();
    }
  }
}
