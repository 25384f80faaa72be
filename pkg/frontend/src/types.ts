// Payload shapes for the session API. The UI renders these verbatim and
// never derives numbers of its own.

export type Label = 'INCLUDE' | 'EXCLUDE';

export interface SessionSummary {
  session_id: string;
  phase: string;
  iteration: number;
  snapshots: number[];
  pinned_iteration: number | null;
  deployed: boolean;
}

export interface Highlight {
  rule: string;
  label: Label;
  field: 'title' | 'abstract';
  start: number;
  end: number;
}

export interface PotentialScore {
  value: number;
  uncertainty: number;
  novelty: number;
}

export interface QueueItem {
  pmid: string;
  title: string;
  abstract: string;
  prediction: Label;
  probability: number;
  potential: PotentialScore;
  highlights: Highlight[];
}

export interface QueueView {
  iteration: number;
  phase: string;
  items: QueueItem[];
  labeled: string[];
}

export interface RuleCoverage {
  hits: number;
  total: number;
}

export interface RuleView {
  rule_id: number;
  text: string;
  label: Label;
  notation: string;
  active: boolean;
  coverage: RuleCoverage;
}

export interface ClassMetrics {
  recall: number;
  precision: number;
  f_score: number;
}

export interface IterationMetrics {
  iteration: number;
  kappa: number;
  accuracy: number;
  average_potential: number;
  n_labeled: number;
  per_class: Record<string, ClassMetrics>;
  confusion?: number[][];
}

// csv-derived rows keep their table headers as keys ("Rule 1", ...)
export type CorrelationRow = Record<string, string>;

export interface CorrelationTable {
  iteration: number | null;
  rows: CorrelationRow[];
}

export type WordCloud = Record<string, [string, number][]>;

export interface Job {
  id: string;
  session_id: string;
  kind: string;
  status: 'queued' | 'running' | 'done' | 'error';
  result: { kind: string; iteration: number; queue?: string[] } | null;
  error: { code: string; message: string } | null;
}

export interface Deployment {
  snapshot: number;
  include: string[];
  exclude: string[];
}
