"""Explainability statistics over rule co-occurrence.

Associations between rule pairs use the 2x2 Pearson chi-square closed form
(no continuity correction), normalized with Cramer's V, with p-values from
the df=1 survival function erfc(sqrt(chi2/2)) and Benjamini-Hochberg FDR
adjustment across the whole table.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import InvalidP, InvalidRule
from .rules import ConceptRule, match_token_lists
from .textnorm import STOPWORDS, tokenize


@dataclass
class ContingencyTable2x2:
    a: int  # both rules match
    b: int  # only rule 1
    c: int  # only rule 2
    d: int  # neither

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d


@dataclass
class CorrelationRow:
    rule1: str
    rule2: str
    class1: str
    class2: str
    correlation: float
    p_raw: float
    p_adjusted: float
    coverage1: tuple[int, int]  # (hits, n)
    coverage2: tuple[int, int]


def cooccurrence(rule1: ConceptRule, rule2: ConceptRule, corpus_slice, doc_tokens=None) -> ContingencyTable2x2:
    """Tabulate joint match counts over the slice.

    ``doc_tokens`` may carry pre-tokenized documents to avoid re-tokenizing
    when scoring many pairs.
    """
    if doc_tokens is None:
        doc_tokens = [tokenize(f"{r.title} {r.abstract}") for r in corpus_slice]
    m1 = match_token_lists(rule1, doc_tokens)
    m2 = match_token_lists(rule2, doc_tokens)
    a = b = c = d = 0
    for x, y in zip(m1, m2):
        if x and y:
            a += 1
        elif x:
            b += 1
        elif y:
            c += 1
        else:
            d += 1
    return ContingencyTable2x2(a, b, c, d)


def chi_square(t: ContingencyTable2x2) -> tuple[float, float]:
    """(chi2, p) for a 2x2 table; (0, 1) when any marginal is empty."""
    n = t.n
    r1, r2 = t.a + t.b, t.c + t.d
    c1, c2 = t.a + t.c, t.b + t.d
    if n < 1 or 0 in (r1, r2, c1, c2):
        return 0.0, 1.0
    chi2 = n * (t.a * t.d - t.b * t.c) ** 2 / (r1 * r2 * c1 * c2)
    p = math.erfc(math.sqrt(chi2 / 2.0))
    return chi2, p


def cramers_v(chi2: float, n: int, dims: tuple[int, int] = (2, 2)) -> float:
    """Normalized association in [0, 1]; sqrt(chi2/n) for 2x2 tables."""
    if n < 1:
        raise InvalidP("n must be >= 1")
    k = min(dims) - 1
    v = math.sqrt(chi2 / (n * k))
    return min(max(v, 0.0), 1.0)


def bh_adjust(p_values: Sequence[float]) -> list[float]:
    """Benjamini-Hochberg step-up adjustment, input order preserved."""
    m = len(p_values)
    for p in p_values:
        if not (0.0 <= p <= 1.0):
            raise InvalidP(f"p-value out of range: {p}")
    order = sorted(range(m), key=lambda i: p_values[i])
    adjusted = [0.0] * m
    running_min = 1.0
    for rank in range(m, 0, -1):
        idx = order[rank - 1]
        running_min = min(running_min, p_values[idx] * m / rank)
        adjusted[idx] = min(1.0, running_min)
    return adjusted


def correlation_table(
    active_rules: Sequence[ConceptRule],
    corpus_slice,
    threshold: float = 1e-3,
) -> list[CorrelationRow]:
    """Score all unordered rule pairs, FDR-adjust, keep p_adj < threshold.

    Rows sort by correlation descending (ties by rule text) to match the
    report layout.
    """
    if len(active_rules) < 2:
        raise InvalidRule("correlation table needs at least 2 active rules")
    records = list(corpus_slice)
    doc_tokens = [tokenize(f"{r.title} {r.abstract}") for r in records]
    n = len(records)

    matches = {r.rule_id: match_token_lists(r, doc_tokens) for r in active_rules}
    hits = {r.rule_id: sum(matches[r.rule_id]) for r in active_rules}

    pairs: list[tuple[ConceptRule, ConceptRule, float, float]] = []
    for i in range(len(active_rules)):
        for j in range(i + 1, len(active_rules)):
            r1, r2 = active_rules[i], active_rules[j]
            m1, m2 = matches[r1.rule_id], matches[r2.rule_id]
            a = sum(1 for x, y in zip(m1, m2) if x and y)
            b = hits[r1.rule_id] - a
            c = hits[r2.rule_id] - a
            table = ContingencyTable2x2(a, b, c, n - a - b - c)
            chi2, p = chi_square(table)
            pairs.append((r1, r2, cramers_v(chi2, n), p))

    adjusted = bh_adjust([p for _, _, _, p in pairs])
    rows = [
        CorrelationRow(
            rule1=r1.text,
            rule2=r2.text,
            class1=r1.label,
            class2=r2.label,
            correlation=v,
            p_raw=p,
            p_adjusted=p_adj,
            coverage1=(hits[r1.rule_id], n),
            coverage2=(hits[r2.rule_id], n),
        )
        for (r1, r2, v, p), p_adj in zip(pairs, adjusted)
        if p_adj < threshold
    ]
    rows.sort(key=lambda row: (-row.correlation, row.rule1, row.rule2))
    return rows


def term_frequencies(
    corpus_slice,
    class_assignments: Mapping[str, str],
    top_k: int = 100,
    stopwords: Iterable[str] = STOPWORDS,
) -> dict[str, list[tuple[str, int]]]:
    """Word-cloud data: per-class top_k (term, count) over normalized
    unigrams, ties broken lexicographically."""
    stop = set(stopwords)
    counts: dict[str, dict[str, int]] = {}
    for record in corpus_slice:
        cls = class_assignments.get(record.pmid)
        if cls is None:
            continue
        bucket = counts.setdefault(cls, {})
        for token in tokenize(f"{record.title} {record.abstract}"):
            if token in stop or token.isdigit():
                continue
            bucket[token] = bucket.get(token, 0) + 1
    out = {}
    for cls, bucket in sorted(counts.items()):
        ranked = sorted(bucket.items(), key=lambda kv: (-kv[1], kv[0]))
        out[cls] = ranked[:top_k]
    return out


def save_correlations_csv(rows: Sequence[CorrelationRow], path: Path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["Rule 1", "Rule 2", "Rule 1 Class", "Rule 2 Class", "Correlation value",
             "P-value (raw)", "P-value (FDR-adjusted)", "Rule 1 Report Coverage",
             "Rule 2 Report Coverage"]
        )
        for r in rows:
            writer.writerow(
                [r.rule1, r.rule2, r.class1, r.class2, f"{r.correlation:.4f}",
                 f"{r.p_raw:.3E}", f"{r.p_adjusted:.3E}",
                 f"{r.coverage1[0]} / {r.coverage1[1]}",
                 f"{r.coverage2[0]} / {r.coverage2[1]}"]
            )


def save_wordcloud_json(freqs: Mapping[str, list[tuple[str, int]]], path: Path) -> None:
    payload = {cls: [[term, count] for term, count in terms] for cls, terms in sorted(freqs.items())}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
