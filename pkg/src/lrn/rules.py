"""User-authored concept rules with iteration history and lexical matching.

A rule is a short labeled phrase that votes INCLUDE or EXCLUDE on any record
whose title+abstract contains the phrase (after normalization and light
stemming). Every add/remove/reinstate is stamped with the iteration it
happened in, so the ruleset active at any past iteration is recoverable and
the full history renders in the "2, 4 / 3" notation used in exports.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DuplicateActiveRule, InvalidRule, RuleNotActive
from .textnorm import contains_phrase, normalize_phrase, token_spans, tokenize

INCLUDE = "INCLUDE"
EXCLUDE = "EXCLUDE"

ADDED = "added"
REMOVED = "removed"
REINSTATED = "reinstated"

MAX_PHRASE_TOKENS = 6


@dataclass
class ConceptRule:
    rule_id: int
    text: str
    label: str
    history: list[tuple[int, str]] = field(default_factory=list)

    @property
    def match_tokens(self) -> list[str]:
        return tokenize(self.text)

    def surface_key(self) -> str:
        # identity key: normalized but unstemmed, so inflected variants
        # ("examination glove" vs "examination gloves") stay distinct rules
        return normalize_phrase(self.text, stem=False)

    def active_at(self, iteration: int) -> bool:
        state = False
        for it, event in self.history:
            if it > iteration:
                break
            state = event in (ADDED, REINSTATED)
        return state

    def notation(self) -> str:
        """Iteration notation: added/reinstated iterations, " / ", removals."""
        added = [str(it) for it, ev in self.history if ev in (ADDED, REINSTATED)]
        removed = [str(it) for it, ev in self.history if ev == REMOVED]
        out = ", ".join(added)
        if removed:
            out += " / " + ", ".join(removed)
        return out


def parse_notation(notation: str) -> list[tuple[int, str]]:
    """Invert ``ConceptRule.notation`` back into an event history."""
    parts = notation.split("/")
    added = [int(x) for x in parts[0].split(",") if x.strip()]
    removed = [int(x) for x in parts[1].split(",") if x.strip()] if len(parts) > 1 else []
    events = [(it, "add") for it in added] + [(it, REMOVED) for it in removed]
    # same-iteration add+remove: the add comes first (history starts Added)
    events.sort(key=lambda e: (e[0], 0 if e[1] == "add" else 1))
    history: list[tuple[int, str]] = []
    for it, kind in events:
        if kind == "add":
            history.append((it, ADDED if not history else REINSTATED))
        else:
            history.append((it, REMOVED))
    return history


@dataclass
class Ruleset:
    rules: list[ConceptRule] = field(default_factory=list)

    def active_at(self, iteration: int) -> list[ConceptRule]:
        return [r for r in self.rules if r.active_at(iteration)]

    def latest_iteration(self) -> int:
        return max((it for r in self.rules for it, _ in r.history), default=0)

    def get(self, rule_id: int) -> ConceptRule:
        for r in self.rules:
            if r.rule_id == rule_id:
                return r
        raise RuleNotActive(f"no rule with id {rule_id}")

    def has_both_classes(self, iteration: int) -> bool:
        labels = {r.label for r in self.active_at(iteration)}
        return INCLUDE in labels and EXCLUDE in labels


def upsert_rule(ruleset: Ruleset, text: str, label: str, iteration: int) -> Ruleset:
    """Add a new rule, or reinstate a removed one with the same text+label.

    Raises DuplicateActiveRule if an identical rule is already active at
    ``iteration``.
    """
    if label not in (INCLUDE, EXCLUDE):
        raise InvalidRule(f"label must be INCLUDE or EXCLUDE, got {label!r}")
    if iteration < 1:
        raise InvalidRule("iteration must be >= 1")
    key = normalize_phrase(text, stem=False)
    if not key:
        raise InvalidRule(f"rule text is empty after normalization: {text!r}")
    if len(key.split()) > MAX_PHRASE_TOKENS:
        raise InvalidRule(f"rule phrase exceeds {MAX_PHRASE_TOKENS} tokens: {text!r}")

    for rule in ruleset.rules:
        if rule.label == label and rule.surface_key() == key:
            if rule.active_at(iteration):
                raise DuplicateActiveRule(f"{text!r} ({label}) already active")
            rule.history.append((iteration, REINSTATED))
            return ruleset

    next_id = max((r.rule_id for r in ruleset.rules), default=0) + 1
    ruleset.rules.append(ConceptRule(next_id, text, label, [(iteration, ADDED)]))
    return ruleset


def remove_rule(ruleset: Ruleset, rule_id: int, iteration: int) -> Ruleset:
    """Mark a rule removed from ``iteration`` onward."""
    rule = ruleset.get(rule_id)
    if not rule.active_at(iteration):
        raise RuleNotActive(f"rule {rule_id} ({rule.text!r}) not active at iteration {iteration}")
    rule.history.append((iteration, REMOVED))
    return ruleset


def match(rule: ConceptRule, record) -> bool:
    """True iff the rule phrase occurs (normalized, stemmed, contiguous)
    in the record's title+abstract. ``record`` may also be a plain string."""
    if isinstance(record, str):
        text = record
    else:
        text = f"{record.title} {record.abstract}"
    return contains_phrase(rule.match_tokens, tokenize(text))


def match_token_lists(rule: ConceptRule, doc_tokens: Sequence[list[str]]) -> list[bool]:
    """Vector of match() results against pre-tokenized documents."""
    phrase = rule.match_tokens
    return [contains_phrase(phrase, toks) for toks in doc_tokens]


def find_matches(rule: ConceptRule, text: str) -> list[tuple[int, int]]:
    """Character spans of every phrase occurrence, for highlighting."""
    phrase = rule.match_tokens
    spans = token_spans(text)
    tokens = [t for t, _, _ in spans]
    out = []
    m = len(phrase)
    for i in range(len(tokens) - m + 1):
        if tokens[i : i + m] == phrase:
            out.append((spans[i][1], spans[i + m - 1][2]))
    return out


def coverage(rule: ConceptRule, corpus_slice: Iterable) -> tuple[int, int]:
    """(hits, total) over the slice, rendered downstream as "hits / total"."""
    hits = 0
    total = 0
    for record in corpus_slice:
        total += 1
        if match(rule, record):
            hits += 1
    if total == 0:
        raise InvalidRule("coverage requires a nonempty corpus slice")
    return hits, total


def export_history(ruleset: Ruleset) -> list[tuple[int, str, str, str]]:
    """Rows (rule number, text, label, iteration notation)."""
    return [(r.rule_id, r.text, r.label, r.notation()) for r in ruleset.rules]


def save_ruleset(ruleset: Ruleset, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Rule Number", "Rule", "Label", "Iteration Modified"])
        for row in export_history(ruleset):
            writer.writerow(row)


def load_ruleset(path: Path) -> Ruleset:
    ruleset = Ruleset()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        for rule_id, text, label, notation in reader:
            ruleset.rules.append(
                ConceptRule(int(rule_id), text, label, parse_notation(notation))
            )
    return ruleset
