"""Generative fusion of weak rule votes into INCLUDE probabilities.

Votes live in {+1 INCLUDE, -1 EXCLUDE, 0 ABSTAIN}. The model is
conditionally independent with one accuracy parameter per rule: given the
true class, each non-abstaining vote agrees with it with probability a_j.
EM alternates a posterior pass with closed-form prior/accuracy updates;
because the M-step is a box-constrained maximizer of the expected complete
log-likelihood, the observed log-likelihood never decreases, which the fit
records step by step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateMatrix, EmptyRuleset
from .rules import EXCLUDE, INCLUDE, Ruleset, match_token_lists
from .textnorm import tokenize

ACCURACY_FLOOR = 0.05
ACCURACY_CEIL = 0.95
PRIOR_FLOOR = 1e-6


@dataclass
class LabelMatrix:
    votes: np.ndarray  # shape (n_records, n_rules), values in {-1, 0, +1}
    record_ids: list[str]
    rule_ids: list[int]


@dataclass
class LabelModelParams:
    class_prior: float
    accuracies: np.ndarray  # one per rule, clamped to [0.05, 0.95]
    log_likelihood: list[float] = field(default_factory=list)


@dataclass
class FitConfig:
    max_iters: int = 100
    tol: float = 1e-6
    init_accuracy: float = 0.7
    seed: int = 0


def build_label_matrix(ruleset: Ruleset, corpus_slice, iteration: int | None = None) -> LabelMatrix:
    """votes[i][j] = rule j's label sign if it matches record i, else 0."""
    if iteration is None:
        iteration = ruleset.latest_iteration()
    active = ruleset.active_at(iteration)
    labels = {r.label for r in active}
    if INCLUDE not in labels or EXCLUDE not in labels:
        raise EmptyRuleset("need at least one active rule per class")
    records = list(corpus_slice)
    doc_tokens = [tokenize(f"{r.title} {r.abstract}") for r in records]
    votes = np.zeros((len(records), len(active)), dtype=np.int8)
    for j, rule in enumerate(active):
        sign = 1 if rule.label == INCLUDE else -1
        hits = match_token_lists(rule, doc_tokens)
        for i, hit in enumerate(hits):
            if hit:
                votes[i, j] = sign
    return LabelMatrix(votes=votes, record_ids=[r.pmid for r in records],
                       rule_ids=[r.rule_id for r in active])


def _posteriors(votes: np.ndarray, prior: float, acc: np.ndarray) -> tuple[np.ndarray, float]:
    """P(INCLUDE | row) for every row, plus total log-likelihood.

    Worked in log space; abstains contribute nothing to either class.
    """
    pos = votes == 1
    neg = votes == -1
    log_a = np.log(acc)
    log_na = np.log1p(-acc)
    # class INCLUDE: +1 votes agree, -1 votes disagree (and vice versa)
    ll_inc = pos @ log_a + neg @ log_na + np.log(prior)
    ll_exc = neg @ log_a + pos @ log_na + np.log1p(-prior)
    hi = np.maximum(ll_inc, ll_exc)
    log_z = hi + np.log(np.exp(ll_inc - hi) + np.exp(ll_exc - hi))
    return np.exp(ll_inc - log_z), float(np.sum(log_z))


def fit(matrix: LabelMatrix, config: FitConfig | None = None) -> LabelModelParams:
    """EM fit; deterministic for a given input (the seed is reserved for
    future stochastic initialization and currently unused)."""
    config = config or FitConfig()
    votes = np.asarray(matrix.votes, dtype=np.int8)
    if votes.size == 0 or not np.any(votes != 0):
        raise DegenerateMatrix("label matrix has no non-abstain votes")

    n_rules = votes.shape[1]
    prior = 0.5
    acc = np.full(n_rules, float(config.init_accuracy))
    acc = np.clip(acc, ACCURACY_FLOOR, ACCURACY_CEIL)
    trace: list[float] = []

    nonabstain = votes != 0
    votes_per_rule = nonabstain.sum(axis=0)

    for _ in range(config.max_iters):
        post, ll = _posteriors(votes, prior, acc)
        trace.append(ll)
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < config.tol:
            break
        # M-step: prior = mean posterior; accuracy = posterior-weighted
        # fraction of agreeing non-abstain votes
        prior = float(np.clip(post.mean(), PRIOR_FLOOR, 1 - PRIOR_FLOOR))
        agree_weight = np.where(votes == 1, post[:, None], 0.0) + \
            np.where(votes == -1, 1.0 - post[:, None], 0.0)
        with np.errstate(invalid="ignore"):
            new_acc = agree_weight.sum(axis=0) / votes_per_rule
        new_acc = np.where(votes_per_rule > 0, new_acc, acc)
        acc = np.clip(new_acc, ACCURACY_FLOOR, ACCURACY_CEIL)

    return LabelModelParams(class_prior=prior, accuracies=acc, log_likelihood=trace)


def posterior(params: LabelModelParams, row: Sequence[int]) -> float:
    """P(INCLUDE) for one vote row; the prior exactly when all abstain."""
    row = np.asarray(row, dtype=np.int8)
    if not np.any(row != 0):
        return params.class_prior
    post, _ = _posteriors(row[None, :], params.class_prior, params.accuracies)
    return float(post[0])


def posterior_batch(params: LabelModelParams, votes: np.ndarray) -> np.ndarray:
    votes = np.asarray(votes, dtype=np.int8)
    post, _ = _posteriors(votes, params.class_prior, params.accuracies)
    abstain = ~np.any(votes != 0, axis=1)
    post[abstain] = params.class_prior
    return post


def majority_vote(row: Sequence[int]) -> str:
    """Sign of the vote sum; ties (including all-abstain) go to INCLUDE."""
    total = int(sum(row))
    return EXCLUDE if total < 0 else INCLUDE


def save_label_matrix_csv(matrix: LabelMatrix, path) -> None:
    """Sparse triplets (record_id, rule_id, vote), abstains omitted."""
    with open(path, "w") as fh:
        fh.write("record_id,rule_id,vote\n")
        rows, cols = np.nonzero(matrix.votes)
        for i, j in zip(rows.tolist(), cols.tolist()):
            fh.write(f"{matrix.record_ids[i]},{matrix.rule_ids[j]},{int(matrix.votes[i, j])}\n")
