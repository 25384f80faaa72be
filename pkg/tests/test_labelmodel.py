"""Label-model EM: planted-parameter recovery, closed forms, invariants."""

from __future__ import annotations

import numpy as np
import pytest

from lrn.errors import DegenerateMatrix, EmptyRuleset
from lrn.labelmodel import (
    FitConfig,
    LabelMatrix,
    build_label_matrix,
    fit,
    majority_vote,
    posterior,
    posterior_batch,
    save_label_matrix_csv,
)
from lrn.rules import EXCLUDE, INCLUDE, Ruleset, upsert_rule

from conftest import make_record


def planted_matrix(seed: int, n: int = 1000, prior: float = 0.6,
                   accuracies=(0.9, 0.8, 0.8, 0.7, 0.6),
                   propensity: float = 1.0) -> tuple[LabelMatrix, np.ndarray]:
    """Generate votes from the model itself (full propensity by default)."""
    rng = np.random.default_rng(seed)
    y = np.where(rng.random(n) < prior, 1, -1)
    votes = np.zeros((n, len(accuracies)), dtype=np.int8)
    for j, acc in enumerate(accuracies):
        speaks = rng.random(n) < propensity
        correct = rng.random(n) < acc
        votes[:, j] = np.where(speaks, np.where(correct, y, -y), 0)
    matrix = LabelMatrix(votes=votes, record_ids=[str(i) for i in range(n)],
                         rule_ids=list(range(1, len(accuracies) + 1)))
    return matrix, y


def test_planted_recovery():
    matrix, _ = planted_matrix(seed=0)
    params = fit(matrix)
    assert abs(params.class_prior - 0.6) < 0.05
    expected = np.array([0.9, 0.8, 0.8, 0.7, 0.6])
    assert np.all(np.abs(params.accuracies - expected) < 0.05)


def test_log_likelihood_monotone():
    for seed in range(5):
        matrix, _ = planted_matrix(seed=seed, n=400)
        params = fit(matrix)
        trace = params.log_likelihood
        assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))


def test_identical_columns_get_equal_accuracy():
    rng = np.random.default_rng(4)
    col = np.where(rng.random(200) < 0.5, 1, -1).astype(np.int8)
    votes = np.stack([col, col, col], axis=1)
    matrix = LabelMatrix(votes=votes, record_ids=[str(i) for i in range(200)],
                         rule_ids=[1, 2, 3])
    params = fit(matrix)
    assert np.allclose(params.accuracies, params.accuracies[0])


def test_single_rule_posterior_closed_form():
    votes = np.ones((50, 1), dtype=np.int8)
    matrix = LabelMatrix(votes=votes, record_ids=[str(i) for i in range(50)], rule_ids=[1])
    params = fit(matrix, FitConfig(max_iters=0))  # keep the initial parameters
    pi, a = params.class_prior, float(params.accuracies[0])
    expected = pi * a / (pi * a + (1 - pi) * (1 - a))
    assert posterior(params, [1]) == pytest.approx(expected)


def test_posterior_hand_computation():
    params = fit(planted_matrix(seed=1, n=100, accuracies=(0.9, 0.9, 0.9))[0],
                 FitConfig(max_iters=0))
    params.class_prior = 0.5
    params.accuracies = np.array([0.9, 0.9, 0.9])
    # 0.9^3 / (0.9^3 + 0.1^3)
    assert posterior(params, [1, 1, 1]) == pytest.approx(0.99863, abs=1e-5)


def test_posterior_all_abstain_returns_prior():
    params = fit(planted_matrix(seed=2, n=100)[0])
    params.class_prior = 0.4
    assert posterior(params, [0, 0, 0, 0, 0]) == 0.4


def test_posterior_symmetric_tie():
    params = fit(planted_matrix(seed=3, n=100, accuracies=(0.8, 0.8))[0])
    params.class_prior = 0.5
    params.accuracies = np.array([0.7, 0.7])
    assert posterior(params, [1, -1]) == pytest.approx(0.5)


def test_column_permutation_equivariance():
    matrix, _ = planted_matrix(seed=5, n=300)
    params = fit(matrix)
    perm = [3, 0, 4, 1, 2]
    permuted = LabelMatrix(votes=matrix.votes[:, perm],
                           record_ids=matrix.record_ids,
                           rule_ids=[matrix.rule_ids[i] for i in perm])
    params_perm = fit(permuted)
    assert np.allclose(params_perm.accuracies, params.accuracies[perm])
    assert np.allclose(posterior_batch(params_perm, permuted.votes),
                       posterior_batch(params, matrix.votes))


def test_fit_deterministic():
    matrix, _ = planted_matrix(seed=6, n=300)
    p1, p2 = fit(matrix), fit(matrix)
    assert p1.class_prior == p2.class_prior
    assert np.array_equal(p1.accuracies, p2.accuracies)
    assert p1.log_likelihood == p2.log_likelihood


def test_equal_accuracies_order_matches_majority_margin():
    rng = np.random.default_rng(8)
    votes = rng.choice([-1, 0, 1], size=(20, 4)).astype(np.int8)
    matrix = LabelMatrix(votes=votes, record_ids=[str(i) for i in range(20)],
                         rule_ids=[1, 2, 3, 4])
    params = fit(matrix, FitConfig(max_iters=0))
    params.class_prior = 0.5
    params.accuracies = np.full(4, 0.7)
    post = posterior_batch(params, votes)
    margins = votes.sum(axis=1)
    # posterior ordering equals majority-vote margin ordering
    order_post = np.argsort(post, kind="stable")
    assert all(
        margins[i] <= margins[j]
        for i, j in zip(order_post, order_post[1:])
    )


def test_degenerate_matrix_rejected():
    votes = np.zeros((5, 3), dtype=np.int8)
    with pytest.raises(DegenerateMatrix):
        fit(LabelMatrix(votes=votes, record_ids=list("abcde"), rule_ids=[1, 2, 3]))


def test_majority_vote():
    assert majority_vote([1, -1, 1]) == INCLUDE
    assert majority_vote([-1, -1, 0]) == EXCLUDE
    assert majority_vote([1, -1]) == INCLUDE  # tie goes to INCLUDE
    assert majority_vote([0, 0]) == INCLUDE


def test_build_label_matrix_votes():
    rs = Ruleset()
    upsert_rule(rs, "glove", INCLUDE, 1)
    upsert_rule(rs, "vinyl", EXCLUDE, 1)
    records = [
        make_record("1", "", "surgical glove"),
        make_record("2", "", "nothing here"),
        make_record("3", "", "vinyl glove material"),
    ]
    matrix = build_label_matrix(rs, records, iteration=1)
    assert matrix.votes.tolist() == [[1, 0], [0, 0], [1, -1]]
    assert matrix.record_ids == ["1", "2", "3"]


def test_build_label_matrix_requires_both_classes():
    rs = Ruleset()
    upsert_rule(rs, "glove", INCLUDE, 1)
    with pytest.raises(EmptyRuleset):
        build_label_matrix(rs, [make_record("1", "", "x")], iteration=1)


def test_label_matrix_csv_sparse_triplets(tmp_path):
    rs = Ruleset()
    upsert_rule(rs, "glove", INCLUDE, 1)
    upsert_rule(rs, "vinyl", EXCLUDE, 1)
    matrix = build_label_matrix(rs, [make_record("9", "", "vinyl glove")], iteration=1)
    path = tmp_path / "labelmatrix.csv"
    save_label_matrix_csv(matrix, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "record_id,rule_id,vote"
    assert set(lines[1:]) == {"9,1,1", "9,2,-1"}
