"""Discriminative refinement: features, selection, training, potentials.

Records are embedded as L2-normalized TF-IDF vectors over unigrams and
bigrams of the normalized token stream. A simulated-annealing wrapper
searches feature subsets against cross-validated INCLUDE F1, and a
logistic model is trained on soft targets by full-batch gradient descent.
Potential scores mix prediction entropy with novelty (distance from the
already-labeled pool) to drive the feedback queue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyCorpus,
    InsufficientData,
    NonFiniteLoss,
)
from .textnorm import tokenize


@dataclass
class FeatureSpace:
    vocabulary: list[str]  # sorted unigrams + bigrams
    document_frequency: np.ndarray
    idf: np.ndarray

    @property
    def size(self) -> int:
        return len(self.vocabulary)


@dataclass
class TrainConfig:
    l2: float = 1e-3
    learning_rate: float = 1.0
    epochs: int = 300
    seed: int = 0


@dataclass
class ClassifierModel:
    weights: np.ndarray  # one per selected feature
    bias: float
    selected_features: list[int]  # indices into the full vocabulary
    n_features_total: int
    training_config: TrainConfig = field(default_factory=TrainConfig)


@dataclass
class PotentialScore:
    value: float
    uncertainty_component: float
    novelty_component: float


def _doc_terms(text: str) -> list[str]:
    tokens = tokenize(text)
    bigrams = [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    return tokens + bigrams


def record_text(record) -> str:
    if isinstance(record, str):
        return record
    return f"{record.title} {record.abstract}"


def featurize(corpus_slice, min_df: int = 2) -> tuple[FeatureSpace, np.ndarray]:
    """Deterministic vocabulary + row-normalized TF-IDF matrix.

    idf(t) = ln((1+N)/(1+df)) + 1. Rows with no in-vocabulary terms stay
    zero vectors.
    """
    docs = [_doc_terms(record_text(r)) for r in corpus_slice]
    if not docs:
        raise EmptyCorpus("cannot featurize an empty corpus slice")
    df_counts: dict[str, int] = {}
    for terms in docs:
        for term in set(terms):
            df_counts[term] = df_counts.get(term, 0) + 1
    vocabulary = sorted(t for t, c in df_counts.items() if c >= min_df)
    index = {t: i for i, t in enumerate(vocabulary)}
    n_docs = len(docs)
    df = np.array([df_counts[t] for t in vocabulary], dtype=np.float64)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0

    matrix = np.zeros((n_docs, len(vocabulary)), dtype=np.float64)
    for i, terms in enumerate(docs):
        for term in terms:
            j = index.get(term)
            if j is not None:
                matrix[i, j] += 1.0
    matrix *= idf
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    np.divide(matrix, norms, out=matrix, where=norms > 0)
    return FeatureSpace(vocabulary=vocabulary, document_frequency=df, idf=idf), matrix


def vectorize(space: FeatureSpace, records) -> np.ndarray:
    """Embed new records in an existing feature space (OOV terms dropped)."""
    index = {t: i for i, t in enumerate(space.vocabulary)}
    matrix = np.zeros((len(records), space.size), dtype=np.float64)
    for i, record in enumerate(records):
        for term in _doc_terms(record_text(record)):
            j = index.get(term)
            if j is not None:
                matrix[i, j] += 1.0
    matrix *= space.idf
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    np.divide(matrix, norms, out=matrix, where=norms > 0)
    return matrix


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grad(
    weights: np.ndarray, bias: float, vectors: np.ndarray,
    targets: np.ndarray, l2: float,
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy against soft targets + l2 on weights (not bias)."""
    n = vectors.shape[0]
    p = _sigmoid(vectors @ weights + bias)
    eps = 1e-12
    ce = -np.mean(targets * np.log(p + eps) + (1 - targets) * np.log(1 - p + eps))
    loss = float(ce + l2 * float(weights @ weights))
    residual = (p - targets) / n
    grad_w = vectors.T @ residual + 2.0 * l2 * weights
    grad_b = float(residual.sum())
    return loss, grad_w, grad_b


def train(
    vectors: np.ndarray,
    soft_labels: Sequence[float],
    config: TrainConfig | None = None,
    selected: Sequence[int] | None = None,
) -> ClassifierModel:
    """Full-batch gradient descent; loss must not increase between epochs."""
    config = config or TrainConfig()
    vectors = np.asarray(vectors, dtype=np.float64)
    targets = np.asarray(soft_labels, dtype=np.float64)
    n_total = vectors.shape[1]
    if selected is None:
        selected = list(range(n_total))
    selected = sorted(selected)
    x = vectors[:, selected]

    weights = np.zeros(len(selected))
    bias = 0.0
    prev_loss = math.inf
    for _ in range(config.epochs):
        loss, grad_w, grad_b = loss_and_grad(weights, bias, x, targets, config.l2)
        if not math.isfinite(loss):
            raise NonFiniteLoss(f"training loss became {loss}")
        if loss > prev_loss + 1e-9:
            raise NonFiniteLoss(
                f"training loss increased ({prev_loss} -> {loss}); lower the learning rate"
            )
        prev_loss = loss
        weights -= config.learning_rate * grad_w
        bias -= config.learning_rate * grad_b
    return ClassifierModel(
        weights=weights, bias=bias, selected_features=list(selected),
        n_features_total=n_total, training_config=config,
    )


def predict(model: ClassifierModel, record_vector: np.ndarray) -> float:
    """INCLUDE probability; 0.5 maps to INCLUDE at the decision threshold."""
    vec = np.asarray(record_vector, dtype=np.float64)
    if vec.shape[-1] != model.n_features_total:
        raise DimensionMismatch(
            f"vector has {vec.shape[-1]} features, model expects {model.n_features_total}"
        )
    score = vec[model.selected_features] @ model.weights + model.bias
    return float(_sigmoid(np.asarray([score]))[0])


def predict_batch(model: ClassifierModel, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[1] != model.n_features_total:
        raise DimensionMismatch(
            f"matrix has {matrix.shape[1]} features, model expects {model.n_features_total}"
        )
    return _sigmoid(matrix[:, model.selected_features] @ model.weights + model.bias)


def classify(probability: float) -> str:
    # >= keeps ties on the INCLUDE side (bias against false negatives)
    return "INCLUDE" if probability >= 0.5 else "EXCLUDE"


@dataclass
class SelectConfig:
    steps: int = 200
    t_start: float = 1.0
    cooling: float = 0.95
    cv_folds: int = 5
    cv_epochs: int = 100
    cv_learning_rate: float = 3.0
    cv_l2: float = 1e-3


def _cv_f1(x: np.ndarray, hard: np.ndarray, subset: list[int], folds: Sequence[np.ndarray],
           config: SelectConfig) -> float:
    """Pooled INCLUDE-class F1 over the cross-validation folds.

    All fold models train simultaneously: one weight column per fold, with
    each fold's held-out rows masked out of its gradient.
    """
    cols = x[:, subset]
    n, k = len(hard), len(folds)
    train_mask = np.ones((n, k))
    for fi, fold in enumerate(folds):
        train_mask[fold, fi] = 0.0
    train_sizes = train_mask.sum(axis=0)
    weights = np.zeros((len(subset), k))
    bias = np.zeros(k)
    targets = hard[:, None]
    for _ in range(config.cv_epochs):
        p = _sigmoid(cols @ weights + bias)
        residual = (p - targets) * train_mask / train_sizes
        weights -= config.cv_learning_rate * (cols.T @ residual + 2 * config.cv_l2 * weights)
        bias -= config.cv_learning_rate * residual.sum(axis=0)
    p = _sigmoid(cols @ weights + bias)
    pred = np.zeros(n, dtype=bool)
    for fi, fold in enumerate(folds):
        pred[fold] = p[fold, fi] >= 0.5
    actual = hard == 1
    tp = int(np.sum(pred & actual))
    fp = int(np.sum(pred & ~actual))
    fn = int(np.sum(~pred & actual))
    return 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0


def select_features(
    vectors: np.ndarray,
    soft_labels: Sequence[float],
    budget: int,
    seed: int = 0,
    config: SelectConfig | None = None,
) -> list[int]:
    """Simulated-annealing wrapper search, seed-deterministic.

    The starting subset is the budget's worth of features most correlated
    with the thresholded labels; annealing moves then toggle one feature in
    or out (a swap when at budget) under geometric cooling, and the best
    subset ever evaluated is returned.
    """
    config = config or SelectConfig()
    x = np.asarray(vectors, dtype=np.float64)
    n, n_features = x.shape
    if n < 10:
        raise InsufficientData("feature selection needs at least 10 records")
    if budget < 1:
        raise InsufficientData("budget must be >= 1")
    hard = (np.asarray(soft_labels, dtype=np.float64) >= 0.5).astype(np.float64)

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    folds = np.array_split(order, config.cv_folds)

    budget = min(budget, n_features)
    if budget >= n_features:
        current = set(range(n_features))
    else:
        centered = hard - hard.mean()
        signal = np.abs(centered @ x)
        current = set(np.argsort(-signal, kind="stable")[:budget].tolist())

    cache: dict[frozenset, float] = {}

    def score(subset: set[int]) -> float:
        key = frozenset(subset)
        if key not in cache:
            cache[key] = _cv_f1(x, hard, sorted(subset), folds, config)
        return cache[key]

    current_score = score(current)
    best, best_score = set(current), current_score
    temp = config.t_start

    for _ in range(config.steps):
        candidate = set(current)
        pick = int(rng.integers(n_features))
        if pick in candidate:
            if len(candidate) > 1:
                candidate.remove(pick)
        elif len(candidate) < budget:
            candidate.add(pick)
        else:
            drop = sorted(candidate)[int(rng.integers(len(candidate)))]
            candidate.remove(drop)
            candidate.add(pick)
        if candidate == current:
            temp *= config.cooling
            continue
        cand_score = score(candidate)
        delta = cand_score - current_score
        if delta > 0 or rng.random() < math.exp(delta / max(temp, 1e-12)):
            current, current_score = candidate, cand_score
            if current_score > best_score:
                best, best_score = set(current), current_score
        temp *= config.cooling

    return sorted(best)


def binary_entropy(p: float) -> float:
    """Entropy in bits; 0 at the endpoints."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def potential(
    record_vector: np.ndarray,
    model: ClassifierModel,
    labeled_vectors: np.ndarray | None,
    alpha: float = 0.5,
) -> PotentialScore:
    """alpha * prediction entropy + (1 - alpha) * novelty.

    Novelty is 1 - max cosine similarity to any labeled vector and 1 when
    nothing is labeled yet. Vectors are unit-norm, so cosine is a dot.
    """
    p = predict(model, record_vector)
    uncertainty = binary_entropy(p)
    if labeled_vectors is None or len(labeled_vectors) == 0:
        novelty = 1.0
    else:
        sims = np.asarray(labeled_vectors) @ np.asarray(record_vector)
        novelty = 1.0 - float(np.max(sims))
        novelty = min(max(novelty, 0.0), 1.0)
    value = alpha * uncertainty + (1 - alpha) * novelty
    return PotentialScore(value=value, uncertainty_component=uncertainty,
                          novelty_component=novelty)


def rank_queue(potentials: Mapping[str, PotentialScore | float], k: int = 20) -> list[str]:
    """Top-k pmids by potential descending, ties by numeric pmid ascending."""

    def value(score) -> float:
        return score.value if isinstance(score, PotentialScore) else float(score)

    ranked = sorted(potentials.items(), key=lambda kv: (-value(kv[1]), int(kv[0])))
    return [pmid for pmid, _ in ranked[:k]]
