"""Set-level agreement between classified corpora and reference libraries.

The bootstrap null draws both sets uniformly without replacement from a
declared universe at their observed sizes; since only the intersection size
matters, replicates reduce to hypergeometric draws, which keeps a million
replications cheap and makes the count reduction independent of ordering.
p-values use add-one smoothing so they are never exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyList, SetsNotInUniverse
from .xstats import bh_adjust


@dataclass
class SetComparison:
    name_a: str
    name_b: str
    size_a: int
    size_b: int
    intersection: int
    jaccard: float
    p_raw: float
    p_adjusted: float | None
    replications: int
    seed: int


@dataclass
class ReferenceComparison:
    tp: int
    fp: int
    fn: int
    tn: int
    reference_in_corpus: int
    coverage: float  # tp / |reference ∩ corpus|
    library_coverage: float | None  # tp / total_reported, when reported


def jaccard(set_a: Iterable, set_b: Iterable) -> float:
    """|A∩B| / |A∪B|; 1.0 when both sets are empty."""
    a, b = set(set_a), set(set_b)
    union = len(a | b)
    if union == 0:
        return 1.0
    return len(a & b) / union


def _null_exceedance_count(
    size_a: int, size_b: int, k_observed: int, universe_size: int,
    replications: int, seed: int,
) -> int:
    """#replicates whose intersection reaches k_observed under the null.

    J = k/(|A|+|B|-k) is monotone in k, so comparing intersection sizes is
    exactly comparing Jaccard values, with no float ties.
    """
    rng = np.random.default_rng(seed)
    draws = rng.hypergeometric(size_a, universe_size - size_a, size_b, size=replications)
    return int(np.count_nonzero(draws >= k_observed))


def bootstrap_p(
    set_a: Iterable,
    set_b: Iterable,
    universe: Iterable,
    replications: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Smoothed exceedance p-value for the observed Jaccard overlap."""
    a, b, u = set(set_a), set(set_b), set(universe)
    if replications < 1:
        raise EmptyList("replications must be >= 1")
    if not a <= u or not b <= u:
        raise SetsNotInUniverse("both sets must be subsets of the universe")
    exceed = _null_exceedance_count(len(a), len(b), len(a & b), len(u), replications, seed)
    return (1 + exceed) / (1 + replications)


def compare_to_reference(predicted_include: Iterable, reference, corpus_pmids: Iterable) -> ReferenceComparison:
    """Reference confusion and coverage for one predicted INCLUDE set.

    ``reference`` needs ``pmids`` and optional ``total_reported`` attributes.
    """
    predicted = set(predicted_include)
    corpus = set(corpus_pmids)
    ref_in_corpus = set(reference.pmids) & corpus
    tp = len(predicted & set(reference.pmids))
    fn = len(ref_in_corpus) - tp
    fp = len(predicted) - tp
    tn = len(corpus) - tp - fn - fp
    coverage = tp / len(ref_in_corpus) if ref_in_corpus else 0.0
    total_reported = getattr(reference, "total_reported", None)
    library_coverage = tp / total_reported if total_reported else None
    return ReferenceComparison(
        tp=tp, fp=fp, fn=fn, tn=tn,
        reference_in_corpus=len(ref_in_corpus),
        coverage=coverage,
        library_coverage=library_coverage,
    )


def pairwise_table(comparisons: Sequence[SetComparison]) -> list[SetComparison]:
    """BH-adjust raw p-values across the listed comparisons."""
    if not comparisons:
        raise EmptyList("pairwise_table requires at least one comparison")
    adjusted = bh_adjust([c.p_raw for c in comparisons])
    return [
        SetComparison(
            name_a=c.name_a, name_b=c.name_b, size_a=c.size_a, size_b=c.size_b,
            intersection=c.intersection, jaccard=c.jaccard, p_raw=c.p_raw,
            p_adjusted=p_adj, replications=c.replications, seed=c.seed,
        )
        for c, p_adj in zip(comparisons, adjusted)
    ]


def compare_sets(
    name_a: str,
    set_a: Iterable,
    name_b: str,
    set_b: Iterable,
    universe: Iterable | None = None,
    replications: int = 1_000_000,
    seed: int = 0,
) -> SetComparison:
    """Jaccard + bootstrap significance for one pair of pmid sets.

    The universe defaults to the union of the two sets when not given.
    """
    a, b = set(set_a), set(set_b)
    u = set(universe) if universe is not None else a | b
    p = bootstrap_p(a, b, u, replications=replications, seed=seed)
    return SetComparison(
        name_a=name_a, name_b=name_b, size_a=len(a), size_b=len(b),
        intersection=len(a & b), jaccard=jaccard(a, b),
        p_raw=p, p_adjusted=None, replications=replications, seed=seed,
    )
