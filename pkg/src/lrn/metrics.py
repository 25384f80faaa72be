"""Agreement statistics between user labels and model predictions.

Confusion matrices are 2x2 over {INCLUDE, EXCLUDE} with rows = actual
(user) and columns = predicted (model). Zero-denominator conventions:
recall/precision/F default to 0 for empty rows/columns, and kappa is 0
when expected agreement is 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from .errors import EmptyList
from .rules import EXCLUDE, INCLUDE

CLASSES = (INCLUDE, EXCLUDE)


@dataclass
class ConfusionMatrix:
    # counts[actual][predicted], order (INCLUDE, EXCLUDE)
    counts: list[list[int]]

    @property
    def n(self) -> int:
        return sum(self.counts[0]) + sum(self.counts[1])

    def row_total(self, i: int) -> int:
        return sum(self.counts[i])

    def col_total(self, j: int) -> int:
        return self.counts[0][j] + self.counts[1][j]


@dataclass
class ClassMetrics:
    recall: float
    precision: float
    f_score: float


@dataclass
class IterationMetrics:
    kappa: float
    accuracy: float
    per_class: dict[str, ClassMetrics]
    average_potential: float
    confusion: ConfusionMatrix | None = field(default=None)


def confusion(pairs: Iterable[tuple[str, str]]) -> ConfusionMatrix:
    """Tabulate (actual, predicted) label pairs."""
    counts = [[0, 0], [0, 0]]
    index = {INCLUDE: 0, EXCLUDE: 1}
    for actual, predicted in pairs:
        counts[index[actual]][index[predicted]] += 1
    return ConfusionMatrix(counts)


def kappa(m: ConfusionMatrix) -> float:
    """Cohen's kappa; 0 when chance agreement is total."""
    n = m.n
    if n < 1:
        raise EmptyList("kappa requires at least one pair")
    p_o = (m.counts[0][0] + m.counts[1][1]) / n
    p_e = sum((m.row_total(i) / n) * (m.col_total(i) / n) for i in (0, 1))
    if p_e >= 1.0:
        return 0.0
    return (p_o - p_e) / (1.0 - p_e)


def accuracy(m: ConfusionMatrix) -> float:
    n = m.n
    if n < 1:
        raise EmptyList("accuracy requires at least one pair")
    return (m.counts[0][0] + m.counts[1][1]) / n


def class_metrics(m: ConfusionMatrix) -> dict[str, ClassMetrics]:
    """Per-class recall/precision/F with zero-denominator fallbacks."""
    if m.n < 1:
        raise EmptyList("class_metrics requires at least one pair")
    out = {}
    for i, cls in enumerate(CLASSES):
        diag = m.counts[i][i]
        row = m.row_total(i)
        col = m.col_total(i)
        recall = diag / row if row else 0.0
        precision = diag / col if col else 0.0
        f = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        out[cls] = ClassMetrics(recall=recall, precision=precision, f_score=f)
    return out


def average_potential(potentials: Sequence[float]) -> float:
    if not potentials:
        raise EmptyList("average_potential requires a nonempty list")
    return sum(potentials) / len(potentials)


def format_percent(fraction: float, decimals: int = 2) -> str:
    """Render a fraction as a percent string, half-away-from-zero."""
    quantum = Decimal(1).scaleb(-decimals)
    value = (Decimal(repr(float(fraction))) * 100).quantize(quantum, rounding=ROUND_HALF_UP)
    return f"{value}%"


def format_number(value: float, decimals: int = 4) -> str:
    quantum = Decimal(1).scaleb(-decimals)
    return str(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_UP))
