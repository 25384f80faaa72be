"""PRISMA 2020 flow counts and deterministic diagram rendering.

The tally is pure arithmetic over recorded screening decisions; the two
conservation identities are enforced, so a violation always means a
bookkeeping bug upstream. Rendering emits static geometry (no layout
engine) as SVG, Graphviz dot, or JSON.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from xml.sax.saxutils import escape

from .errors import InconsistentState, UnsupportedFormat


@dataclass(frozen=True)
class PrismaCounts:
    identified: int
    duplicates_removed: int
    removed_other_reasons: int  # language restrictions
    ineligible_by_criteria: int  # exclusion-query matches + abstract-less records
    records_screened: int
    records_excluded: int  # human screening decisions
    sought_fulltext: int
    included: int

    def validate(self) -> None:
        values = asdict(self)
        negatives = [k for k, v in values.items() if v < 0]
        if negatives:
            raise InconsistentState(f"negative PRISMA counts: {negatives}")
        screened = (
            self.identified
            - self.duplicates_removed
            - self.removed_other_reasons
            - self.ineligible_by_criteria
        )
        if screened != self.records_screened:
            raise InconsistentState(
                f"screened {self.records_screened} != identified minus removals {screened}"
            )
        if self.records_screened - self.records_excluded != self.sought_fulltext:
            raise InconsistentState("sought_fulltext breaks the screening identity")
        if self.sought_fulltext < self.included:
            raise InconsistentState("included exceeds reports sought")


def tally(
    identified: int,
    duplicates_removed: int,
    removed_other_reasons: int,
    ineligible_by_criteria: int,
    records_excluded: int,
    included: int,
) -> PrismaCounts:
    """Derive the dependent boxes and enforce conservation."""
    counts = PrismaCounts(
        identified=identified,
        duplicates_removed=duplicates_removed,
        removed_other_reasons=removed_other_reasons,
        ineligible_by_criteria=ineligible_by_criteria,
        records_screened=identified
        - duplicates_removed
        - removed_other_reasons
        - ineligible_by_criteria,
        records_excluded=records_excluded,
        sought_fulltext=identified
        - duplicates_removed
        - removed_other_reasons
        - ineligible_by_criteria
        - records_excluded,
        included=included,
    )
    counts.validate()
    return counts


def counts_to_json(counts: PrismaCounts) -> str:
    return json.dumps(asdict(counts), indent=2, sort_keys=True) + "\n"


def counts_from_json(payload: str) -> PrismaCounts:
    counts = PrismaCounts(**json.loads(payload))
    counts.validate()
    return counts


_BOX_W = 330
_BOX_H = 72
_SIDE_X = 420
_MAIN_X = 40


def _svg_box(x: int, y: int, lines: list[str]) -> str:
    parts = [
        f'  <rect x="{x}" y="{y}" width="{_BOX_W}" height="{_BOX_H}" '
        'fill="#ffffff" stroke="#1a355e" stroke-width="1.5"/>'
    ]
    ty = y + 22
    for line in lines:
        parts.append(f'  <text x="{x + 12}" y="{ty}" font-size="13">{escape(line)}</text>')
        ty += 18
    return "\n".join(parts)


def _svg_arrow(x1: int, y1: int, x2: int, y2: int) -> str:
    return (
        f'  <line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" '
        'stroke="#1a355e" stroke-width="1.5" marker-end="url(#arrow)"/>'
    )


def render(counts: PrismaCounts, format: str = "svg") -> str:
    """PRISMA 2020 document in the requested format (svg, dot, or json)."""
    counts.validate()
    if format == "json":
        return counts_to_json(counts)
    if format == "dot":
        return _render_dot(counts)
    if format == "svg":
        return _render_svg(counts)
    raise UnsupportedFormat(f"unknown PRISMA format {format!r}")


def _render_svg(c: PrismaCounts) -> str:
    mid = _MAIN_X + _BOX_W // 2
    boxes = [
        _svg_box(_MAIN_X, 40, [
            "Records identified from PubMed",
            f"(n = {c.identified})",
        ]),
        _svg_box(_SIDE_X, 40, [
            f"Duplicate records removed (n = {c.duplicates_removed})",
            f"Records marked ineligible (n = {c.ineligible_by_criteria})",
            f"Records removed for other reasons (n = {c.removed_other_reasons})",
        ]),
        _svg_box(_MAIN_X, 180, [
            "Records screened",
            f"(n = {c.records_screened})",
        ]),
        _svg_box(_SIDE_X, 180, [
            "Records excluded",
            f"(n = {c.records_excluded})",
        ]),
        _svg_box(_MAIN_X, 320, [
            "Reports sought for retrieval",
            f"(n = {c.sought_fulltext})",
        ]),
        _svg_box(_MAIN_X, 460, [
            "Studies included in review",
            f"(n = {c.included})",
        ]),
    ]
    arrows = [
        _svg_arrow(mid, 40 + _BOX_H, mid, 180),
        _svg_arrow(_MAIN_X + _BOX_W, 76, _SIDE_X, 76),
        _svg_arrow(mid, 180 + _BOX_H, mid, 320),
        _svg_arrow(_MAIN_X + _BOX_W, 216, _SIDE_X, 216),
        _svg_arrow(mid, 320 + _BOX_H, mid, 460),
    ]
    body = "\n".join(boxes + arrows)
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="800" height="580" viewBox="0 0 800 580">
  <defs>
    <marker id="arrow" markerWidth="8" markerHeight="8" refX="7" refY="4" orient="auto">
      <path d="M0,0 L8,4 L0,8 z" fill="#1a355e"/>
    </marker>
  </defs>
  <text x="{_MAIN_X}" y="24" font-size="15" font-weight="bold">PRISMA 2020 flow diagram</text>
{body}
</svg>
"""


def _render_dot(c: PrismaCounts) -> str:
    return f"""digraph prisma {{
  node [shape=box, fontsize=11];
  identified [label="Records identified from PubMed\\n(n = {c.identified})"];
  removed [label="Duplicates removed (n = {c.duplicates_removed})\\nMarked ineligible (n = {c.ineligible_by_criteria})\\nOther reasons (n = {c.removed_other_reasons})"];
  screened [label="Records screened\\n(n = {c.records_screened})"];
  excluded [label="Records excluded\\n(n = {c.records_excluded})"];
  sought [label="Reports sought for retrieval\\n(n = {c.sought_fulltext})"];
  included [label="Studies included in review\\n(n = {c.included})"];
  identified -> removed;
  identified -> screened;
  screened -> excluded;
  screened -> sought;
  sought -> included;
}}
"""
