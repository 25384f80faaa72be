"""Persistent record store: dedup, eligibility screening, negative set,
and reference-library import.

Records are kept as newline-delimited JSON in the session directory so the
store is append-friendly and diffable. Negative-set records are flagged,
never deleted: they stay available as EXCLUDE-class training signal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path

from .errors import ParseError
from .pubmed import RawRecord
from .textnorm import normalize_phrase

PENDING = "pending"
ELIGIBLE = "eligible"
INELIGIBLE = "ineligible"

NO_ABSTRACT = "NoAbstract"
LANGUAGE_BLOCKED = "LanguageBlocked"
DUPLICATE = "Duplicate"
EXCLUSION_QUERY_MATCH = "ExclusionQueryMatch"

INELIGIBILITY_REASONS = (NO_ABSTRACT, LANGUAGE_BLOCKED, DUPLICATE, EXCLUSION_QUERY_MATCH)
DEFAULT_BLOCKED_LANGUAGES = frozenset({"rus", "chi", "zho"})


@dataclass
class Record:
    pmid: str
    title: str
    abstract: str
    language_codes: tuple[str, ...]
    publication_date: date
    authors: tuple[str, ...]
    keywords: tuple[str, ...]
    eligibility: str = PENDING
    ineligibility_reason: str | None = None
    source_strings: tuple[int, ...] = ()
    in_negative_set: bool = False
    fulltext_path: str | None = None

    @classmethod
    def from_raw(cls, raw: RawRecord, string_id: int) -> "Record":
        return cls(
            pmid=raw.pmid,
            title=raw.title,
            abstract=raw.abstract,
            language_codes=raw.language_codes,
            publication_date=raw.publication_date,
            authors=raw.authors,
            keywords=raw.keywords,
            source_strings=(string_id,),
        )


@dataclass
class EligibilityDecision:
    status: str
    reason: str | None = None


@dataclass
class Corpus:
    records: dict[str, Record] = field(default_factory=dict)
    provenance: dict[int, list[str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def ordered(self) -> list[Record]:
        return [self.records[p] for p in sorted(self.records, key=int)]

    def eligible(self) -> list[Record]:
        return [r for r in self.ordered() if r.eligibility == ELIGIBLE]

    def negative(self) -> list[Record]:
        return [r for r in self.ordered() if r.in_negative_set]

    def identified_total(self) -> int:
        """Raw retrieval count across strings, duplicates included."""
        return sum(len(pmids) for pmids in self.provenance.values())

    def reason_counts(self) -> dict[str, int]:
        counts = {reason: 0 for reason in INELIGIBILITY_REASONS}
        for record in self.records.values():
            if record.eligibility == INELIGIBLE and record.ineligibility_reason:
                counts[record.ineligibility_reason] += 1
        return counts


@dataclass
class ReferenceLibrary:
    name: str
    pmids: frozenset[str]
    total_reported: int | None = None


@dataclass
class MergeReport:
    duplicates_merged: int = 0
    suspected_title_duplicates: list[tuple[str, str]] = field(default_factory=list)


def merge_and_dedupe(batches: list[tuple[int, list[RawRecord]]]) -> tuple[Corpus, MergeReport]:
    """Pool per-string batches; first pmid occurrence wins, later ones add
    provenance. Same-title/different-pmid pairs are reported, kept apart."""
    corpus = Corpus()
    report = MergeReport()
    titles_seen: dict[str, str] = {}
    for string_id, records in batches:
        provenance = corpus.provenance.setdefault(string_id, [])
        for raw in records:
            provenance.append(raw.pmid)
            existing = corpus.records.get(raw.pmid)
            if existing is not None:
                if string_id not in existing.source_strings:
                    existing.source_strings = existing.source_strings + (string_id,)
                report.duplicates_merged += 1
                continue
            record = Record.from_raw(raw, string_id)
            title_key = normalize_phrase(raw.title, stem=False)
            if title_key in titles_seen and titles_seen[title_key] != raw.pmid:
                report.suspected_title_duplicates.append((titles_seen[title_key], raw.pmid))
            else:
                titles_seen[title_key] = raw.pmid
            corpus.records[raw.pmid] = record
    return corpus, report


def screen_eligibility(
    record: Record, blocked_languages: frozenset[str] = DEFAULT_BLOCKED_LANGUAGES
) -> EligibilityDecision:
    """Abstract-less records first, then blocked languages, else eligible."""
    if not record.abstract.strip():
        return EligibilityDecision(INELIGIBLE, NO_ABSTRACT)
    if any(code.lower() in blocked_languages for code in record.language_codes):
        return EligibilityDecision(INELIGIBLE, LANGUAGE_BLOCKED)
    return EligibilityDecision(ELIGIBLE)


def screen_corpus(
    corpus: Corpus, blocked_languages: frozenset[str] = DEFAULT_BLOCKED_LANGUAGES
) -> Corpus:
    """Apply screening to every pending record in place."""
    for record in corpus.records.values():
        if record.eligibility != PENDING:
            continue
        decision = screen_eligibility(record, blocked_languages)
        record.eligibility = decision.status
        record.ineligibility_reason = decision.reason
    return corpus


@dataclass
class NegativeSetReport:
    flagged: int = 0
    unknown_pmids: list[str] = field(default_factory=list)


def build_negative_set(corpus: Corpus, exclusion_pmids: set[str]) -> tuple[Corpus, NegativeSetReport]:
    """Flag exclusion-query matches; they stay as EXCLUDE training signal."""
    report = NegativeSetReport()
    for pmid in sorted(exclusion_pmids):
        record = corpus.records.get(pmid)
        if record is None:
            report.unknown_pmids.append(pmid)
            continue
        if not record.in_negative_set:
            record.in_negative_set = True
            record.eligibility = INELIGIBLE
            record.ineligibility_reason = EXCLUSION_QUERY_MATCH
            report.flagged += 1
    return corpus, report


def import_reference_library(path: Path | str, name: str) -> tuple[ReferenceLibrary, list[str]]:
    """Load pmids from a one-per-line file or a CSV with a ``pmid`` column.

    Returns the library plus warnings for collapsed duplicates.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    pmids: list[str] = []
    warnings: list[str] = []
    seen: set[str] = set()

    column = None
    start = 0
    if lines and "," in lines[0]:
        header = [h.strip().lower() for h in lines[0].split(",")]
        if "pmid" not in header:
            raise ParseError(f"{path}: CSV header lacks a pmid column", line_no=1)
        column = header.index("pmid")
        start = 1

    for line_no, line in enumerate(lines[start:], start=start + 1):
        token = line.split(",")[column].strip() if column is not None else line.strip()
        if not token:
            continue
        if not token.isdigit():
            raise ParseError(f"{path}:{line_no}: not a pmid: {token!r}", line_no=line_no)
        if token in seen:
            warnings.append(f"line {line_no}: duplicate pmid {token} collapsed")
            continue
        seen.add(token)
        pmids.append(token)
    if not pmids:
        raise ParseError(f"{path}: no pmids found")
    return ReferenceLibrary(name=name, pmids=frozenset(pmids)), warnings


# --- persistence ------------------------------------------------------------


def _record_to_json(record: Record) -> dict:
    return {
        "pmid": record.pmid,
        "title": record.title,
        "abstract": record.abstract,
        "language_codes": list(record.language_codes),
        "publication_date": record.publication_date.isoformat(),
        "authors": list(record.authors),
        "keywords": list(record.keywords),
        "eligibility": record.eligibility,
        "ineligibility_reason": record.ineligibility_reason,
        "source_strings": list(record.source_strings),
        "in_negative_set": record.in_negative_set,
        "fulltext_path": record.fulltext_path,
    }


def _record_from_json(payload: dict) -> Record:
    return Record(
        pmid=payload["pmid"],
        title=payload["title"],
        abstract=payload["abstract"],
        language_codes=tuple(payload["language_codes"]),
        publication_date=date.fromisoformat(payload["publication_date"]),
        authors=tuple(payload["authors"]),
        keywords=tuple(payload["keywords"]),
        eligibility=payload["eligibility"],
        ineligibility_reason=payload["ineligibility_reason"],
        source_strings=tuple(payload["source_strings"]),
        in_negative_set=payload["in_negative_set"],
        fulltext_path=payload.get("fulltext_path"),
    )


def save_corpus(corpus: Corpus, path: Path | str) -> None:
    path = Path(path)
    with open(path, "w") as fh:
        header = {"provenance": {str(k): v for k, v in sorted(corpus.provenance.items())}}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for record in corpus.ordered():
            fh.write(json.dumps(_record_to_json(record), sort_keys=True) + "\n")


def load_corpus(path: Path | str) -> Corpus:
    path = Path(path)
    corpus = Corpus()
    with open(path) as fh:
        header = json.loads(fh.readline())
        corpus.provenance = {int(k): v for k, v in header["provenance"].items()}
        for line in fh:
            if not line.strip():
                continue
            record = _record_from_json(json.loads(line))
            corpus.records[record.pmid] = record
    return corpus


def copy_record(record: Record) -> Record:
    return replace(record)
