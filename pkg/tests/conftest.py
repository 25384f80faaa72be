"""Shared builders: synthetic records, corpora, and E-utilities fixtures."""

from __future__ import annotations

from datetime import date
from pathlib import Path
from xml.sax.saxutils import escape

import pytest

from lrn.corpus import ELIGIBLE, Record
from lrn.pubmed import (
    RawRecord,
    SearchSpec,
    build_fetch_request,
    build_search_request,
    FETCH_BATCH,
)


def make_record(pmid: str, title: str = "", abstract: str = "", **kwargs) -> Record:
    defaults = dict(
        language_codes=("eng",),
        publication_date=date(2000, 1, 1),
        authors=("Doe, Jane",),
        keywords=(),
        eligibility=ELIGIBLE,
    )
    defaults.update(kwargs)
    return Record(pmid=pmid, title=title, abstract=abstract, **defaults)


def make_raw(pmid: str, title: str = "Title", abstract: str = "Abstract text",
             languages=("eng",), pub=date(2000, 1, 1), authors=(("Doe", "Jane"),),
             keywords=("gloves",)) -> RawRecord:
    return RawRecord(
        pmid=pmid, title=title, abstract=abstract,
        language_codes=tuple(languages), publication_date=pub,
        authors=tuple(f"{last}, {fore}" for last, fore in authors),
        keywords=tuple(keywords),
    )


def esearch_xml(count: int, ids: list[str], translation: str = "translated query",
                retstart: int = 0, retmax: int = 200) -> str:
    id_block = "".join(f"<Id>{i}</Id>" for i in ids)
    return (
        '<?xml version="1.0" encoding="UTF-8" ?>\n'
        "<eSearchResult>"
        f"<Count>{count}</Count><RetMax>{retmax}</RetMax><RetStart>{retstart}</RetStart>"
        f"<IdList>{id_block}</IdList>"
        f"<QueryTranslation>{escape(translation)}</QueryTranslation>"
        "</eSearchResult>"
    )


def efetch_xml(articles: list[dict]) -> str:
    """articles: dicts with pmid/title/abstract/languages/year/authors/keywords."""
    blocks = []
    for art in articles:
        abstract = ""
        if art.get("abstract"):
            abstract = f"<Abstract><AbstractText>{escape(art['abstract'])}</AbstractText></Abstract>"
        languages = "".join(
            f"<Language>{lang}</Language>" for lang in art.get("languages", ("eng",))
        )
        authors = "".join(
            "<Author><LastName>{}</LastName><ForeName>{}</ForeName></Author>".format(
                escape(last), escape(fore)
            )
            for last, fore in art.get("authors", (("Doe", "Jane"),))
        )
        keywords = "".join(
            f"<Keyword>{escape(k)}</Keyword>" for k in art.get("keywords", ())
        )
        blocks.append(
            "<PubmedArticle><MedlineCitation>"
            f"<PMID>{art['pmid']}</PMID>"
            "<Article>"
            f"<Journal><JournalIssue><PubDate><Year>{art.get('year', 2000)}</Year>"
            "<Month>1</Month><Day>1</Day></PubDate></JournalIssue>"
            "<Title>Test Journal</Title></Journal>"
            f"<ArticleTitle>{escape(art['title'])}</ArticleTitle>"
            f"{abstract}"
            f"<AuthorList>{authors}</AuthorList>"
            f"{languages}"
            "</Article>"
            f"<KeywordList>{keywords}</KeywordList>"
            "</MedlineCitation></PubmedArticle>"
        )
    return (
        '<?xml version="1.0" encoding="UTF-8" ?>\n'
        f"<PubmedArticleSet>{''.join(blocks)}</PubmedArticleSet>"
    )


def write_search_fixtures(
    fixture_dir: Path, spec: SearchSpec, ids: list[str],
    translation: str = "translated query", query_text: str | None = None,
) -> None:
    """Write one esearch fixture per page the client will request."""
    fixture_dir.mkdir(parents=True, exist_ok=True)
    count = len(ids)
    pages = max(1, -(-count // spec.page_size))
    for page in range(pages):
        descriptor = build_search_request(spec, page, query_text=query_text)
        chunk = ids[page * spec.page_size : (page + 1) * spec.page_size]
        body = esearch_xml(count, chunk, translation=translation,
                           retstart=page * spec.page_size, retmax=spec.page_size)
        (fixture_dir / descriptor.fixture_name()).write_text(body)


def write_fetch_fixtures(fixture_dir: Path, pmids: list[str], articles: dict[str, dict]) -> None:
    """Write efetch fixtures for the batches fetch_records will request."""
    fixture_dir.mkdir(parents=True, exist_ok=True)
    for start in range(0, len(pmids), FETCH_BATCH):
        batch = pmids[start : start + FETCH_BATCH]
        descriptor = build_fetch_request(batch)
        body = efetch_xml([articles[p] for p in batch if p in articles])
        (fixture_dir / descriptor.fixture_name()).write_text(body)


INCLUDE_VOCAB = [
    "surgical glove", "puncture", "latex", "double gloving", "barrier",
    "operation", "perforation", "contamination", "glove damage", "sterile",
]
EXCLUDE_VOCAB = [
    "vinyl", "dentist", "examination glove", "nitrile", "veterinary",
    "condom", "laboratory assay", "orthodontic", "hand washing", "powder",
]
FILLER_VOCAB = [
    "study", "patients", "cohort", "randomized", "outcomes", "hospital",
    "method", "results", "followup", "clinical",
]


def synthetic_articles(pmids: list[str], seed: int = 20240101) -> dict[str, dict]:
    """Deterministic two-theme article set with screening edge cases.

    Every 19th record lacks an abstract, every 23rd is Russian/Chinese.
    Records whose index is divisible by 3 lean EXCLUDE, the rest INCLUDE.
    """
    import random as _random

    rng = _random.Random(seed)
    articles = {}
    for idx, pmid in enumerate(pmids):
        include_theme = idx % 3 != 0
        vocab = INCLUDE_VOCAB if include_theme else EXCLUDE_VOCAB
        words = [
            vocab[rng.randrange(len(vocab))] for _ in range(6)
        ] + [FILLER_VOCAB[rng.randrange(len(FILLER_VOCAB))] for _ in range(6)]
        rng.shuffle(words)
        abstract = " ".join(words) + "."
        if idx % 19 == 7:
            abstract = ""
        languages = ("eng",)
        if idx % 23 == 11:
            languages = ("rus",) if idx % 2 else ("chi",)
        articles[pmid] = {
            "pmid": pmid,
            "title": f"{'Glove practice' if include_theme else 'Adjacent topic'} report {pmid}",
            "abstract": abstract,
            "languages": languages,
            "year": 1990 + idx % 30,
            "keywords": ("gloves",) if include_theme else (),
            "authors": (("Author", f"N{idx % 9}"),),
            "include_theme": include_theme,
        }
    return articles


def stage_pubmed_fixtures(fixture_dir: Path, spec: SearchSpec, pmids: list[str],
                          articles: dict[str, dict],
                          exclusion_pmids: list[str] | None = None) -> None:
    """All fixtures one search string needs: result pages, fetch batches,
    and the exclusion search when the spec declares one."""
    write_search_fixtures(fixture_dir, spec, pmids)
    write_fetch_fixtures(fixture_dir, pmids, articles)
    if spec.exclusion_query_text is not None:
        write_search_fixtures(fixture_dir, spec, exclusion_pmids or [],
                              query_text=spec.exclusion_query_text)


@pytest.fixture
def record_factory():
    return make_record
