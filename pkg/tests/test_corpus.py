"""Dedup, screening, negative set, reference import, persistence."""

from __future__ import annotations

import pytest

from lrn.corpus import (
    DEFAULT_BLOCKED_LANGUAGES,
    ELIGIBLE,
    EXCLUSION_QUERY_MATCH,
    INELIGIBLE,
    LANGUAGE_BLOCKED,
    NO_ABSTRACT,
    build_negative_set,
    import_reference_library,
    load_corpus,
    merge_and_dedupe,
    save_corpus,
    screen_corpus,
    screen_eligibility,
)
from lrn.errors import ParseError

from conftest import make_raw, make_record


def test_merge_set_union():
    a, b, c = make_raw("1"), make_raw("2"), make_raw("3")
    corpus, report = merge_and_dedupe([(1, [a, b]), (3, [b, c])])
    assert set(corpus.records) == {"1", "2", "3"}
    assert corpus.records["2"].source_strings == (1, 3)
    assert report.duplicates_merged == 1
    assert corpus.identified_total() == 4
    assert corpus.provenance == {1: ["1", "2"], 3: ["2", "3"]}


def test_merge_810_unique():
    batches = [
        (1, [make_raw(str(i)) for i in range(0, 500)]),
        (2, [make_raw(str(i)) for i in range(300, 700)]),
        (3, [make_raw(str(i)) for i in range(400, 810)]),
    ]
    corpus, _ = merge_and_dedupe(batches)
    assert len(corpus) == 810


def test_merge_empty():
    corpus, report = merge_and_dedupe([])
    assert len(corpus) == 0
    assert report.duplicates_merged == 0


def test_merge_title_collision_reported_not_merged():
    a = make_raw("1", title="Identical Title")
    b = make_raw("2", title="identical   title!")
    corpus, report = merge_and_dedupe([(1, [a, b])])
    assert len(corpus) == 2
    assert report.suspected_title_duplicates == [("1", "2")]


def test_merge_idempotent_on_own_output():
    batches = [(1, [make_raw("1"), make_raw("2")])]
    corpus, _ = merge_and_dedupe(batches)
    again, report = merge_and_dedupe(
        [(sid, [make_raw(r.pmid, title=r.title) for r in corpus.ordered()
                if sid in r.source_strings])
         for sid in corpus.provenance]
    )
    assert set(again.records) == set(corpus.records)
    assert report.duplicates_merged == 0


def test_screen_no_abstract():
    record = make_record("1", "Title", "", eligibility="pending")
    decision = screen_eligibility(record)
    assert (decision.status, decision.reason) == (INELIGIBLE, NO_ABSTRACT)


def test_screen_blocked_language():
    record = make_record("1", "Title", "abstract", eligibility="pending",
                         language_codes=("rus",))
    decision = screen_eligibility(record)
    assert (decision.status, decision.reason) == (INELIGIBLE, LANGUAGE_BLOCKED)
    zho = make_record("2", "Title", "abstract", eligibility="pending",
                      language_codes=("zho", "eng"))
    assert screen_eligibility(zho).reason == LANGUAGE_BLOCKED


def test_screen_eligible():
    record = make_record("1", "Title", "Fine abstract", eligibility="pending")
    decision = screen_eligibility(record)
    assert decision.status == ELIGIBLE
    assert decision.reason is None


def test_screening_idempotent_and_conserves():
    raws = [
        make_raw("1", abstract=""),
        make_raw("2", languages=("chi",)),
        make_raw("3"),
        make_raw("4"),
    ]
    corpus, _ = merge_and_dedupe([(1, raws)])
    screen_corpus(corpus)
    first = {p: (r.eligibility, r.ineligibility_reason) for p, r in corpus.records.items()}
    screen_corpus(corpus)
    second = {p: (r.eligibility, r.ineligibility_reason) for p, r in corpus.records.items()}
    assert first == second
    reasons = corpus.reason_counts()
    assert len(corpus) == len(corpus.eligible()) + sum(reasons.values())


def test_negative_set_flagging():
    corpus, _ = merge_and_dedupe([(1, [make_raw("1"), make_raw("2"), make_raw("3")])])
    corpus, report = build_negative_set(corpus, {"2"})
    screen_corpus(corpus)
    assert corpus.records["2"].in_negative_set
    assert corpus.records["2"].eligibility == INELIGIBLE
    assert corpus.records["2"].ineligibility_reason == EXCLUSION_QUERY_MATCH
    assert len(corpus.eligible()) == 2
    assert report.flagged == 1


def test_negative_set_disjoint_and_unknown():
    corpus, _ = merge_and_dedupe([(1, [make_raw("1")])])
    corpus, report = build_negative_set(corpus, {"99"})
    assert report.flagged == 0
    assert report.unknown_pmids == ["99"]
    assert not corpus.records["1"].in_negative_set


def test_corpus_round_trip(tmp_path):
    raws = [make_raw("1", abstract=""), make_raw("2"), make_raw("3", languages=("rus",))]
    corpus, _ = merge_and_dedupe([(1, raws[:2]), (2, raws[1:])])
    build_negative_set(corpus, {"2"})
    screen_corpus(corpus)
    path = tmp_path / "records.ndjson"
    save_corpus(corpus, path)
    loaded = load_corpus(path)
    assert loaded.provenance == corpus.provenance
    assert set(loaded.records) == set(corpus.records)
    for pmid, record in corpus.records.items():
        assert loaded.records[pmid] == record


def test_import_reference_plain(tmp_path):
    path = tmp_path / "ref.pmids"
    pmids = [str(1000 + i) for i in range(212)]
    path.write_text("\n".join(pmids) + "\n")
    library, warnings = import_reference_library(path, "sme")
    assert len(library.pmids) == 212
    assert warnings == []


def test_import_reference_csv_with_duplicates(tmp_path):
    path = tmp_path / "ref.csv"
    path.write_text("title,pmid\nfoo, 11\nbar,12\nbaz,11\n")
    library, warnings = import_reference_library(path, "sme")
    assert library.pmids == frozenset({"11", "12"})
    assert len(warnings) == 1


def test_import_reference_rejects_garbage(tmp_path):
    path = tmp_path / "ref.pmids"
    path.write_text("123\nabc\n")
    with pytest.raises(ParseError) as err:
        import_reference_library(path, "sme")
    assert err.value.line_no == 2


def test_default_blocked_languages():
    assert {"rus", "chi", "zho"} == set(DEFAULT_BLOCKED_LANGUAGES)
