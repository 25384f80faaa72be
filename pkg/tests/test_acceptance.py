"""Acceptance suite: every exit criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL
line per criterion.
"""

from __future__ import annotations

import json
import math
import random
import time
from contextlib import contextmanager
from datetime import date
from pathlib import Path

import numpy as np
import pytest

from lrn.classifier import loss_and_grad
from lrn.concordance import bootstrap_p, compare_to_reference, compare_sets, jaccard
from lrn.corpus import ReferenceLibrary, import_reference_library
from lrn.labelmodel import LabelMatrix, fit
from lrn.metrics import ConfusionMatrix, accuracy, class_metrics, format_percent, kappa
from lrn.pubmed import FixtureTransport, SearchSpec
from lrn.rules import ConceptRule, EXCLUDE, INCLUDE, parse_notation
from lrn.session import init_session
from lrn.summarizer import MockBackend, PromptSet, generate_review
from lrn.xstats import ContingencyTable2x2, bh_adjust, chi_square, cramers_v

from conftest import stage_pubmed_fixtures, synthetic_articles
from test_xstats import brute_force_chi2


@contextmanager
def criterion(name: str):
    try:
        yield
    except Exception:
        print(f"FAIL [{name}]")
        raise
    print(f"PASS [{name}]")


# --- criterion: metrics reconstruction (Tables 4-6) -------------------------


def test_metrics_reconstruction_mixed_confusion():
    with criterion("metrics reconstruction [[34,3],[4,5]]"):
        started = time.perf_counter()
        m = ConfusionMatrix([[34, 3], [4, 5]])
        assert abs(accuracy(m) * 100 - 84.78) <= 0.01
        assert abs(kappa(m) - 0.4953) <= 0.0005
        per = class_metrics(m)
        assert abs(per[INCLUDE].recall * 100 - 91.89) <= 0.01
        assert abs(per[INCLUDE].precision * 100 - 89.47) <= 0.01
        assert abs(per[INCLUDE].f_score * 100 - 90.67) <= 0.01
        assert abs(per[EXCLUDE].recall * 100 - 55.56) <= 0.01
        assert abs(per[EXCLUDE].precision * 100 - 62.50) <= 0.01
        assert abs(per[EXCLUDE].f_score * 100 - 58.82) <= 0.01
        assert time.perf_counter() - started < 0.05


def test_metrics_reconstruction_one_sided_confusion():
    with criterion("metrics reconstruction [[35,0],[6,1]]"):
        m = ConfusionMatrix([[35, 0], [6, 1]])
        assert abs(accuracy(m) * 100 - 85.71) <= 0.01
        assert abs(kappa(m) - 0.2174) <= 0.0005
        per = class_metrics(m)
        assert abs(per[INCLUDE].precision * 100 - 85.37) <= 0.01
        assert abs(per[EXCLUDE].recall * 100 - 14.29) <= 0.01
        assert abs(per[EXCLUDE].f_score * 100 - 25.00) <= 0.01


# --- criterion: Jaccard identities and coverage arithmetic -------------------


def test_jaccard_identities_and_coverage():
    with criterion("jaccard identities + coverage arithmetic"):
        started = time.perf_counter()
        cases = [
            (757, 212, 194, 0.2503),
            (389, 212, 144, 0.3151),
            (674, 212, 162, 0.2238),
            (757, 674, 662, 0.8609),
        ]
        for size_a, size_b, inter, expected in cases:
            value = inter / (size_a + size_b - inter)
            assert round(value, 4) == expected
            a = set(range(inter)) | {10_000 + i for i in range(size_a - inter)}
            b = set(range(inter)) | {50_000 + i for i in range(size_b - inter)}
            assert round(jaccard(a, b), 4) == expected
        assert format_percent(194 / 212) == "91.51%"
        assert format_percent(196 / 262) == "74.81%"
        assert format_percent(196 / 212) == "92.45%"
        assert format_percent(50 / 262) == "19.08%"
        assert 757 - 194 == 563
        assert time.perf_counter() - started < 0.05


# --- criterion: substituted property suites (a)-(e) --------------------------


def test_property_a_label_model_recovery():
    with criterion("(a) EM planted recovery ±0.05, monotone LL, 20 seeds < 10 s"):
        started = time.perf_counter()
        true_acc = np.array([0.9, 0.8, 0.8, 0.7, 0.6])
        for seed in range(20):
            rng = np.random.default_rng(seed)
            n = 1000
            y = np.where(rng.random(n) < 0.6, 1, -1)
            votes = np.zeros((n, 5), dtype=np.int8)
            for j, acc in enumerate(true_acc):
                correct = rng.random(n) < acc
                votes[:, j] = np.where(correct, y, -y)
            matrix = LabelMatrix(votes=votes, record_ids=[str(i) for i in range(n)],
                                 rule_ids=list(range(1, 6)))
            params = fit(matrix)
            assert abs(params.class_prior - 0.6) < 0.05, f"seed {seed}: prior off"
            assert np.all(np.abs(params.accuracies - true_acc) < 0.05), f"seed {seed}"
            trace = params.log_likelihood
            assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:])), f"seed {seed}"
        assert time.perf_counter() - started < 10.0


def test_property_b_gradient_check():
    with criterion("(b) analytic gradient vs central differences < 1e-4"):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(10):
            n, d = int(rng.integers(10, 40)), int(rng.integers(3, 12))
            x = rng.normal(size=(n, d))
            t = rng.random(n)
            weights = rng.normal(scale=0.5, size=d)
            bias = float(rng.normal())
            l2 = float(rng.choice([0.0, 1e-3, 1e-2]))
            _, grad_w, grad_b = loss_and_grad(weights, bias, x, t, l2)
            h = 1e-6
            k = int(rng.integers(d))
            up_w, dn_w = weights.copy(), weights.copy()
            up_w[k] += h
            dn_w[k] -= h
            numeric_w = (loss_and_grad(up_w, bias, x, t, l2)[0]
                         - loss_and_grad(dn_w, bias, x, t, l2)[0]) / (2 * h)
            numeric_b = (loss_and_grad(weights, bias + h, x, t, l2)[0]
                         - loss_and_grad(weights, bias - h, x, t, l2)[0]) / (2 * h)
            worst = max(worst, abs(numeric_w - grad_w[k]) / max(abs(numeric_w), 1e-12))
            worst = max(worst, abs(numeric_b - grad_b) / max(abs(numeric_b), 1e-12))
        assert worst < 1e-4


def test_property_c_chi_square_and_cramers_v():
    with criterion("(c) chi-square closed form vs brute force; V bounds"):
        rng = random.Random(17)
        checked = 0
        while checked < 1000:
            t = ContingencyTable2x2(rng.randint(0, 50), rng.randint(0, 50),
                                    rng.randint(0, 50), rng.randint(0, 50))
            rows = (t.a + t.b, t.c + t.d)
            cols = (t.a + t.c, t.b + t.d)
            if 0 in rows or 0 in cols:
                continue
            chi2, _ = chi_square(t)
            assert abs(chi2 - brute_force_chi2(t)) < 1e-9
            assert 0.0 <= cramers_v(chi2, t.n) <= 1.0
            checked += 1
        for k in (5, 17, 40):  # perfect association
            t = ContingencyTable2x2(k, 0, 0, k)
            chi2, _ = chi_square(t)
            assert cramers_v(chi2, t.n) == 1.0


def test_property_d_bh_adjustment():
    with criterion("(d) BH matches hand step-up; monotone on 1000 vectors"):
        assert bh_adjust([0.001, 0.01, 0.03, 0.04]) == pytest.approx(
            [0.004, 0.02, 0.04, 0.04])
        assert bh_adjust([0.02] * 5) == pytest.approx([0.02] * 5)
        assert bh_adjust([0.5]) == [0.5]
        rng = random.Random(29)
        for _ in range(1000):
            p = [rng.random() for _ in range(rng.randint(1, 15))]
            adj = bh_adjust(p)
            assert all(a >= raw - 1e-12 for a, raw in zip(adj, p))
            assert all(0.0 <= a <= 1.0 for a in adj)
            order = sorted(range(len(p)), key=lambda i: p[i])
            assert all(adj[order[i]] <= adj[order[i + 1]] + 1e-12
                       for i in range(len(p) - 1))


def test_property_e_bootstrap_null():
    with criterion("(e) bootstrap p deterministic + uniform under null"):
        universe = list(range(400))
        a = set(range(0, 60))
        b = set(range(30, 110))
        p1 = bootstrap_p(a, b, universe, replications=10_000, seed=99)
        p2 = bootstrap_p(a, b, universe, replications=10_000, seed=99)
        assert p1 == p2
        rng = random.Random(314)
        below = 0
        trials = 200
        for trial in range(trials):
            sample_a = set(rng.sample(universe, 60))
            sample_b = set(rng.sample(universe, 80))
            p = bootstrap_p(sample_a, sample_b, universe,
                            replications=10_000, seed=trial)
            if p < 0.05:
                below += 1
        assert 0.01 <= below / trials <= 0.10, f"fraction {below / trials}"


# --- criterion: rule-history notation round-trip -----------------------------


def test_rule_history_notation_round_trip():
    with criterion("rule-history notation round-trip"):
        for notation in ("1", "2 / 3", "2, 4 / 3"):
            history = parse_notation(notation)
            assert ConceptRule(1, "x", INCLUDE, history).notation() == notation
        assert ConceptRule(1, "x", INCLUDE, [(1, "added")]).notation() == "1"
        assert ConceptRule(1, "x", INCLUDE,
                           [(2, "added"), (3, "removed")]).notation() == "2 / 3"
        assert ConceptRule(
            1, "x", INCLUDE,
            [(2, "added"), (3, "removed"), (4, "reinstated")]
        ).notation() == "2, 4 / 3"


# --- criterion: end-to-end fixture run ---------------------------------------


STRING1_PMIDS = [str(100_000 + i) for i in range(180)]
STRING2_PMIDS = [str(100_120 + i) for i in range(160)]  # 60-record overlap


def e2e_config() -> dict:
    return {
        "session_id": "e2e",
        "seed": 20240101,
        "search_specs": [
            {
                "string_id": 1,
                "query_text": "((surgical glove)) AND (((change)))",
                "exclusion_query_text": "((surgical glove)) AND (((dentistry)))",
                "date_start": "1980-01-01",
                "date_end": "2023-01-01",
                "page_size": 100,
            },
            {
                "string_id": 2,
                "query_text": "((surgical glove)) AND (((perforation)))",
                "exclusion_query_text": None,
                "date_start": "1980-01-01",
                "date_end": "2023-01-01",
                "page_size": 100,
            },
        ],
        "initial_rules": [
            {"text": "glove", "label": INCLUDE},
            {"text": "puncture", "label": INCLUDE},
            {"text": "latex", "label": INCLUDE},
            {"text": "double gloving", "label": INCLUDE},
            {"text": "vinyl", "label": EXCLUDE},
            {"text": "nitrile", "label": EXCLUDE},
            {"text": "examination glove", "label": EXCLUDE},
            {"text": "dentist", "label": EXCLUDE},
        ],
        "queue_size": 20,
        "feature_budget": 40,
        "sa_steps": 60,
        "train_epochs": 200,
        "min_df": 2,
    }


def stage_e2e_fixtures(fixture_dir: Path) -> dict[str, dict]:
    articles = synthetic_articles(sorted(set(STRING1_PMIDS) | set(STRING2_PMIDS), key=int))
    spec1 = SearchSpec(
        query_text="((surgical glove)) AND (((change)))",
        exclusion_query_text="((surgical glove)) AND (((dentistry)))",
        date_start=date(1980, 1, 1), date_end=date(2023, 1, 1), page_size=100,
    )
    spec2 = SearchSpec(
        query_text="((surgical glove)) AND (((perforation)))",
        date_start=date(1980, 1, 1), date_end=date(2023, 1, 1), page_size=100,
    )
    exclusion = [p for p in STRING1_PMIDS if "dentist" in articles[p]["abstract"]][:20]
    stage_pubmed_fixtures(fixture_dir, spec1, STRING1_PMIDS, articles, exclusion)
    stage_pubmed_fixtures(fixture_dir, spec2, STRING2_PMIDS, articles)
    return articles


def run_e2e(workdir: Path, fixture_dir: Path, articles: dict[str, dict]) -> dict[str, bytes]:
    """One full scripted session; returns a file-tree snapshot."""
    state = init_session(workdir, e2e_config())
    transport = FixtureTransport(fixture_dir)

    fetch_report = state.fetch(transport)
    assert fetch_report["records"] == 280  # union of both strings
    assert fetch_report["identified"] == 340
    state.screen()
    state.prisma_counts().validate()  # conservation after screening

    def scripted_labels(queue: list[str]) -> dict[str, str]:
        return {
            pmid: (INCLUDE if articles[pmid]["include_theme"] else EXCLUDE)
            for pmid in queue
        }

    queue1 = state.start_iteration()
    assert len(queue1) == 20
    state.submit_feedback(scripted_labels(queue1))
    state.record_telemetry("train_start", "2023-12-24T18:48:12", iteration=1)
    state.record_telemetry("train_end", "2023-12-24T22:43:24", iteration=1)
    state.finish_iteration()
    state.prisma_counts().validate()

    queue2 = state.start_iteration()
    assert len(queue2) == 20
    assert not set(queue1) & set(queue2)
    state.submit_feedback(
        scripted_labels(queue2),
        [{"action": "add", "text": "condom", "label": EXCLUDE},
         {"action": "remove", "rule_id": 5}],
    )
    state.record_telemetry("train_start", "2023-12-25T00:42:37", iteration=2)
    state.record_telemetry("train_end", "2023-12-25T05:37:32", iteration=2)
    state.finish_iteration()
    state.prisma_counts().validate()

    deployment = state.deploy()
    counts = state.write_prisma()
    counts.validate()
    assert counts.included == len(deployment["include"])

    state.generate_package_insert()

    # concordance against the bundled 50-pmid reference library
    reference_path = workdir / "reference_source.pmids"
    eligible_includes = [
        p for p in deployment["include"] if articles[p]["include_theme"]
    ]
    reference_pmids = eligible_includes[:40] + [str(900_000 + i) for i in range(10)]
    reference_path.write_text("\n".join(reference_pmids) + "\n")
    library, _ = import_reference_library(reference_path, "sme")
    assert len(library.pmids) == 50
    (workdir / "reference" / "sme.pmids").write_text(
        "\n".join(sorted(library.pmids, key=int)) + "\n"
    )
    corpus = state.load_corpus()
    comparison = compare_sets(
        "string1", deployment["include"], "sme", library.pmids,
        universe=set(corpus.records) | set(library.pmids),
        replications=10_000, seed=state.config.seed,
    )
    reference_report = compare_to_reference(
        set(deployment["include"]),
        ReferenceLibrary("sme", library.pmids, total_reported=50),
        set(corpus.records),
    )
    assert reference_report.tp + reference_report.fn == reference_report.reference_in_corpus
    (workdir / "concordance.json").write_text(json.dumps({
        "jaccard": round(comparison.jaccard, 4),
        "p_raw": comparison.p_raw,
        "tp": reference_report.tp,
        "fp": reference_report.fp,
        "fn": reference_report.fn,
        "tn": reference_report.tn,
        "coverage": reference_report.coverage,
    }, indent=2, sort_keys=True) + "\n")

    # generated review from the mock backend
    prompt_set = PromptSet(sections={
        "Introduction": "What are the gaps in understanding glove damage?",
        "Results": "What is the relationship between glove damage and change frequency?",
        "Discussion": "What challenges remain in the field?",
    })
    docs = [corpus.records[p] for p in deployment["include"]]
    review = generate_review(prompt_set, docs, MockBackend(), window=60, overlap=12)
    (workdir / "report" / "slr.md").write_text(review)

    return {
        str(p.relative_to(workdir)): p.read_bytes()
        for p in sorted(workdir.rglob("*")) if p.is_file()
    }


def test_end_to_end_fixture_run(tmp_path):
    with criterion("end-to-end fixture run < 2 min, byte-identical replay"):
        fixture_dir = tmp_path / "fixtures"
        articles = stage_e2e_fixtures(fixture_dir)
        started = time.perf_counter()
        first = run_e2e(tmp_path / "run1", fixture_dir, articles)
        elapsed = time.perf_counter() - started
        assert elapsed < 120.0, f"first run took {elapsed:.1f}s"

        second = run_e2e(tmp_path / "run2", fixture_dir, articles)
        assert first.keys() == second.keys()
        for name in first:
            assert first[name] == second[name], f"{name} differs across replays"

        # spot-check the artifacts exist and carry real content
        assert b"PRISMA" in first["prisma.svg"]
        assert b"# AI Package Insert" in first["report/insert.md"]
        assert b"## Sources Cited" in first["report/slr.md"]
        assert "labels.log" in first
