"""CLI flow over a fixture transport."""

from __future__ import annotations

import json
from datetime import date
from pathlib import Path

import pytest
from click.testing import CliRunner

from lrn.cli import main
from lrn.pubmed import SearchSpec

from conftest import stage_pubmed_fixtures, synthetic_articles


@pytest.fixture
def runner():
    return CliRunner()


def write_config(path: Path) -> Path:
    config = {
        "session_id": "cli-session",
        "seed": 5,
        "search_specs": [{
            "string_id": 1,
            "query_text": "((surgical glove)) AND (((change)))",
            "exclusion_query_text": "((surgical glove)) AND (((dentistry)))",
            "date_start": "1980-01-01",
            "date_end": "2023-01-01",
            "page_size": 50,
        }],
        "initial_rules": [
            {"text": "glove", "label": "INCLUDE"},
            {"text": "puncture", "label": "INCLUDE"},
            {"text": "latex", "label": "INCLUDE"},
            {"text": "vinyl", "label": "EXCLUDE"},
            {"text": "dentist", "label": "EXCLUDE"},
            {"text": "examination glove", "label": "EXCLUDE"},
        ],
        "queue_size": 6,
        "feature_budget": 400,
        "sa_steps": 10,
        "train_epochs": 100,
        "min_df": 1,
    }
    config_path = path / "config.json"
    config_path.write_text(json.dumps(config))
    return config_path


def stage_fixtures(fixture_dir: Path) -> dict[str, dict]:
    pmids = [str(2000 + i) for i in range(60)]
    articles = synthetic_articles(pmids)
    spec = SearchSpec(
        query_text="((surgical glove)) AND (((change)))",
        exclusion_query_text="((surgical glove)) AND (((dentistry)))",
        date_start=date(1980, 1, 1),
        date_end=date(2023, 1, 1),
        page_size=50,
    )
    exclusion = [p for p in pmids if "dentist" in articles[p]["abstract"]][:5]
    stage_pubmed_fixtures(fixture_dir, spec, pmids, articles, exclusion)
    return articles


def invoke(runner, *args):
    result = runner.invoke(main, list(args), catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_full_cli_flow(tmp_path, runner):
    config_path = write_config(tmp_path)
    fixtures = tmp_path / "fixtures"
    articles = stage_fixtures(fixtures)
    session = str(tmp_path / "session")

    invoke(runner, "init", "--session-dir", session, "--config", str(config_path))

    # re-init without --force fails cleanly
    rerun = runner.invoke(main, ["init", "--session-dir", session, "--config", str(config_path)])
    assert rerun.exit_code == 1
    assert "InvalidConfig" in rerun.output

    fetch = invoke(runner, "fetch", "--out", session, "--fixtures", str(fixtures))
    report = json.loads(fetch.output)
    assert report["records"] == 60
    assert report["negative_flagged"] == 5

    screen = invoke(runner, "screen", "--session-dir", session)
    screened = json.loads(screen.output)
    assert screened["eligible"] > 0

    listing = invoke(runner, "rules", "list", "--session-dir", session)
    assert "glove" in listing.output

    iterate = invoke(runner, "iterate", "--session-dir", session)
    queue = json.loads(iterate.output)["queue"]
    assert 0 < len(queue) <= 6

    labels = {
        pmid: ("INCLUDE" if articles[pmid]["include_theme"] else "EXCLUDE")
        for pmid in queue
    }
    labels_path = tmp_path / "labels.json"
    labels_path.write_text(json.dumps(labels))
    invoke(runner, "label", "--session-dir", session, "--labels-file", str(labels_path))

    invoke(runner, "rules", "add", "--session-dir", session,
           "--text", "condom", "--label", "EXCLUDE")

    train = invoke(runner, "train", "--session-dir", session)
    metrics = json.loads(train.output)
    assert metrics["iteration"] == 1

    deploy = invoke(runner, "deploy", "--session-dir", session)
    deployed = json.loads(deploy.output)
    assert deployed["snapshot"] == 1
    assert deployed["include"] + deployed["exclude"] == screened["eligible"]

    prisma_out = invoke(runner, "prisma", "--session-dir", session, "--format", "json")
    counts = json.loads(prisma_out.output)
    assert counts["identified"] == 60

    report_out = invoke(runner, "report", "--session-dir", session)
    assert report_out.output.startswith("# AI Package Insert")

    questions = tmp_path / "questions.json"
    questions.write_text(json.dumps({
        "Introduction": "What gaps exist in glove damage research?",
        "Results": "How does damage relate to change frequency?",
        "Discussion": "What challenges remain?",
    }))
    invoke(runner, "summarize", "--session-dir", session,
           "--questions-file", str(questions))
    assert (Path(session) / "report" / "slr.md").exists()


def test_import_library_and_concordance(tmp_path, runner):
    config_path = write_config(tmp_path)
    session = str(tmp_path / "session")
    invoke(runner, "init", "--session-dir", session, "--config", str(config_path))

    library = tmp_path / "sme.pmids"
    library.write_text("\n".join(str(3000 + i) for i in range(50)) + "\n")
    invoke(runner, "import-library", "--session-dir", session,
           "--path", str(library), "--name", "sme")
    stored = Path(session) / "reference" / "sme.pmids"
    assert len(stored.read_text().splitlines()) == 50

    set_a = tmp_path / "a.pmids"
    set_a.write_text("\n".join(str(3000 + i) for i in range(40)) + "\n")
    result = invoke(runner, "concordance", "--a", str(set_a), "--b", str(library),
                    "--reps", "2000", "--seed", "3")
    lines = result.output.strip().splitlines()
    assert lines[0] == "name_a,name_b,size_a,size_b,intersection,jaccard,p_raw,p_adjusted"
    fields = lines[1].split(",")
    assert fields[2:5] == ["40", "50", "40"]
    assert fields[5] == "0.8000"
    assert fields[7] == fields[6]  # single comparison: adjusted equals raw
