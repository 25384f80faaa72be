"""Record real API responses as JSON fixtures for the UI contract tests.

Drives a scripted four-iteration session through the HTTP facade (so every
fixture is a byte-for-byte server payload) and snapshots the routes the UI
consumes. Re-run after API changes: python scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

from fastapi.testclient import TestClient

REPO = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(REPO / "tests"))

from lrn.api import create_app  # noqa: E402
from lrn.corpus import merge_and_dedupe, save_corpus, screen_corpus  # noqa: E402
from lrn.session import SessionState  # noqa: E402

from conftest import make_raw, synthetic_articles  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def wait(client, job_id: str) -> dict:
    while True:
        job = client.get(f"/jobs/{job_id}").json()
        if job["status"] in ("done", "error"):
            assert job["status"] == "done", job
            return job
        time.sleep(0.02)


def train(client, sid: str) -> dict:
    job_id = client.post(f"/sessions/{sid}/train").json()["job_id"]
    return wait(client, job_id)


def main(tmp_root: Path) -> None:
    app = create_app(tmp_root)
    client = TestClient(app)

    pmids = [str(500_000 + i) for i in range(120)]
    articles = synthetic_articles(pmids)
    config = {
        "session_id": "demo",
        "seed": 77,
        "search_specs": [{
            "string_id": 1,
            "query_text": "((surgical glove)) AND (((change)))",
            "date_start": "1980-01-01",
            "date_end": "2023-01-01",
            "page_size": 200,
        }],
        "initial_rules": [
            {"text": "glove", "label": "INCLUDE"},
            {"text": "puncture", "label": "INCLUDE"},
            {"text": "latex", "label": "INCLUDE"},
            {"text": "double gloving", "label": "INCLUDE"},
            {"text": "vinyl", "label": "EXCLUDE"},
            {"text": "nitrile", "label": "EXCLUDE"},
            {"text": "examination glove", "label": "EXCLUDE"},
        ],
        "queue_size": 20,
        "feature_budget": 40,
        "sa_steps": 40,
        "train_epochs": 150,
        "min_df": 2,
    }
    assert client.post("/sessions", json=config).status_code == 201
    state = SessionState.load(tmp_root / "demo")
    raws = [
        make_raw(p, title=articles[p]["title"], abstract=articles[p]["abstract"],
                 languages=articles[p]["languages"])
        for p in pmids
    ]
    corpus, _ = merge_and_dedupe([(1, raws)])
    screen_corpus(corpus)
    save_corpus(corpus, state.records_path)

    # four iterations so a rule reaches the "2, 4 / 3" notation
    rule_plan = {
        2: [("post", {"text": "dentist", "label": "EXCLUDE"})],
        3: [("delete", "dentist")],
        4: [("post", {"text": "dentist", "label": "EXCLUDE"})],
    }
    queue_fixture = None
    for iteration in range(1, 5):
        job = train(client, "demo")
        queue = job["result"]["queue"]
        if iteration == 1:
            queue_fixture = client.get("/sessions/demo/queue").json()
        labels = {
            pmid: ("INCLUDE" if articles[pmid]["include_theme"] else "EXCLUDE")
            for pmid in queue
        }
        client.post("/sessions/demo/labels", json={"labels": labels})
        for action, payload in rule_plan.get(iteration, []):
            if action == "post":
                assert client.post("/sessions/demo/rules", json=payload).status_code == 201
            else:
                rules = client.get("/sessions/demo/rules").json()
                rule_id = next(r["rule_id"] for r in rules if r["text"] == payload)
                assert client.delete(f"/sessions/demo/rules/{rule_id}").status_code == 200
        train(client, "demo")

    client.post("/sessions/demo/deploy", json={})

    FIXTURES.mkdir(parents=True, exist_ok=True)
    snapshots = {
        "sessions.json": client.get("/sessions").json(),
        "queue.json": queue_fixture,
        "rules.json": client.get("/sessions/demo/rules").json(),
        "metrics.json": client.get("/sessions/demo/metrics").json(),
        "correlations.json": client.get("/sessions/demo/correlations").json(),
        "wordcloud.json": client.get("/sessions/demo/wordcloud").json(),
        "report.json": client.get("/sessions/demo/report").json(),
    }
    snapshots["prisma.svg.json"] = {
        "svg": client.get("/sessions/demo/prisma.svg").text
    }
    for name, payload in snapshots.items():
        (FIXTURES / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"wrote tests/fixtures/{name}")


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        main(Path(tmp))
