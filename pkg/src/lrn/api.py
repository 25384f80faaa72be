"""HTTP facade over session operations for the review UI and automation.

Read routes are pure projections of the session directory. Mutating routes
are serialized per session, and training (EM + wrapper search) runs as a
background job exposed at /jobs/{id} because it exceeds interactive
latency.
"""

from __future__ import annotations

import itertools
import json
import threading
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import concordance as concordance_mod
from .errors import (
    InvalidConfig,
    LrnError,
    NoSuchIteration,
    NoSuchSession,
    PhaseViolation,
)
from .session import PHASE_CONFIGURED, PHASE_TRAINING, SessionState, init_session


class _Jobs:
    def __init__(self):
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}
        self._counter = itertools.count(1)

    def create(self, session_id: str, kind: str) -> dict:
        with self._lock:
            job = {
                "id": str(next(self._counter)),
                "session_id": session_id,
                "kind": kind,
                "status": "queued",
                "result": None,
                "error": None,
            }
            self._jobs[job["id"]] = job
            return job

    def get(self, job_id: str) -> dict:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NoSuchIteration(f"no job {job_id}")
            return dict(job)

    def update(self, job_id: str, **fields) -> None:
        with self._lock:
            self._jobs[job_id].update(fields)

    def active_for(self, session_id: str) -> bool:
        with self._lock:
            return any(
                j["session_id"] == session_id and j["status"] in ("queued", "running")
                for j in self._jobs.values()
            )


class SessionRegistry:
    def __init__(self, root: Path):
        self.root = Path(root)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def list_ids(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(
            p.name for p in self.root.iterdir() if (p / "config.json").exists()
        )

    def open(self, session_id: str) -> SessionState:
        path = self.root / session_id
        if not (path / "config.json").exists():
            raise NoSuchSession(f"no session {session_id!r}")
        return SessionState.load(path)


def _summary(state: SessionState) -> dict:
    return {
        "session_id": state.config.session_id,
        "phase": state.phase,
        "iteration": state.iteration,
        "snapshots": state.snapshot_numbers(),
        "pinned_iteration": state.pinned_iteration,
        "deployed": state.deployment is not None,
    }


def create_app(
    session_root: Path | str,
    cors_origins: list[str] | None = None,
    ui_dist: Path | str | None = None,
) -> FastAPI:
    app = FastAPI(title="lrn", docs_url=None, redoc_url=None)
    registry = SessionRegistry(Path(session_root))
    jobs = _Jobs()

    if cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=cors_origins,
            allow_methods=["*"], allow_headers=["*"],
        )

    @app.exception_handler(LrnError)
    def _lrn_error(request: Request, exc: LrnError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"code": exc.code, "message": str(exc)},
        )

    @app.get("/sessions")
    def list_sessions():
        return [_summary(registry.open(sid)) for sid in registry.list_ids()]

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        payload = await request.json()
        session_id = payload.get("session_id")
        if not session_id or "/" in session_id:
            raise InvalidConfig("session_id must be a plain directory name")
        state = init_session(registry.root / session_id, payload,
                             force=bool(payload.get("force")))
        return _summary(state)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _summary(registry.open(session_id))

    @app.get("/sessions/{session_id}/queue")
    def get_queue(session_id: str):
        state = registry.open(session_id)
        queue_path = state._iteration_dir(state.iteration) / "queue.json"
        if not queue_path.exists():
            return {"iteration": state.iteration, "phase": state.phase,
                    "items": [], "labeled": []}
        payload = json.loads(queue_path.read_text())
        corpus = state.load_corpus()
        items = []
        for item in payload.get("items", []):
            record = corpus.records[item["pmid"]]
            items.append({**item, "title": record.title, "abstract": record.abstract})
        labeled = {
            e["pmid"] for e in state.label_log() if e["iteration"] == state.iteration
        }
        return {"iteration": state.iteration, "phase": state.phase,
                "items": items, "labeled": sorted(labeled)}

    @app.post("/sessions/{session_id}/labels")
    async def post_labels(session_id: str, request: Request):
        payload = await request.json()
        if "pmid" in payload:  # single-label form used by the UI
            labels = {payload["pmid"]: payload["label"]}
        else:
            labels = payload.get("labels", {})
        with registry.lock_for(session_id):
            state = registry.open(session_id)
            state.submit_feedback(labels, payload.get("rule_edits"))
        return {"accepted": sorted(labels)}

    @app.get("/sessions/{session_id}/rules")
    def get_rules(session_id: str):
        from .rules import coverage as rule_coverage

        state = registry.open(session_id)
        ruleset = state.load_ruleset()
        screened = []
        if state.records_path.exists():
            screened = state.load_corpus().eligible()
        out = []
        for rule in ruleset.rules:
            hits, total = rule_coverage(rule, screened) if screened else (0, 0)
            out.append({
                "rule_id": rule.rule_id,
                "text": rule.text,
                "label": rule.label,
                "notation": rule.notation(),
                "active": rule.active_at(state.iteration),
                "coverage": {"hits": hits, "total": total},
            })
        return out

    @app.post("/sessions/{session_id}/rules", status_code=201)
    async def post_rule(session_id: str, request: Request):
        payload = await request.json()
        from .rules import save_ruleset, upsert_rule

        with registry.lock_for(session_id):
            state = registry.open(session_id)
            ruleset = state.load_ruleset()
            upsert_rule(ruleset, payload["text"], payload["label"], state.iteration)
            save_ruleset(ruleset, state.ruleset_path)
        return {"ok": True}

    @app.delete("/sessions/{session_id}/rules/{rule_id}")
    def delete_rule(session_id: str, rule_id: int):
        from .rules import remove_rule, save_ruleset

        with registry.lock_for(session_id):
            state = registry.open(session_id)
            ruleset = state.load_ruleset()
            remove_rule(ruleset, rule_id, state.iteration)
            save_ruleset(ruleset, state.ruleset_path)
        return {"ok": True}

    def _run_training(job_id: str, session_id: str) -> None:
        jobs.update(job_id, status="running")
        try:
            with registry.lock_for(session_id):
                state = registry.open(session_id)
                if state.phase == PHASE_CONFIGURED:
                    queue = state.start_iteration()
                    result = {"kind": "queue", "iteration": state.iteration, "queue": queue}
                elif state.phase == PHASE_TRAINING:
                    snapshot = state.finish_iteration()
                    metrics_path = (
                        state._iteration_dir(snapshot.iteration_no) / "metrics.json"
                    )
                    result = {
                        "kind": "snapshot",
                        "iteration": snapshot.iteration_no,
                        "metrics": json.loads(metrics_path.read_text()),
                    }
                else:
                    raise PhaseViolation(f"nothing to train while {state.phase}")
            jobs.update(job_id, status="done", result=result)
        except Exception as exc:  # surfaced via the job resource
            code = exc.code if isinstance(exc, LrnError) else "Error"
            jobs.update(job_id, status="error", error={"code": code, "message": str(exc)})

    @app.post("/sessions/{session_id}/train", status_code=202)
    def post_train(session_id: str):
        registry.open(session_id)  # 404 before queuing
        if jobs.active_for(session_id):
            raise PhaseViolation(f"a training job is already running for {session_id}")
        job = jobs.create(session_id, "train")
        thread = threading.Thread(
            target=_run_training, args=(job["id"], session_id), daemon=True
        )
        thread.start()
        return {"job_id": job["id"]}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return jobs.get(job_id)

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        state = registry.open(session_id)
        out = []
        for n in state.snapshot_numbers():
            out.append(json.loads((state._iteration_dir(n) / "metrics.json").read_text()))
        return out

    @app.get("/sessions/{session_id}/correlations")
    def get_correlations(session_id: str):
        import csv

        state = registry.open(session_id)
        numbers = state.snapshot_numbers()
        for n in reversed(numbers):
            path = state._iteration_dir(n) / "correlations.csv"
            if path.exists():
                with open(path, newline="") as fh:
                    reader = csv.DictReader(fh)
                    return {"iteration": n, "rows": list(reader)}
        return {"iteration": None, "rows": []}

    @app.get("/sessions/{session_id}/wordcloud")
    def get_wordcloud(session_id: str):
        state = registry.open(session_id)
        for n in reversed(state.snapshot_numbers()):
            path = state._iteration_dir(n) / "wordcloud.json"
            if path.exists():
                return json.loads(path.read_text())
        return {}

    @app.get("/sessions/{session_id}/prisma.svg")
    def get_prisma(session_id: str):
        state = registry.open(session_id)
        counts = state.write_prisma()
        from .prisma import render

        return Response(content=render(counts, "svg"), media_type="image/svg+xml")

    @app.post("/sessions/{session_id}/deploy")
    async def post_deploy(session_id: str, request: Request):
        body = await request.body()
        payload = json.loads(body) if body else {}
        with registry.lock_for(session_id):
            state = registry.open(session_id)
            deployment = state.deploy(payload.get("snapshot"))
        return deployment

    @app.post("/concordance")
    async def post_concordance(request: Request):
        payload = await request.json()
        comparison = concordance_mod.compare_sets(
            payload.get("name_a", "a"), payload["a"],
            payload.get("name_b", "b"), payload["b"],
            universe=payload.get("universe"),
            replications=int(payload.get("replications", 10_000)),
            seed=int(payload.get("seed", 0)),
        )
        from dataclasses import asdict

        return asdict(comparison)

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str):
        state = registry.open(session_id)
        md, payload = state.generate_package_insert()
        return {"markdown": md, "report": payload}

    if ui_dist is not None and Path(ui_dist).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app


def serve(session_root: Path | str, bind: str = "127.0.0.1:8787",
          cors_origins: list[str] | None = None,
          ui_dist: Path | str | None = None) -> None:
    import uvicorn

    host, _, port = bind.partition(":")
    app = create_app(session_root, cors_origins, ui_dist=ui_dist)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8787), log_level="warning")
