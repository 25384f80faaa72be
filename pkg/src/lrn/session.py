"""RLHF session orchestration.

One session owns a directory holding the frozen config, the record store,
the rule history, an append-only label log, and one snapshot directory per
iteration. The phase machine is strict:

    configured -> (awaiting_feedback <-> training)* -> finalized

``start_iteration`` trains the pipeline and emits the feedback queue;
``submit_feedback`` records labels and rule edits; ``finish_iteration``
retrains on the cumulative evidence and freezes a snapshot. Everything a
snapshot needs to be redeployed (vocabulary, idf, selected features,
weights, label-model parameters) is persisted, and all randomness is
derived from the config seed, so replaying a session script reproduces
every file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

import numpy as np

from . import classifier, labelmodel, prisma, rules, xstats
from .corpus import (
    Corpus,
    EXCLUSION_QUERY_MATCH,
    LANGUAGE_BLOCKED,
    NO_ABSTRACT,
    build_negative_set,
    load_corpus,
    merge_and_dedupe,
    save_corpus,
    screen_corpus,
)
from .errors import (
    ClockSkew,
    InvalidConfig,
    NoEligibleRecords,
    NoSuchIteration,
    PhaseViolation,
    TrainingFailure,
    UnknownPmid,
)
from .metrics import (
    ClassMetrics,
    IterationMetrics,
    accuracy,
    average_potential,
    class_metrics,
    confusion,
    kappa,
)
from .pubmed import SearchSpec, fetch_records, run_search
from .rules import EXCLUDE, INCLUDE, Ruleset, load_ruleset, save_ruleset

PHASE_CONFIGURED = "configured"
PHASE_AWAITING = "awaiting_feedback"
PHASE_TRAINING = "training"
PHASE_FINALIZED = "finalized"

IDLE_CUTOFF_SECONDS = 120.0


@dataclass
class SessionConfig:
    session_id: str
    seed: int
    search_specs: list[dict]
    initial_rules: list[dict]
    blocked_languages: list[str] = field(default_factory=lambda: ["rus", "chi", "zho"])
    queue_size: int = 20
    alpha: float = 0.5
    min_df: int = 2
    feature_budget: int = 100
    sa_steps: int = 200
    train_epochs: int = 300
    train_l2: float = 1e-3
    train_lr: float = 1.0
    correlation_threshold: float = 1e-3

    @classmethod
    def from_dict(cls, payload: dict) -> "SessionConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in payload.items() if k in known})

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    def parsed_specs(self) -> list[tuple[int, SearchSpec]]:
        out = []
        for raw in self.search_specs:
            spec = SearchSpec(
                query_text=raw["query_text"],
                exclusion_query_text=raw.get("exclusion_query_text"),
                date_start=date.fromisoformat(raw["date_start"]),
                date_end=date.fromisoformat(raw["date_end"]),
                page_size=raw.get("page_size", 200),
                api_key=raw.get("api_key"),
            )
            spec.validate()
            out.append((int(raw["string_id"]), spec))
        return out

    def validate(self) -> None:
        if not self.search_specs:
            raise InvalidConfig("at least one search spec is required")
        labels = {r["label"] for r in self.initial_rules}
        if not {INCLUDE, EXCLUDE} <= labels:
            raise InvalidConfig("initial rules must cover both INCLUDE and EXCLUDE")
        if self.queue_size < 1:
            raise InvalidConfig("queue_size must be >= 1")
        self.parsed_specs()


@dataclass
class IterationSnapshot:
    iteration_no: int
    active_rule_ids: list[int]
    queue: list[str]
    labels_collected: dict[str, str]
    metrics: IterationMetrics
    model_payload: dict


class SessionState:
    """Handle over one session directory; mutations write through to disk."""

    def __init__(self, session_dir: Path, config: SessionConfig):
        self.session_dir = Path(session_dir)
        self.config = config
        self.phase = PHASE_CONFIGURED
        self.iteration = 1
        self.pinned_iteration: int | None = None
        self.deployment_iteration: int | None = None
        self.deployment: dict | None = None
        self.telemetry: list[dict] = []

    # --- paths ---------------------------------------------------------

    def _iteration_dir(self, n: int) -> Path:
        return self.session_dir / "iterations" / str(n)

    @property
    def records_path(self) -> Path:
        return self.session_dir / "records.ndjson"

    @property
    def ruleset_path(self) -> Path:
        return self.session_dir / "ruleset.csv"

    @property
    def labels_path(self) -> Path:
        return self.session_dir / "labels.log"

    # --- persistence ----------------------------------------------------

    def save(self) -> None:
        payload = {
            "phase": self.phase,
            "iteration": self.iteration,
            "pinned_iteration": self.pinned_iteration,
            "deployment_iteration": self.deployment_iteration,
            "deployment": self.deployment,
            "telemetry": self.telemetry,
        }
        (self.session_dir / "state.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )

    @classmethod
    def load(cls, session_dir: Path | str) -> "SessionState":
        session_dir = Path(session_dir)
        config_path = session_dir / "config.json"
        if not config_path.exists():
            raise InvalidConfig(f"{session_dir} is not an initialized session")
        config = SessionConfig.from_dict(json.loads(config_path.read_text()))
        state = cls(session_dir, config)
        state_path = session_dir / "state.json"
        if state_path.exists():
            payload = json.loads(state_path.read_text())
            state.phase = payload["phase"]
            state.iteration = payload["iteration"]
            state.pinned_iteration = payload["pinned_iteration"]
            state.deployment_iteration = payload.get("deployment_iteration")
            state.deployment = payload.get("deployment")
            state.telemetry = payload.get("telemetry", [])
        return state

    def load_corpus(self) -> Corpus:
        if not self.records_path.exists():
            raise NoEligibleRecords("no records fetched yet")
        return load_corpus(self.records_path)

    def load_ruleset(self) -> Ruleset:
        return load_ruleset(self.ruleset_path)

    # --- labels ----------------------------------------------------------

    def label_log(self) -> list[dict]:
        if not self.labels_path.exists():
            return []
        return [json.loads(line) for line in self.labels_path.read_text().splitlines() if line]

    def effective_labels(self, max_iteration: int | None = None) -> dict[str, str]:
        """pmid -> label, last write wins, optionally capped by iteration."""
        out: dict[str, str] = {}
        for entry in self.label_log():
            if max_iteration is not None and entry["iteration"] > max_iteration:
                continue
            out[entry["pmid"]] = entry["label"]
        return out

    def current_queue(self) -> list[str]:
        path = self._iteration_dir(self.iteration) / "queue.json"
        if not path.exists():
            return []
        return json.loads(path.read_text())["pmids"]

    def snapshot_numbers(self) -> list[int]:
        root = self.session_dir / "iterations"
        if not root.exists():
            return []
        return sorted(
            int(p.name) for p in root.iterdir() if (p / "metrics.json").exists()
        )

    # --- fetch / screen ---------------------------------------------------

    def fetch(self, transport) -> dict:
        """Run all search strings (and their exclusion queries), merge, and
        flag the negative set. Returns a summary report."""
        batches = []
        searches = {}
        exclusion_pmids: set[str] = set()
        missing: list[str] = []
        for string_id, spec in self.config.parsed_specs():
            result = run_search(spec, transport)
            searches[string_id] = {
                "total_count": result.total_count,
                "query_translation": result.query_translation,
            }
            records, miss = ([], []) if not result.pmids else fetch_records(
                result.pmids, transport, api_key=spec.api_key
            )
            missing.extend(miss)
            batches.append((string_id, records))
            if spec.exclusion_query_text:
                excl = run_search(spec, transport, query_text=spec.exclusion_query_text)
                exclusion_pmids.update(excl.pmids)
                searches[string_id]["exclusion_count"] = excl.total_count

        corpus, merge_report = merge_and_dedupe(batches)
        corpus, negative_report = build_negative_set(corpus, exclusion_pmids)
        save_corpus(corpus, self.records_path)
        (self.session_dir / "search.json").write_text(
            json.dumps(searches, indent=2, sort_keys=True) + "\n"
        )
        return {
            "records": len(corpus),
            "identified": corpus.identified_total(),
            "duplicates_merged": merge_report.duplicates_merged,
            "suspected_title_duplicates": merge_report.suspected_title_duplicates,
            "negative_flagged": negative_report.flagged,
            "missing_pmids": missing,
            "searches": searches,
        }

    def screen(self) -> dict:
        corpus = self.load_corpus()
        screen_corpus(corpus, frozenset(self.config.blocked_languages))
        save_corpus(corpus, self.records_path)
        counts = corpus.reason_counts()
        return {
            "records": len(corpus),
            "eligible": len(corpus.eligible()),
            "ineligible": counts,
        }

    # --- training pipeline -------------------------------------------------

    def _iteration_seed(self, iteration: int) -> int:
        return self.config.seed * 1000 + iteration

    def _train_pipeline(self, iteration: int):
        corpus = self.load_corpus()
        screened = corpus.eligible()
        if not screened:
            raise NoEligibleRecords("no eligible records; fetch and screen first")
        negative = corpus.negative()
        ruleset = self.load_ruleset()

        matrix = labelmodel.build_label_matrix(ruleset, screened, iteration)
        labelmodel.save_label_matrix_csv(matrix, self.session_dir / "labelmatrix.csv")
        params = labelmodel.fit(matrix)
        posteriors = labelmodel.posterior_batch(params, matrix.votes)

        train_records = screened + negative
        min_df = self.config.min_df
        space, vectors = classifier.featurize(train_records, min_df=min_df)
        if space.size == 0:
            space, vectors = classifier.featurize(train_records, min_df=1)

        user_labels = self.effective_labels(max_iteration=iteration)
        posterior_by_pmid = dict(zip(matrix.record_ids, posteriors.tolist()))
        soft = []
        for record in train_records:
            if record.pmid in user_labels:
                soft.append(1.0 if user_labels[record.pmid] == INCLUDE else 0.0)
            elif record.in_negative_set:
                soft.append(0.0)
            else:
                soft.append(posterior_by_pmid[record.pmid])

        seed = self._iteration_seed(iteration)
        budget = min(self.config.feature_budget, space.size)
        if len(train_records) >= 10 and budget < space.size:
            selected = classifier.select_features(
                vectors, soft, budget=budget, seed=seed,
                config=classifier.SelectConfig(steps=self.config.sa_steps),
            )
        else:
            selected = list(range(space.size))

        train_config = classifier.TrainConfig(
            l2=self.config.train_l2,
            learning_rate=self.config.train_lr,
            epochs=self.config.train_epochs,
            seed=seed,
        )
        model = classifier.train(vectors, soft, train_config, selected=selected)
        return _Pipeline(
            corpus=corpus,
            screened=screened,
            ruleset=ruleset,
            matrix=matrix,
            label_params=params,
            space=space,
            vectors=vectors,
            model=model,
            user_labels=user_labels,
            train_records=train_records,
        )

    def _potentials(self, pipeline) -> dict[str, classifier.PotentialScore]:
        """Potential scores for the unlabeled, eligible, non-negative pool."""
        by_pmid = {r.pmid: i for i, r in enumerate(pipeline.train_records)}
        labeled_rows = [by_pmid[p] for p in sorted(pipeline.user_labels) if p in by_pmid]
        labeled_vectors = pipeline.vectors[labeled_rows] if labeled_rows else None
        scores: dict[str, classifier.PotentialScore] = {}
        for record in pipeline.screened:
            if record.pmid in pipeline.user_labels or record.in_negative_set:
                continue
            scores[record.pmid] = classifier.potential(
                pipeline.vectors[by_pmid[record.pmid]],
                pipeline.model,
                labeled_vectors,
                alpha=self.config.alpha,
            )
        return scores

    # --- spec operations ----------------------------------------------------

    def start_iteration(self) -> list[str]:
        if self.phase not in (PHASE_CONFIGURED,):
            raise PhaseViolation(f"cannot start an iteration while {self.phase}")
        pipeline = self._train_pipeline(self.iteration)
        potentials = self._potentials(pipeline)
        if not potentials:
            raise NoEligibleRecords("every eligible record is already labeled")
        queue = classifier.rank_queue(potentials, k=self.config.queue_size)
        it_dir = self._iteration_dir(self.iteration)
        it_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "iteration": self.iteration,
            "pmids": queue,
            "items": self._queue_items(pipeline, potentials, queue),
        }
        (it_dir / "queue.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )
        self.phase = PHASE_AWAITING
        self.save()
        return queue

    def _queue_items(self, pipeline, potentials, queue: list[str]) -> list[dict]:
        """Everything the review UI shows per card: prediction, potential,
        and rule-match highlights with character spans."""
        by_pmid = {r.pmid: i for i, r in enumerate(pipeline.train_records)}
        active = pipeline.ruleset.active_at(self.iteration)
        items = []
        for pmid in queue:
            record = pipeline.corpus.records[pmid]
            prob = classifier.predict(pipeline.model, pipeline.vectors[by_pmid[pmid]])
            score = potentials[pmid]
            highlights = []
            for rule in active:
                for source in ("title", "abstract"):
                    for start, end in rules.find_matches(rule, getattr(record, source)):
                        highlights.append({
                            "rule": rule.text,
                            "label": rule.label,
                            "field": source,
                            "start": start,
                            "end": end,
                        })
            highlights.sort(key=lambda h: (h["field"], h["start"], h["end"], h["rule"]))
            items.append({
                "pmid": pmid,
                "prediction": classifier.classify(prob),
                "probability": prob,
                "potential": {
                    "value": score.value,
                    "uncertainty": score.uncertainty_component,
                    "novelty": score.novelty_component,
                },
                "highlights": highlights,
            })
        return items

    def submit_feedback(self, labels: dict[str, str], rule_edits: list[dict] | None = None) -> None:
        """Record user labels (must come from the current queue) and apply
        rule edits stamped with the current iteration. May be called more
        than once per iteration; label resubmission is last-write-wins."""
        if self.phase not in (PHASE_AWAITING, PHASE_TRAINING):
            raise PhaseViolation(f"no feedback expected while {self.phase}")
        queue = set(self.current_queue())
        for pmid in labels:
            if pmid not in queue:
                raise UnknownPmid(f"pmid {pmid} is not in the current queue")
        for pmid, label in labels.items():
            if label not in (INCLUDE, EXCLUDE):
                raise InvalidConfig(f"bad label {label!r} for {pmid}")
        with open(self.labels_path, "a") as fh:
            for pmid in sorted(labels, key=int):
                fh.write(json.dumps(
                    {"iteration": self.iteration, "pmid": pmid, "label": labels[pmid]}
                ) + "\n")
        ruleset = self.load_ruleset()
        for edit in rule_edits or []:
            if edit["action"] == "add":
                rules.upsert_rule(ruleset, edit["text"], edit["label"], self.iteration)
            elif edit["action"] == "remove":
                rules.remove_rule(ruleset, int(edit["rule_id"]), self.iteration)
            else:
                raise InvalidConfig(f"unknown rule edit action {edit['action']!r}")
        save_ruleset(ruleset, self.ruleset_path)
        self.phase = PHASE_TRAINING
        self.save()

    def finish_iteration(self) -> IterationSnapshot:
        """Retrain on cumulative evidence and freeze the iteration snapshot."""
        if self.phase != PHASE_TRAINING:
            raise PhaseViolation(f"cannot finish an iteration while {self.phase}")
        try:
            pipeline = self._train_pipeline(self.iteration)
        except (NoEligibleRecords, PhaseViolation):
            raise
        except Exception as exc:
            raise TrainingFailure(f"iteration {self.iteration} failed: {exc}") from exc

        by_pmid = {r.pmid: i for i, r in enumerate(pipeline.train_records)}
        predictions = classifier.predict_batch(pipeline.model, pipeline.vectors)
        pairs = [
            (label, classifier.classify(float(predictions[by_pmid[pmid]])))
            for pmid, label in sorted(pipeline.user_labels.items(), key=lambda kv: int(kv[0]))
            if pmid in by_pmid
        ]
        potentials = self._potentials(pipeline)
        avg_potential = (
            average_potential([s.value for s in potentials.values()]) if potentials else 0.0
        )
        if pairs:
            cm = confusion(pairs)
            its_metrics = IterationMetrics(
                kappa=kappa(cm), accuracy=accuracy(cm),
                per_class=class_metrics(cm),
                average_potential=avg_potential, confusion=cm,
            )
        else:
            zero = {c: ClassMetrics(0.0, 0.0, 0.0) for c in (INCLUDE, EXCLUDE)}
            its_metrics = IterationMetrics(
                kappa=0.0, accuracy=0.0, per_class=zero,
                average_potential=avg_potential, confusion=None,
            )

        active = pipeline.ruleset.active_at(self.iteration)
        it_dir = self._iteration_dir(self.iteration)
        it_dir.mkdir(parents=True, exist_ok=True)
        if len(active) >= 2:
            table = xstats.correlation_table(
                active, pipeline.screened, threshold=self.config.correlation_threshold
            )
            xstats.save_correlations_csv(table, it_dir / "correlations.csv")
        class_assignments = {
            r.pmid: classifier.classify(float(predictions[by_pmid[r.pmid]]))
            for r in pipeline.screened
        }
        class_assignments.update(pipeline.user_labels)
        freqs = xstats.term_frequencies(pipeline.screened, class_assignments)
        xstats.save_wordcloud_json(freqs, it_dir / "wordcloud.json")

        queue = self.current_queue()
        collected = {
            e["pmid"]: e["label"] for e in self.label_log()
            if e["iteration"] == self.iteration
        }
        model_payload = _model_payload(self.iteration, pipeline, self._iteration_seed(self.iteration))
        (it_dir / "model.json").write_text(json.dumps(model_payload, sort_keys=True) + "\n")
        metrics_payload = _metrics_payload(self.iteration, its_metrics, len(pipeline.user_labels))
        (it_dir / "metrics.json").write_text(
            json.dumps(metrics_payload, indent=2, sort_keys=True) + "\n"
        )

        snapshot = IterationSnapshot(
            iteration_no=self.iteration,
            active_rule_ids=[r.rule_id for r in active],
            queue=queue,
            labels_collected=collected,
            metrics=its_metrics,
            model_payload=model_payload,
        )
        self.iteration += 1
        self.phase = PHASE_CONFIGURED
        self.save()
        return snapshot

    def select_best_iteration(self) -> int:
        """Pinned iteration if set, else argmax (kappa, accuracy, earliest)."""
        if self.pinned_iteration is not None:
            return self.pinned_iteration
        numbers = self.snapshot_numbers()
        if not numbers:
            raise NoSuchIteration("no snapshots yet")
        scored = []
        for n in numbers:
            payload = json.loads((self._iteration_dir(n) / "metrics.json").read_text())
            scored.append((payload["kappa"], payload["accuracy"], -n, n))
        return max(scored)[3]

    def pin_iteration(self, n: int | None) -> None:
        if n is not None and n not in self.snapshot_numbers():
            raise NoSuchIteration(f"iteration {n} has no snapshot")
        self.pinned_iteration = n
        self.save()

    def revert_to_iteration(self, n: int) -> None:
        """Deploy from snapshot ``n``; later labels and rule edits stay in
        the logs but are inactive for deployment."""
        if n not in self.snapshot_numbers():
            raise NoSuchIteration(f"iteration {n} has no snapshot")
        self.deployment_iteration = n
        self.save()

    def deploy(self, snapshot_no: int | None = None) -> dict:
        """Classify every eligible record with a frozen snapshot; records the
        user labeled keep their labels."""
        if snapshot_no is None:
            snapshot_no = self.deployment_iteration or self.select_best_iteration()
        if snapshot_no not in self.snapshot_numbers():
            raise NoSuchIteration(f"iteration {snapshot_no} has no snapshot")
        payload = json.loads((self._iteration_dir(snapshot_no) / "model.json").read_text())
        space = classifier.FeatureSpace(
            vocabulary=payload["vocabulary"],
            document_frequency=np.asarray(payload["document_frequency"]),
            idf=np.asarray(payload["idf"]),
        )
        model = classifier.ClassifierModel(
            weights=np.asarray(payload["weights"]),
            bias=payload["bias"],
            selected_features=payload["selected_features"],
            n_features_total=len(payload["vocabulary"]),
        )
        corpus = self.load_corpus()
        records = corpus.eligible()
        user_labels = self.effective_labels(max_iteration=snapshot_no)
        include: list[str] = []
        exclude: list[str] = []
        if records:
            matrix = classifier.vectorize(space, records)
            probs = classifier.predict_batch(model, matrix)
            for record, prob in zip(records, probs):
                label = user_labels.get(record.pmid) or classifier.classify(float(prob))
                (include if label == INCLUDE else exclude).append(record.pmid)
        self.deployment = {
            "snapshot": snapshot_no,
            "include": sorted(include, key=int),
            "exclude": sorted(exclude, key=int),
        }
        self.save()
        return self.deployment

    def finalize(self) -> None:
        if not self.snapshot_numbers():
            raise PhaseViolation("cannot finalize before any snapshot exists")
        self.phase = PHASE_FINALIZED
        self.save()

    # --- telemetry -----------------------------------------------------------

    def record_telemetry(self, kind: str, at: str, iteration: int | None = None) -> None:
        """Append one telemetry event; timestamps must be monotone."""
        if kind not in ("activity", "train_start", "train_end"):
            raise InvalidConfig(f"unknown telemetry kind {kind!r}")
        stamp = datetime.fromisoformat(at)
        if self.telemetry:
            last = datetime.fromisoformat(self.telemetry[-1]["at"])
            if stamp < last:
                raise ClockSkew(f"{at} is earlier than {self.telemetry[-1]['at']}")
        self.telemetry.append({
            "kind": kind,
            "at": at,
            "iteration": iteration if iteration is not None else self.iteration,
        })
        self.save()

    def telemetry_report(self) -> dict:
        """Per-iteration labor minutes and training runtimes, Table-style."""
        per_iteration: dict[int, dict] = {}
        last_activity: dict[int, datetime] = {}
        open_train: dict[int, datetime] = {}
        for event in self.telemetry:
            n = event["iteration"]
            stamp = datetime.fromisoformat(event["at"])
            row = per_iteration.setdefault(
                n, {"labor_seconds": 0.0, "runtime_seconds": 0.0,
                    "runtime_start": None, "runtime_end": None}
            )
            if event["kind"] == "activity":
                prev = last_activity.get(n)
                if prev is not None:
                    gap = (stamp - prev).total_seconds()
                    if gap <= IDLE_CUTOFF_SECONDS:
                        row["labor_seconds"] += gap
                last_activity[n] = stamp
            elif event["kind"] == "train_start":
                open_train[n] = stamp
                if row["runtime_start"] is None:
                    row["runtime_start"] = stamp
            elif event["kind"] == "train_end":
                start = open_train.pop(n, None)
                if start is None:
                    raise ClockSkew(f"train_end without train_start in iteration {n}")
                row["runtime_seconds"] += (stamp - start).total_seconds()
                row["runtime_end"] = stamp
        rows = []
        for n in sorted(per_iteration):
            row = per_iteration[n]
            rows.append({
                "iteration": n,
                "labor_minutes": round(row["labor_seconds"] / 60.0, 2),
                "runtime_start": _hms(row["runtime_start"]),
                "runtime_end": _hms(row["runtime_end"]),
                "total_runtime": _duration_hms(row["runtime_seconds"]),
            })
        return {
            "rows": rows,
            "total_labor_minutes": round(
                sum(r["labor_minutes"] for r in rows), 1
            ),
            "total_runtime": _duration_hms(
                sum(per_iteration[n]["runtime_seconds"] for n in per_iteration)
            ),
        }

    # --- prisma / report -------------------------------------------------------

    def prisma_counts(self) -> prisma.PrismaCounts:
        corpus = self.load_corpus()
        reasons = corpus.reason_counts()
        identified = corpus.identified_total()
        cap = self.deployment["snapshot"] if self.deployment else None
        user_labels = self.effective_labels(max_iteration=cap)
        human_excluded = sum(1 for v in user_labels.values() if v == EXCLUDE)
        included = len(self.deployment["include"]) if self.deployment else 0
        return prisma.tally(
            identified=identified,
            duplicates_removed=identified - len(corpus),
            removed_other_reasons=reasons[LANGUAGE_BLOCKED],
            ineligible_by_criteria=reasons[NO_ABSTRACT] + reasons[EXCLUSION_QUERY_MATCH],
            records_excluded=human_excluded,
            included=included,
        )

    def write_prisma(self) -> prisma.PrismaCounts:
        counts = self.prisma_counts()
        for fmt in ("svg", "dot", "json"):
            (self.session_dir / f"prisma.{fmt}").write_text(prisma.render(counts, fmt))
        return counts

    def generate_package_insert(self) -> tuple[str, dict]:
        from .report import build_package_insert

        md, payload = build_package_insert(self)
        report_dir = self.session_dir / "report"
        report_dir.mkdir(exist_ok=True)
        (report_dir / "insert.md").write_text(md)
        (report_dir / "insert.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )
        return md, payload


@dataclass
class _Pipeline:
    corpus: Corpus
    screened: list
    ruleset: Ruleset
    matrix: labelmodel.LabelMatrix
    label_params: labelmodel.LabelModelParams
    space: classifier.FeatureSpace
    vectors: np.ndarray
    model: classifier.ClassifierModel
    user_labels: dict[str, str]
    train_records: list


def _hms(stamp: datetime | None) -> str:
    return stamp.strftime("%H:%M:%S") if stamp else ""


def _duration_hms(seconds: float) -> str:
    total = int(round(seconds))
    return f"{total // 3600:02d}:{total % 3600 // 60:02d}:{total % 60:02d}"


def _model_payload(iteration: int, pipeline: _Pipeline, seed: int) -> dict:
    model = pipeline.model
    return {
        "iteration": iteration,
        "seed": seed,
        "vocabulary": pipeline.space.vocabulary,
        "document_frequency": pipeline.space.document_frequency.tolist(),
        "idf": pipeline.space.idf.tolist(),
        "selected_features": list(model.selected_features),
        "weights": model.weights.tolist(),
        "bias": float(model.bias),
        "training_config": {
            "l2": model.training_config.l2,
            "learning_rate": model.training_config.learning_rate,
            "epochs": model.training_config.epochs,
            "seed": model.training_config.seed,
        },
        "label_model": {
            "class_prior": pipeline.label_params.class_prior,
            "accuracies": pipeline.label_params.accuracies.tolist(),
            "rule_ids": pipeline.matrix.rule_ids,
            "log_likelihood": pipeline.label_params.log_likelihood,
        },
        "active_rule_ids": [r.rule_id for r in pipeline.ruleset.active_at(iteration)],
    }


def _metrics_payload(iteration: int, m: IterationMetrics, n_labeled: int) -> dict:
    payload = {
        "iteration": iteration,
        "kappa": m.kappa,
        "accuracy": m.accuracy,
        "average_potential": m.average_potential,
        "n_labeled": n_labeled,
        "per_class": {
            cls: {"recall": cm.recall, "precision": cm.precision, "f_score": cm.f_score}
            for cls, cm in m.per_class.items()
        },
    }
    if m.confusion is not None:
        payload["confusion"] = m.confusion.counts
    return payload


def init_session(session_dir: Path | str, config: SessionConfig | dict, force: bool = False) -> SessionState:
    """Create the session directory with a frozen config and the iteration-1
    ruleset. Refuses to overwrite an existing session unless forced."""
    if isinstance(config, dict):
        config = SessionConfig.from_dict(config)
    config.validate()
    session_dir = Path(session_dir)
    if (session_dir / "config.json").exists() and not force:
        raise InvalidConfig(f"{session_dir} already holds a session (use force to re-init)")
    session_dir.mkdir(parents=True, exist_ok=True)
    (session_dir / "iterations").mkdir(exist_ok=True)
    (session_dir / "reference").mkdir(exist_ok=True)
    (session_dir / "config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    ruleset = Ruleset()
    for raw in config.initial_rules:
        rules.upsert_rule(ruleset, raw["text"], raw["label"], 1)
    save_ruleset(ruleset, session_dir / "ruleset.csv")
    state = SessionState(session_dir, config)
    state.save()
    return state
