"""Command-line entry points for the screening pipeline."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import LrnError


def _fail(err: LrnError) -> None:
    click.echo(f"error [{err.code}]: {err}", err=True)
    sys.exit(1)


def _load_state(session_dir: str):
    from .session import SessionState

    return SessionState.load(Path(session_dir))


@click.group()
def main():
    """Literature review network: explainable screening with human feedback."""


@main.command()
@click.option("--session-dir", required=True, type=click.Path())
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="JSON file with search specs, initial rules, and seed.")
@click.option("--force", is_flag=True, help="Overwrite an existing session.")
def init(session_dir, config_path, force):
    """Create a session directory from a config file."""
    from .session import init_session

    try:
        state = init_session(Path(session_dir), json.loads(Path(config_path).read_text()),
                             force=force)
    except LrnError as err:
        _fail(err)
    click.echo(f"initialized session {state.config.session_id} at {session_dir}")


@main.command()
@click.option("--query-file", type=click.Path(exists=True),
              help="Optional JSON file overriding the session's search specs.")
@click.option("--out", "session_dir", required=True, type=click.Path(),
              help="Session directory.")
@click.option("--fixtures", type=click.Path(), default=None,
              help="Serve requests from canned XML instead of live HTTPS.")
def fetch(query_file, session_dir, fixtures):
    """Run the session's searches and store the merged record corpus."""
    from .pubmed import FixtureTransport, LiveTransport

    try:
        state = _load_state(session_dir)
        if query_file:
            state.config.search_specs = json.loads(Path(query_file).read_text())
        transport = FixtureTransport(fixtures) if fixtures else LiveTransport()
        report = state.fetch(transport)
    except LrnError as err:
        _fail(err)
    click.echo(json.dumps(report, indent=2, sort_keys=True))


@main.command()
@click.option("--session-dir", required=True, type=click.Path())
def screen(session_dir):
    """Apply eligibility screening to every pending record."""
    try:
        report = _load_state(session_dir).screen()
    except LrnError as err:
        _fail(err)
    click.echo(json.dumps(report, indent=2, sort_keys=True))


@main.command("import-library")
@click.option("--session-dir", required=True, type=click.Path())
@click.option("--path", required=True, type=click.Path(exists=True))
@click.option("--name", required=True)
def import_library(session_dir, path, name):
    """Import a reference pmid library for concordance checks."""
    from .corpus import import_reference_library

    try:
        state = _load_state(session_dir)
        library, warnings = import_reference_library(path, name)
    except LrnError as err:
        _fail(err)
    out = state.session_dir / "reference" / f"{name}.pmids"
    out.parent.mkdir(exist_ok=True)
    out.write_text("\n".join(sorted(library.pmids, key=int)) + "\n")
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(f"imported {len(library.pmids)} pmids to {out}")


@main.group()
def rules():
    """Inspect or edit the concept ruleset."""


@rules.command("list")
@click.option("--session-dir", required=True, type=click.Path())
def rules_list(session_dir):
    from .rules import export_history

    state = _load_state(session_dir)
    for rule_id, text, label, notation in export_history(state.load_ruleset()):
        click.echo(f"{rule_id}\t{text}\t{label}\t{notation}")


@rules.command("add")
@click.option("--session-dir", required=True, type=click.Path())
@click.option("--text", required=True)
@click.option("--label", required=True, type=click.Choice(["INCLUDE", "EXCLUDE"]))
def rules_add(session_dir, text, label):
    from .rules import save_ruleset, upsert_rule

    try:
        state = _load_state(session_dir)
        ruleset = state.load_ruleset()
        upsert_rule(ruleset, text, label, state.iteration)
        save_ruleset(ruleset, state.ruleset_path)
    except LrnError as err:
        _fail(err)
    click.echo(f"added {text!r} ({label}) at iteration {state.iteration}")


@rules.command("remove")
@click.option("--session-dir", required=True, type=click.Path())
@click.option("--rule-id", required=True, type=int)
def rules_remove(session_dir, rule_id):
    from .rules import remove_rule, save_ruleset

    try:
        state = _load_state(session_dir)
        ruleset = state.load_ruleset()
        remove_rule(ruleset, rule_id, state.iteration)
        save_ruleset(ruleset, state.ruleset_path)
    except LrnError as err:
        _fail(err)
    click.echo(f"removed rule {rule_id} at iteration {state.iteration}")


@main.command()
@click.option("--session-dir", required=True, type=click.Path())
def iterate(session_dir):
    """Train on current evidence and print the feedback queue."""
    try:
        state = _load_state(session_dir)
        queue = state.start_iteration()
    except LrnError as err:
        _fail(err)
    click.echo(json.dumps({"iteration": state.iteration, "queue": queue}, indent=2))


@main.command()
@click.option("--session-dir", required=True, type=click.Path())
@click.option("--labels-file", required=True, type=click.Path(exists=True),
              help='JSON map {"pmid": "INCLUDE"|"EXCLUDE"}.')
@click.option("--rules-file", type=click.Path(exists=True), default=None,
              help="Optional JSON list of rule edits.")
def label(session_dir, labels_file, rules_file):
    """Submit feedback labels (and optional rule edits) for the queue."""
    try:
        state = _load_state(session_dir)
        labels = json.loads(Path(labels_file).read_text())
        edits = json.loads(Path(rules_file).read_text()) if rules_file else []
        state.submit_feedback(labels, edits)
    except LrnError as err:
        _fail(err)
    click.echo(f"recorded {len(labels)} labels for iteration {state.iteration}")


@main.command()
@click.option("--session-dir", required=True, type=click.Path())
def train(session_dir):
    """Finish the current iteration: retrain and freeze a snapshot."""
    try:
        state = _load_state(session_dir)
        snapshot = state.finish_iteration()
    except LrnError as err:
        _fail(err)
    click.echo(json.dumps({
        "iteration": snapshot.iteration_no,
        "kappa": snapshot.metrics.kappa,
        "accuracy": snapshot.metrics.accuracy,
        "average_potential": snapshot.metrics.average_potential,
    }, indent=2, sort_keys=True))


@main.command()
@click.option("--session-dir", required=True, type=click.Path())
@click.option("--iteration", "snapshot_no", type=int, default=None,
              help="Snapshot to deploy; defaults to pinned/best.")
def deploy(session_dir, snapshot_no):
    """Classify every eligible record with a frozen snapshot."""
    try:
        state = _load_state(session_dir)
        deployment = state.deploy(snapshot_no)
    except LrnError as err:
        _fail(err)
    click.echo(json.dumps({
        "snapshot": deployment["snapshot"],
        "include": len(deployment["include"]),
        "exclude": len(deployment["exclude"]),
    }, indent=2, sort_keys=True))


@main.command()
@click.option("--a", "set_a", required=True, type=click.Path(exists=True),
              help="File of pmids, one per line.")
@click.option("--b", "set_b", required=True, type=click.Path(exists=True))
@click.option("--universe", type=click.Path(exists=True), default=None)
@click.option("--reps", default=1_000_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
def concordance(set_a, set_b, universe, reps, seed):
    """Jaccard overlap and bootstrap significance between two pmid sets."""
    from .concordance import compare_sets, pairwise_table
    from .metrics import format_number

    def read(path):
        return {line.strip() for line in Path(path).read_text().splitlines() if line.strip()}

    a, b = read(set_a), read(set_b)
    u = read(universe) if universe else None
    try:
        comparison = compare_sets(Path(set_a).stem, a, Path(set_b).stem, b,
                                  universe=u, replications=reps, seed=seed)
        comparison = pairwise_table([comparison])[0]
    except LrnError as err:
        _fail(err)
    click.echo("name_a,name_b,size_a,size_b,intersection,jaccard,p_raw,p_adjusted")
    click.echo(
        f"{comparison.name_a},{comparison.name_b},{comparison.size_a},"
        f"{comparison.size_b},{comparison.intersection},"
        f"{format_number(comparison.jaccard, 4)},{comparison.p_raw:.3E},"
        f"{comparison.p_adjusted:.3E}"
    )


@main.command()
@click.option("--session-dir", required=True, type=click.Path())
@click.option("--format", "fmt", default="svg", type=click.Choice(["svg", "dot", "json"]))
def prisma(session_dir, fmt):
    """Write PRISMA flow documents and print the requested format."""
    from .prisma import render

    try:
        state = _load_state(session_dir)
        counts = state.write_prisma()
    except LrnError as err:
        _fail(err)
    click.echo(render(counts, fmt))


@main.command()
@click.option("--session-dir", required=True, type=click.Path())
def report(session_dir):
    """Generate the AI Package Insert (markdown + JSON)."""
    try:
        state = _load_state(session_dir)
        md, _ = state.generate_package_insert()
    except LrnError as err:
        _fail(err)
    click.echo(md)


@main.command()
@click.option("--session-dir", required=True, type=click.Path())
@click.option("--questions-file", required=True, type=click.Path(exists=True),
              help="JSON with Introduction/Results/Discussion questions.")
@click.option("--backend-url", default=None,
              help="Completion endpoint; omit for the deterministic mock.")
def summarize(session_dir, questions_file, backend_url):
    """Generate the review document from the deployed INCLUDE set."""
    from .errors import BackendError
    from .summarizer import HttpBackend, MockBackend, PromptSet, generate_review

    try:
        state = _load_state(session_dir)
        if not state.deployment:
            raise LrnError("deploy before summarizing")
        sections = json.loads(Path(questions_file).read_text())
        prompt_set = PromptSet(sections=sections)
        corpus = state.load_corpus()
        docs = [corpus.records[p] for p in state.deployment["include"]]
        backend = HttpBackend(backend_url) if backend_url else MockBackend()
        document = generate_review(prompt_set, docs, backend)
    except BackendError as err:
        report_dir = state.session_dir / "report"
        report_dir.mkdir(exist_ok=True)
        for section, text in err.completed.items():
            (report_dir / f"slr.{section.lower()}.partial.md").write_text(text + "\n")
        _fail(err)
    except LrnError as err:
        _fail(err)
    report_dir = state.session_dir / "report"
    report_dir.mkdir(exist_ok=True)
    (report_dir / "slr.md").write_text(document)
    click.echo(f"wrote {report_dir / 'slr.md'}")


@main.command()
@click.option("--bind", default="127.0.0.1:8787", show_default=True)
@click.option("--session-root", required=True, type=click.Path())
@click.option("--cors-origin", multiple=True, help="Allowed UI origins.")
@click.option("--ui-dist", type=click.Path(), default=None,
              help="Static UI bundle directory to serve at /.")
def serve(bind, session_root, cors_origin, ui_dist):
    """Serve the HTTP API (and optionally the UI bundle)."""
    from .api import serve as run_server

    run_server(Path(session_root), bind=bind, cors_origins=list(cors_origin),
               ui_dist=ui_dist)


if __name__ == "__main__":
    main()
