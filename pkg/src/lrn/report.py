"""AI Package Insert rendering: one structured payload, one markdown view.

Everything is read back from the session directory so the report is a pure
function of persisted state and regenerating it is byte-stable.
"""

from __future__ import annotations

import csv
import json

from .errors import NoSuchIteration
from .metrics import format_number, format_percent
from .rules import export_history


def _markdown_table(headers: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(headers) + " |",
             "| " + " | ".join("---" for _ in headers) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(str(cell) for cell in row) + " |")
    return lines


def build_package_insert(state) -> tuple[str, dict]:
    """(markdown, structured payload) for every iteration snapshot so far."""
    numbers = state.snapshot_numbers()
    if not numbers:
        raise NoSuchIteration("no iteration snapshots to report")

    config = state.config
    ruleset = state.load_ruleset()
    iterations = []
    for n in numbers:
        metrics = json.loads((state._iteration_dir(n) / "metrics.json").read_text())
        correlations_path = state._iteration_dir(n) / "correlations.csv"
        correlations = []
        if correlations_path.exists():
            with open(correlations_path, newline="") as fh:
                reader = csv.reader(fh)
                next(reader)
                correlations = [row for row in reader]
        iterations.append({"metrics": metrics, "correlations": correlations})

    telemetry = state.telemetry_report()
    prisma_counts = None
    if state.records_path.exists():
        from dataclasses import asdict

        prisma_counts = asdict(state.prisma_counts())

    payload = {
        "session_id": config.session_id,
        "seed": config.seed,
        "search_specs": config.search_specs,
        "rule_history": [
            {"rule_number": rid, "rule": text, "label": label, "iterations": notation}
            for rid, text, label, notation in export_history(ruleset)
        ],
        "iterations": [it["metrics"] for it in iterations],
        "correlations": {
            str(n): it["correlations"] for n, it in zip(numbers, iterations)
        },
        "telemetry": telemetry,
        "prisma": prisma_counts,
        "deployment": state.deployment,
    }

    lines = [f"# AI Package Insert — {config.session_id}", ""]
    lines += ["## Configuration", ""]
    lines += [f"- seed: {config.seed}",
              f"- queue size: {config.queue_size}",
              f"- potential mix alpha: {config.alpha}",
              f"- feature budget: {config.feature_budget}", ""]
    lines += ["### Search Strings", ""]
    lines += _markdown_table(
        ["String", "Query", "Exclusion Query"],
        [[s["string_id"], s["query_text"], s.get("exclusion_query_text") or "—"]
         for s in config.search_specs],
    )
    lines += ["", "## Concept Rule History", ""]
    lines += _markdown_table(
        ["Rule Number", "Rule", "Label", "Iteration Modified"],
        [list(row) for row in export_history(ruleset)],
    )
    lines += ["", "## Iteration Performance", ""]
    lines += _markdown_table(
        ["Iteration", "Cohen's Kappa", "Accuracy", "Average Potential"],
        [[it["metrics"]["iteration"],
          format_number(it["metrics"]["kappa"], 4),
          format_percent(it["metrics"]["accuracy"]),
          format_percent(it["metrics"]["average_potential"])]
         for it in iterations],
    )
    for it in iterations:
        metrics = it["metrics"]
        lines += ["", f"### Class Metrics — Iteration {metrics['iteration']}", ""]
        lines += _markdown_table(
            ["Label", "Recall", "Precision", "F-score"],
            [[cls,
              format_percent(vals["recall"]),
              format_percent(vals["precision"]),
              format_percent(vals["f_score"])]
             for cls, vals in sorted(metrics["per_class"].items(), reverse=True)],
        )
    latest = iterations[-1]
    if latest["correlations"]:
        lines += ["", f"## Rule Correlations — Iteration {numbers[-1]}", ""]
        lines += _markdown_table(
            ["Rule 1", "Rule 2", "Rule 1 Class", "Rule 2 Class", "Correlation value",
             "P-value (raw)", "P-value (FDR-adjusted)", "Rule 1 Report Coverage",
             "Rule 2 Report Coverage"],
            latest["correlations"],
        )
    if telemetry["rows"]:
        lines += ["", "## Telemetry", ""]
        lines += _markdown_table(
            ["Iteration", "Human Labor Time (min)", "Runtime Start", "Runtime End",
             "Total Runtime"],
            [[r["iteration"], r["labor_minutes"], r["runtime_start"], r["runtime_end"],
              r["total_runtime"]] for r in telemetry["rows"]],
        )
        lines += ["",
                  f"Total Human Labor Time (mins): {telemetry['total_labor_minutes']}",
                  f"Total Computation Time: {telemetry['total_runtime']}"]
    if prisma_counts is not None:
        lines += ["", "## PRISMA Counts", ""]
        lines += _markdown_table(
            ["Stage", "n"],
            [[key, value] for key, value in sorted(prisma_counts.items())],
        )
    lines.append("")
    return "\n".join(lines), payload
