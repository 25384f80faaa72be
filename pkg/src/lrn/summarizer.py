"""Retrieval-augmented generation of the review document.

Documents are chunked on a sliding token window, chunks are ranked per
question with BM25, and prompts are assembled from a fixed preamble plus
the top chunks with their source ids. The completion backend is pluggable:
an HTTP endpoint taking {prompt, max_tokens} and returning {text}, or the
deterministic mock used by tests and offline runs.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import BackendError, BudgetTooSmall, InvalidWindow
from .textnorm import tokenize

SECTIONS = ("Introduction", "Results", "Discussion")

SYSTEM_PREAMBLE = (
    "You are drafting one section of a systematic literature review. "
    "Ground every statement in the numbered source excerpts below and cite "
    "sources by their bracketed ids. Do not introduce outside material."
)

BM25_K1 = 1.2
BM25_B = 0.75


@dataclass(frozen=True)
class PromptSet:
    sections: dict[str, str]  # exactly Introduction/Results/Discussion
    generation_no: int = 1

    def validate(self) -> None:
        if set(self.sections) != set(SECTIONS):
            raise BudgetTooSmall(
                f"prompt set must define exactly {SECTIONS}, got {sorted(self.sections)}"
            )
        for section, question in self.sections.items():
            if not question.strip():
                raise BudgetTooSmall(f"empty question for section {section}")


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    start: int  # token offsets
    end: int
    text: str


def chunk_document(text: str, window: int = 1000, overlap: int = 200, doc_id: str = "") -> list[Chunk]:
    """Sliding-window chunks over whitespace tokens; stride = window - overlap."""
    if overlap < 0 or window <= overlap:
        raise InvalidWindow(f"need window > overlap >= 0, got {window}/{overlap}")
    tokens = text.split()
    if not tokens:
        return []
    stride = window - overlap
    chunks = []
    start = 0
    while True:
        end = min(start + window, len(tokens))
        chunks.append(Chunk(doc_id=doc_id, start=start, end=end,
                            text=" ".join(tokens[start:end])))
        if end >= len(tokens):
            break
        start += stride
    return chunks


def _bm25_scores(question: str, chunks: Sequence[Chunk]) -> list[float]:
    chunk_tokens = [tokenize(c.text, stem=False) for c in chunks]
    n = len(chunks)
    avg_len = sum(len(t) for t in chunk_tokens) / n
    df: dict[str, int] = {}
    for tokens in chunk_tokens:
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    scores = []
    terms = tokenize(question, stem=False)
    for tokens in chunk_tokens:
        tf: dict[str, int] = {}
        for t in tokens:
            tf[t] = tf.get(t, 0) + 1
        score = 0.0
        length_norm = 1 - BM25_B + BM25_B * len(tokens) / avg_len
        for term in terms:
            f = tf.get(term, 0)
            if f == 0:
                continue
            idf = math.log(1 + (n - df[term] + 0.5) / (df[term] + 0.5))
            score += idf * f * (BM25_K1 + 1) / (f + BM25_K1 * length_norm)
        scores.append(score)
    return scores


def retrieve_chunks(question: str, chunks: Sequence[Chunk], k: int = 8) -> list[Chunk]:
    """Top-k chunks by BM25, ties broken by (doc_id, span)."""
    if not chunks:
        raise InvalidWindow("retrieve_chunks requires at least one chunk")
    scores = _bm25_scores(question, chunks)
    ranked = sorted(
        range(len(chunks)),
        key=lambda i: (-scores[i], chunks[i].doc_id, chunks[i].start, chunks[i].end),
    )
    return [chunks[i] for i in ranked[:k]]


def _token_len(text: str) -> int:
    return len(text.split())


def assemble_prompt(section: str, question: str, chunks: Sequence[Chunk],
                    token_budget: int = 3000) -> str:
    """Deterministic prompt: preamble, section, cited excerpts, question.

    When over budget the lowest-ranked chunks are dropped first; failing to
    fit even one chunk is an error.
    """
    if not chunks:
        raise BudgetTooSmall("assemble_prompt requires at least one chunk")
    kept = list(chunks)
    while kept:
        lines = [SYSTEM_PREAMBLE, "", f"Section: {section}", ""]
        for i, chunk in enumerate(kept, start=1):
            lines.append(f"[{i}] (source {chunk.doc_id}) {chunk.text}")
        lines += ["", f"Question: {question}"]
        prompt = "\n".join(lines)
        if _token_len(prompt) <= token_budget:
            return prompt
        kept.pop()  # chunks arrive ranked; drop the weakest
    raise BudgetTooSmall(
        f"token budget {token_budget} cannot fit the preamble plus one chunk"
    )


class MockBackend:
    """Deterministic stand-in for a hosted completion endpoint."""

    def complete(self, prompt: str, max_tokens: int = 512) -> str:
        digest = hashlib.sha256(prompt.encode()).hexdigest()[:12]
        sources = sorted(
            {line.split(")")[0].split("(source ", 1)[1]
             for line in prompt.splitlines()
             if line.startswith("[") and "(source " in line}
        )
        cited = "; ".join(f"[{s}]" for s in sources)
        text = (
            f"Synthesized summary {digest} drawing on sources {cited}. "
            "The excerpts above were condensed deterministically for offline runs."
        )
        return " ".join(text.split()[:max_tokens])


class HttpBackend:
    """POSTs {prompt, max_tokens} to a configured endpoint, expects {text}."""

    def __init__(self, url: str, timeout: float = 120.0):
        self.url = url
        self.timeout = timeout

    def complete(self, prompt: str, max_tokens: int = 512) -> str:
        import requests

        response = requests.post(
            self.url, json={"prompt": prompt, "max_tokens": max_tokens}, timeout=self.timeout
        )
        if response.status_code != 200:
            raise BackendError(f"backend returned {response.status_code}", section="")
        return response.json()["text"]


def generate_review(
    prompt_set: PromptSet,
    included_docs: Sequence,  # records with pmid/title/abstract, optional fulltext_path
    backend,
    window: int = 1000,
    overlap: int = 200,
    k: int = 8,
    token_budget: int = 3000,
    max_tokens: int = 512,
) -> str:
    """Three generated sections merged under fixed headers plus a source
    appendix. On a backend failure the error names the failed section and
    carries the sections already completed."""
    prompt_set.validate()
    chunks: list[Chunk] = []
    for doc in included_docs:
        text = _doc_fulltext(doc)
        chunks.extend(chunk_document(text, window=window, overlap=overlap, doc_id=doc.pmid))
    if not chunks:
        raise BudgetTooSmall("no text available from the included documents")

    completed: dict[str, str] = {}
    cited: set[str] = set()
    for section in SECTIONS:
        question = prompt_set.sections[section]
        top = retrieve_chunks(question, chunks, k=k)
        prompt = assemble_prompt(section, question, top, token_budget=token_budget)
        try:
            completed[section] = backend.complete(prompt, max_tokens=max_tokens)
        except Exception as exc:
            raise BackendError(f"backend failed on section {section}: {exc}",
                               section=section, completed=dict(completed))
        cited.update(c.doc_id for c in top)

    lines = [f"# Generated Systematic Review (generation {prompt_set.generation_no})", ""]
    for section in SECTIONS:
        lines += [f"## {section}", "", completed[section], ""]
    lines += ["## Sources Cited", ""]
    for doc_id in sorted(cited, key=int):
        lines.append(f"- PMID {doc_id}")
    lines.append("")
    return "\n".join(lines)


def _doc_fulltext(doc) -> str:
    path = getattr(doc, "fulltext_path", None)
    if path:
        from pathlib import Path

        p = Path(path)
        if p.exists():
            return p.read_text()
    return f"{doc.title} {doc.abstract}"
