"""E-utilities client: esearch/efetch with pagination, rate limiting, and a
fixture transport for hermetic tests.

Every outbound request is described first (endpoint + params), so the same
descriptor can be served by live HTTPS or by a fixture directory where each
file is named by a stable hash of the canonicalized query string.
"""

from __future__ import annotations

import hashlib
import math
import os
import threading
import time
import urllib.parse
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .errors import InvalidSpec, NetworkError, ParseError, RateLimited

ESEARCH_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi"
EFETCH_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/efetch.fcgi"
API_KEY_ENV = "LRN_PUBMED_API_KEY"
FETCH_BATCH = 200
MAX_PAGE_SIZE = 10000

# E-utilities etiquette: 3 req/s anonymous, 10 with an api key
RATE_NO_KEY = 3.0
RATE_WITH_KEY = 10.0
RETRY_DELAYS = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class SearchSpec:
    query_text: str
    date_start: date
    date_end: date
    exclusion_query_text: str | None = None
    page_size: int = 200
    api_key: str | None = None

    def validate(self) -> None:
        if not self.query_text.strip():
            raise InvalidSpec("query_text must be nonempty")
        if self.date_start > self.date_end:
            raise InvalidSpec(f"date_start {self.date_start} after date_end {self.date_end}")
        if not 1 <= self.page_size <= MAX_PAGE_SIZE:
            raise InvalidSpec(f"page_size must be in [1, {MAX_PAGE_SIZE}]")


@dataclass(frozen=True)
class RawRecord:
    pmid: str
    title: str
    abstract: str
    language_codes: tuple[str, ...]
    publication_date: date
    authors: tuple[str, ...]
    keywords: tuple[str, ...]


@dataclass(frozen=True)
class RequestDescriptor:
    url: str
    params: tuple[tuple[str, str], ...]  # sorted key/value pairs

    def canonical(self) -> str:
        # api_key excluded so fixtures never depend on a secret
        visible = [(k, v) for k, v in self.params if k != "api_key"]
        return f"{self.url}?{urllib.parse.urlencode(visible)}"

    def fixture_name(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest() + ".xml"


@dataclass
class SearchResult:
    total_count: int
    pmids: list[str]
    query_translation: str


def _date_filter(spec: SearchSpec) -> str:
    return (
        f"{spec.date_start.strftime('%Y/%m/%d')}:{spec.date_end.strftime('%Y/%m/%d')}[dp]"
    )


def _make_descriptor(url: str, params: dict[str, str]) -> RequestDescriptor:
    return RequestDescriptor(url=url, params=tuple(sorted(params.items())))


def build_search_request(
    spec: SearchSpec, page_index: int, query_text: str | None = None
) -> RequestDescriptor:
    """esearch request for one result page; the term carries the date filter."""
    spec.validate()
    if page_index < 0:
        raise InvalidSpec("page_index must be >= 0")
    term = f"({query_text or spec.query_text}) AND ({_date_filter(spec)})"
    params = {
        "db": "pubmed",
        "term": term,
        "retstart": str(page_index * spec.page_size),
        "retmax": str(spec.page_size),
        "retmode": "xml",  # XML responses carry QueryTranslation
    }
    if spec.api_key:
        params["api_key"] = spec.api_key
    return _make_descriptor(ESEARCH_URL, params)


def build_fetch_request(pmids: list[str], api_key: str | None = None) -> RequestDescriptor:
    params = {
        "db": "pubmed",
        "id": ",".join(pmids),
        "retmode": "xml",
        "rettype": "abstract",
    }
    if api_key:
        params["api_key"] = api_key
    return _make_descriptor(EFETCH_URL, params)


class TokenBucket:
    """Simple shared rate limiter; thread-safe."""

    def __init__(self, rate_per_sec: float, clock=time.monotonic, sleeper=time.sleep):
        self.interval = 1.0 / rate_per_sec
        self._clock = clock
        self._sleep = sleeper
        self._lock = threading.Lock()
        self._next_free = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            wait = self._next_free - now
            self._next_free = max(now, self._next_free) + self.interval
        if wait > 0:
            self._sleep(wait)


class FixtureTransport:
    """Serves responses from ``<dir>/<hash>.xml``; replay is byte-stable."""

    def __init__(self, fixture_dir: Path | str):
        self.fixture_dir = Path(fixture_dir)

    def get(self, descriptor: RequestDescriptor) -> bytes:
        path = self.fixture_dir / descriptor.fixture_name()
        if not path.exists():
            raise NetworkError(
                f"no fixture {path.name} for request {descriptor.canonical()}"
            )
        return path.read_bytes()


class LiveTransport:
    """HTTPS transport with token-bucket throttling and bounded backoff."""

    def __init__(self, api_key: str | None = None, sleeper=time.sleep, session=None):
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        rate = RATE_WITH_KEY if self.api_key else RATE_NO_KEY
        self.bucket = TokenBucket(rate, sleeper=sleeper)
        self._sleep = sleeper
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    def get(self, descriptor: RequestDescriptor) -> bytes:
        params = dict(descriptor.params)
        if self.api_key and "api_key" not in params:
            params["api_key"] = self.api_key
        last_error: Exception | None = None
        for attempt, delay in enumerate((0.0,) + RETRY_DELAYS):
            if delay:
                self._sleep(delay)
            self.bucket.acquire()
            try:
                response = self._session.get(descriptor.url, params=params, timeout=60)
            except Exception as exc:  # transport-level failure: retry
                last_error = exc
                continue
            if response.status_code == 429:
                last_error = RateLimited(f"throttled on {descriptor.canonical()}")
                continue
            if response.status_code >= 500:
                last_error = NetworkError(
                    f"status {response.status_code} on {descriptor.canonical()}"
                )
                continue
            if response.status_code != 200:
                raise NetworkError(
                    f"status {response.status_code} on {descriptor.canonical()}"
                )
            return response.content
        if isinstance(last_error, RateLimited):
            raise last_error
        raise NetworkError(f"retries exhausted: {last_error}")


def _parse_esearch(body: bytes, descriptor: RequestDescriptor) -> tuple[int, list[str], str]:
    try:
        root = ET.fromstring(body)
    except ET.ParseError as exc:
        raise ParseError(f"malformed esearch response for {descriptor.canonical()}: {exc}")
    count_el = root.find("Count")
    if count_el is None or count_el.text is None:
        raise ParseError(f"esearch response missing Count for {descriptor.canonical()}")
    ids = [el.text for el in root.findall("IdList/Id") if el.text]
    translation = root.findtext("QueryTranslation", default="")
    return int(count_el.text), ids, translation


def run_search(spec: SearchSpec, transport, query_text: str | None = None) -> SearchResult:
    """Paginate esearch until all ids are in; duplicates dropped, order kept."""
    spec.validate()
    pmids: list[str] = []
    seen: set[str] = set()
    translation = ""
    total = 0
    page = 0
    while True:
        descriptor = build_search_request(spec, page, query_text=query_text)
        total, ids, page_translation = _parse_esearch(transport.get(descriptor), descriptor)
        if page == 0:
            translation = page_translation
        for pmid in ids:
            if pmid not in seen:
                seen.add(pmid)
                pmids.append(pmid)
        page += 1
        if page * spec.page_size >= total:
            break
    return SearchResult(total_count=total, pmids=pmids, query_translation=translation)


_MONTHS = {
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}


def _parse_pubdate(el) -> date:
    year = int(el.findtext("Year", default="1900"))
    month_text = el.findtext("Month", default="1").strip()
    if month_text.isdigit():
        month = int(month_text)
    else:
        month = _MONTHS.get(month_text[:3].lower(), 1)
    day = int(el.findtext("Day", default="1"))
    return date(year, month, day)


def _parse_article(article_el) -> RawRecord:
    pmid = article_el.findtext("MedlineCitation/PMID", default="").strip()
    art = article_el.find("MedlineCitation/Article")
    title = "" if art is None else (art.findtext("ArticleTitle", default="") or "")
    abstract_parts = []
    if art is not None:
        for abs_el in art.findall("Abstract/AbstractText"):
            text = "".join(abs_el.itertext())
            if text:
                abstract_parts.append(text)
    languages = tuple(
        el.text.strip() for el in ([] if art is None else art.findall("Language")) if el.text
    )
    pub_el = None if art is None else art.find("Journal/JournalIssue/PubDate")
    pub_date = _parse_pubdate(pub_el) if pub_el is not None else date(1900, 1, 1)
    authors = []
    if art is not None:
        for author in art.findall("AuthorList/Author"):
            collective = author.findtext("CollectiveName")
            if collective:
                authors.append(collective)
                continue
            last = author.findtext("LastName", default="")
            fore = author.findtext("ForeName", default="")
            name = f"{last}, {fore}" if fore else last
            if name:
                authors.append(name)
    keywords = tuple(
        kw.text.strip()
        for kw in article_el.findall("MedlineCitation/KeywordList/Keyword")
        if kw.text
    )
    return RawRecord(
        pmid=pmid,
        title=title.strip(),
        abstract=" ".join(abstract_parts).strip(),
        language_codes=languages,
        publication_date=pub_date,
        authors=tuple(authors),
        keywords=keywords,
    )


def fetch_records(
    pmids: list[str], transport, api_key: str | None = None
) -> tuple[list[RawRecord], list[str]]:
    """Fetch article records in input order; absent pmids are reported in
    the second return value rather than failing the batch."""
    if not pmids:
        raise InvalidSpec("fetch_records requires at least one pmid")
    by_pmid: dict[str, RawRecord] = {}
    for start in range(0, len(pmids), FETCH_BATCH):
        batch = pmids[start : start + FETCH_BATCH]
        descriptor = build_fetch_request(batch, api_key=api_key)
        body = transport.get(descriptor)
        try:
            root = ET.fromstring(body)
        except ET.ParseError as exc:
            raise ParseError(f"malformed efetch response for {descriptor.canonical()}: {exc}")
        for article_el in root.findall("PubmedArticle"):
            record = _parse_article(article_el)
            if record.pmid:
                by_pmid.setdefault(record.pmid, record)
    records = [by_pmid[p] for p in pmids if p in by_pmid]
    missing = [p for p in pmids if p not in by_pmid]
    return records, missing


def expected_request_count(total_count: int, page_size: int) -> int:
    return max(1, math.ceil(total_count / page_size))
