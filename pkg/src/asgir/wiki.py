"""Wikipedia page retrieval and HTML extraction for recognized species.

Live mode performs polite HTTP GETs (descriptive user agent, per-host
minimum interval, bounded retries, on-disk cache). Fixture mode reads
stored page HTML from a local directory and never touches the network,
which is also how the test suite runs. Extraction parses the rendered
page HTML with the stdlib tolerant parser: lead paragraph, habitat and
description sections, and infobox rows, all reduced to clean plain text.
"""

from __future__ import annotations

import html.parser
import os
import re
import threading
import time
import urllib.parse
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import PageNotFoundError, ParseError, StatusError, TransportError
from .labels import SpeciesLabel

WIKI_BASE_URL = "https://en.wikipedia.org/wiki/"
DEFAULT_USER_AGENT = "asgir-bird-info/0.1 (offline-capable research tool)"

_CITATION_RE = re.compile(r"\[\d+\]")
_STRAY_CITATION_RE = re.compile(r"\d+\]")
_WS_RE = re.compile(r"\s+")

_throttle_lock = threading.Lock()
_last_fetch_monotonic = 0.0
_sleep = time.sleep  # patchable in tests


@dataclass
class FetchPolicy:
    mode: str = "fixture"  # "live" or "fixture"
    fixtures_dir: str | Path = "fixtures"
    cache_dir: str | Path | None = None
    timeout_s: float = 10.0
    max_retries: int = 2
    min_interval_s: float = 1.0

    def __post_init__(self):
        if self.mode not in ("live", "fixture"):
            raise ValueError(f"unknown fetch mode {self.mode!r}")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


@dataclass
class SpeciesInfo:
    species: SpeciesLabel
    page_title: str
    summary: str
    habitat: str | None
    characteristics: str | None
    infobox: list[tuple[str, str]]
    source_url: str
    fetched_at: float

    def as_dict(self) -> dict:
        return {
            "species_name": self.species.name,
            "page_title": self.page_title,
            "summary": self.summary,
            "habitat": self.habitat,
            "characteristics": self.characteristics,
            "infobox": [{"key": k, "value": v} for k, v in self.infobox],
            "source_url": self.source_url,
            "fetched_at": self.fetched_at,
        }


def _clean(text: str) -> str:
    text = _CITATION_RE.sub("", text)
    text = text.replace("<", "").replace(">", "")
    text = _STRAY_CITATION_RE.sub("", text)
    return _WS_RE.sub(" ", text).strip()


def resolve_page(species_name: str, policy: FetchPolicy) -> str:
    """Map a hyphenated registry name to a Wikipedia page title.

    "Barn-Swallow" becomes "Barn swallow": hyphens to spaces, words after
    the first lowercased. Fixture mode requires the fixture file to exist.
    """
    if not species_name:
        raise PageNotFoundError("", "empty species name")
    title = _title_from_name(species_name)
    if policy.mode == "fixture" and not _fixture_path(title, policy).exists():
        raise PageNotFoundError(title)
    return title


def _title_from_name(species_name: str) -> str:
    parts = species_name.split("-")
    return " ".join([parts[0]] + [p.lower() for p in parts[1:]])


def page_url(title: str) -> str:
    return WIKI_BASE_URL + urllib.parse.quote(title.replace(" ", "_"))


def _safe_filename(title: str) -> str:
    return title.replace("/", "_") + ".html"


def _fixture_path(title: str, policy: FetchPolicy) -> Path:
    return Path(policy.fixtures_dir) / _safe_filename(title)


def _respect_min_interval(policy: FetchPolicy) -> None:
    global _last_fetch_monotonic
    with _throttle_lock:
        now = time.monotonic()
        wait = policy.min_interval_s - (now - _last_fetch_monotonic)
        if wait > 0:
            _sleep(wait)
        _last_fetch_monotonic = time.monotonic()


def fetch_html(title: str, policy: FetchPolicy, http_get=None) -> bytes:
    """Fetch raw page HTML per the policy; returns the page bytes.

    Fixture mode reads fixtures/<title>.html; live mode GETs the page with
    timeout and retry handling, throttled to one request per
    min_interval_s across threads. A cache hit short-circuits the network
    entirely.
    """
    if policy.mode == "fixture":
        path = _fixture_path(title, policy)
        if not path.exists():
            raise PageNotFoundError(title, f"no fixture for {title!r} at {path}")
        return path.read_bytes()

    cache_path = None
    if policy.cache_dir is not None:
        cache_path = Path(policy.cache_dir) / _safe_filename(title)
        if cache_path.exists():
            return cache_path.read_bytes()

    if http_get is None:
        http_get = requests.get
    headers = {"User-Agent": os.environ.get("ASGIR_USER_AGENT", DEFAULT_USER_AGENT)}
    url = page_url(title)
    last_error: Exception | None = None
    for _ in range(policy.max_retries + 1):
        _respect_min_interval(policy)
        try:
            response = http_get(url, headers=headers, timeout=policy.timeout_s)
        except requests.RequestException as exc:
            last_error = exc
            continue
        if response.status_code >= 400:
            raise StatusError(response.status_code, title)
        body = response.content
        if cache_path is not None:
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            cache_path.write_bytes(body)
        return body
    raise TransportError(f"fetching {title!r} failed after retries: {last_error}")


class _PageExtractor(html.parser.HTMLParser):
    """Streaming extraction of lead/section paragraphs and infobox rows.

    Sections begin at h2; the page-title h1 does not end the lead.
    """

    _HEADINGS = {"h2", "h3", "h4", "h5", "h6"}
    _SKIP = {"script", "style"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.lead_paragraphs: list[str] = []
        self.sections: list[tuple[str, str]] = []  # (heading lower, paragraph)
        self.infobox: list[tuple[str, str]] = []
        self._skip_depth = 0
        self._heading_buf: list[str] | None = None
        self._seen_heading = False
        self._section = ""
        self._para_buf: list[str] | None = None
        self._table_depth = 0
        self._infobox_depth = 0
        self._cell_buf: list[str] | None = None
        self._row_cells: list[tuple[str, str]] = []  # (tag, text)

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1
            return
        if tag == "table":
            self._table_depth += 1
            classes = dict(attrs).get("class") or ""
            if self._infobox_depth == 0 and "infobox" in classes:
                self._infobox_depth = self._table_depth
            return
        if self._infobox_depth:
            if tag == "tr":
                self._row_cells = []
            elif tag in ("th", "td"):
                self._cell_buf = [tag]
            return
        if tag in self._HEADINGS:
            self._heading_buf = []
        elif tag == "p" and self._table_depth == 0:
            self._para_buf = []

    def handle_endtag(self, tag):
        if tag in self._SKIP:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if tag == "table":
            if self._infobox_depth == self._table_depth:
                self._infobox_depth = 0
            self._table_depth = max(0, self._table_depth - 1)
            return
        if self._infobox_depth:
            if tag in ("th", "td") and self._cell_buf is not None:
                kind = self._cell_buf[0]
                text = _clean("".join(self._cell_buf[1:]))
                self._row_cells.append((kind, text))
                self._cell_buf = None
            elif tag == "tr":
                self._finish_infobox_row()
            return
        if tag in self._HEADINGS and self._heading_buf is not None:
            self._section = _clean("".join(self._heading_buf)).lower()
            self._seen_heading = True
            self._heading_buf = None
        elif tag == "p" and self._para_buf is not None:
            text = _clean("".join(self._para_buf))
            self._para_buf = None
            if not text:
                return
            if not self._seen_heading:
                self.lead_paragraphs.append(text)
            else:
                self.sections.append((self._section, text))

    def _finish_infobox_row(self):
        labels = [t for k, t in self._row_cells if k == "th" and t]
        values = [t for k, t in self._row_cells if k == "td" and t]
        if labels and values:
            self.infobox.append((labels[0], values[0]))
        self._row_cells = []

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._cell_buf is not None:
            self._cell_buf.append(data)
        elif self._heading_buf is not None:
            self._heading_buf.append(data)
        elif self._para_buf is not None:
            self._para_buf.append(data)


def parse_species_page(page_html: bytes, species: SpeciesLabel) -> SpeciesInfo:
    """Extract structured plain text from rendered page HTML.

    Summary is the first non-empty paragraph before the first heading
    (falling back to the first non-empty paragraph anywhere); habitat and
    characteristics concatenate the paragraphs under headings containing
    "habitat" and "description". Raises ParseError when the document has
    no usable paragraph at all.
    """
    extractor = _PageExtractor()
    try:
        extractor.feed(page_html.decode("utf-8", errors="replace"))
        extractor.close()
    except Exception as exc:  # the parser must be total over arbitrary bytes
        raise ParseError(f"unparseable document: {exc}") from exc

    summary = next(iter(extractor.lead_paragraphs), None)
    if summary is None:
        summary = next((text for _, text in extractor.sections), None)
    if summary is None:
        raise ParseError("document contains no content paragraphs")

    def section_text(keyword: str) -> str | None:
        parts = [text for heading, text in extractor.sections if keyword in heading]
        return "\n\n".join(parts) if parts else None

    title = _title_from_name(species.name)
    return SpeciesInfo(
        species=species,
        page_title=title,
        summary=summary,
        habitat=section_text("habitat"),
        characteristics=section_text("description"),
        infobox=extractor.infobox,
        source_url=page_url(title),
        fetched_at=time.time(),
    )


def get_species_info(species: SpeciesLabel, policy: FetchPolicy, http_get=None) -> SpeciesInfo:
    """resolve + fetch + parse in one step."""
    title = resolve_page(species.name, policy)
    body = fetch_html(title, policy, http_get=http_get)
    info = parse_species_page(body, species)
    info.page_title = title
    info.source_url = page_url(title)
    return info
