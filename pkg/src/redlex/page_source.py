"""Encyclopedia page retrieval with an on-disk cache.

Backends are pluggable: an HTTP backend speaking the MediaWiki query API and a
fixture backend reading title-named text files from a directory (used by the
offline pipeline and the tests). Fetched pages are cached as JSON files keyed
by normalized title; cache writes are atomic so concurrent fetchers never see
partial files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import BackendUnavailable, PageNotFound

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SourcePage:
    title: str
    page_id: str
    body: str
    retrieved_for: str = ""
    fetch_time: float = 0.0

    def __post_init__(self):
        if not self.title:
            raise ValueError("page title must be non-empty")

    @property
    def is_stub_page(self) -> bool:
        """Pages that exist but carry no prose (redirect shells, empty fixtures)."""
        return not self.body


def first_n_words(page: SourcePage, n: int) -> str:
    """First n whitespace-delimited words of the body, joined by single spaces."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return " ".join(page.body.split()[:n])


class PageBackend(ABC):
    @abstractmethod
    def search(self, term: str, limit: int) -> list[str]:
        """Ranked page titles for a search term; empty list when nothing matches."""

    @abstractmethod
    def fetch_page(self, title: str) -> tuple[str, str, str]:
        """(canonical title, page id, plain-text body) for an exact title."""


class FixtureBackend(PageBackend):
    """Reads a directory of `<title>.txt` files.

    An optional index.json maps lowercased search terms to title lists; without
    it, search falls back to a case-insensitive substring scan over filenames.
    """

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)
        self._index: dict[str, list[str]] = {}
        index_path = self.directory / "index.json"
        if index_path.exists():
            with open(index_path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
            self._index = {k.lower(): list(v) for k, v in raw.items()}

    def search(self, term: str, limit: int) -> list[str]:
        if self._index:
            return self._index.get(term.lower(), [])[:limit]
        needle = term.lower()
        titles = sorted(p.stem for p in self.directory.glob("*.txt"))
        return [t for t in titles if needle in t.lower()][:limit]

    def fetch_page(self, title: str) -> tuple[str, str, str]:
        path = self.directory / f"{title}.txt"
        if not path.exists():
            raise PageNotFound(title)
        body = path.read_text(encoding="utf-8")
        return title, f"fixture:{title}", body


class HttpWikiBackend(PageBackend):
    """MediaWiki query API client (search + plain-text extracts)."""

    def __init__(self, api_url: str, timeout: float = 30.0,
                 user_agent: str = "redlex/0.1"):
        self.api_url = api_url
        self.timeout = timeout
        self.headers = {"User-Agent": user_agent}

    def _get(self, params: dict) -> dict:
        params = dict(params, format="json")
        try:
            resp = requests.get(self.api_url, params=params, headers=self.headers,
                                timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise BackendUnavailable(f"{self.api_url}: {exc}") from exc

    def search(self, term: str, limit: int) -> list[str]:
        data = self._get({
            "action": "query",
            "list": "search",
            "srsearch": term,
            "srlimit": min(limit, 500),
        })
        hits = data.get("query", {}).get("search", [])
        return [h["title"] for h in hits][:limit]

    def fetch_page(self, title: str) -> tuple[str, str, str]:
        data = self._get({
            "action": "query",
            "prop": "extracts",
            "explaintext": 1,
            "redirects": 1,
            "titles": title,
        })
        pages = data.get("query", {}).get("pages", {})
        for page_id, page in pages.items():
            if page_id == "-1" or "missing" in page:
                raise PageNotFound(title)
            return page.get("title", title), str(page_id), page.get("extract", "")
        raise PageNotFound(title)


def _normalize_title(title: str) -> str:
    return " ".join(title.split()).lower()


class PageStore:
    """Backend facade with a never-evicting on-disk page cache."""

    def __init__(self, backend: PageBackend, cache_dir: str | os.PathLike):
        self.backend = backend
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def search(self, seed_term: str, limit: int) -> list[str]:
        """De-duplicated titles in backend ranking order."""
        if limit < 1:
            raise ValueError("limit must be >= 1")
        titles = self.backend.search(seed_term, limit)
        seen: set[str] = set()
        unique = []
        for title in titles:
            if title not in seen:
                seen.add(title)
                unique.append(title)
        return unique[:limit]

    def _cache_path(self, title: str) -> Path:
        key = hashlib.sha256(_normalize_title(title).encode("utf-8")).hexdigest()
        return self.cache_dir / f"{key[:32]}.json"

    def fetch(self, title: str, retrieved_for: str = "") -> SourcePage:
        """Fetch a page, consulting the cache first and filling it on miss."""
        if not title:
            raise ValueError("title must be non-empty")
        path = self._cache_path(title)
        if path.exists():
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            return SourcePage(**data)
        canonical, page_id, body = self.backend.fetch_page(title)
        page = SourcePage(
            title=canonical,
            page_id=page_id,
            body=body,
            retrieved_for=retrieved_for,
            fetch_time=time.time(),
        )
        tmp = path.with_name(path.name + f".tmp.{os.getpid()}")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(page.__dict__, fh, ensure_ascii=False)
        os.replace(tmp, path)
        return page
