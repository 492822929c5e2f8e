"""Five-stage keyword extraction pipeline.

Stages: page search/fetch -> relevance filter -> chunking -> per-chunk keyword
extraction with importance scores -> corpus aggregation (mean within a page,
sum across pages) -> containment filter -> generic-keyword filter. Each stage
persists its output under a run directory so an interrupted run resumes
without re-paying completion calls.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import llm_gateway
from .defaults import (
    MAX_CHUNK_TOKENS,
    PAGE_FILTER_WORDS,
    PER_SEED_SEARCH_LIMIT,
    TOP_N_KEYWORDS,
)
from .errors import EmptyResult, LexiconEmpty, PipelineStageError, UnparseableVerdict
from .llm_gateway import CompletionProvider, CompletionRequest, TemplateId
from .matching import tokenize
from .page_source import PageStore, SourcePage, first_n_words

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TextChunk:
    page_title: str
    index: int
    text: str
    token_count: int


@dataclass(frozen=True)
class PageKeyword:
    keyword: str
    page_title: str
    importance: float
    chunk_hits: int


@dataclass(frozen=True)
class CorpusKeyword:
    keyword: str
    importance: float
    pages: tuple[str, ...]


@dataclass
class KeywordLexicon:
    topic: str
    entries: list[CorpusKeyword]
    config_snapshot: dict = field(default_factory=dict)

    @property
    def keywords(self) -> list[str]:
        return [e.keyword for e in self.entries]

    def to_json(self) -> str:
        """The lexicon file format: a JSON array of {keyword, importance, pages}."""
        rows = [
            {"keyword": e.keyword, "importance": e.importance, "pages": list(e.pages)}
            for e in self.entries
        ]
        return json.dumps(rows, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_file(cls, path: str | os.PathLike, topic: str = "") -> "KeywordLexicon":
        rows = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = [
            CorpusKeyword(r["keyword"], float(r["importance"]), tuple(r.get("pages", ())))
            for r in rows
        ]
        return cls(topic=topic, entries=entries)


@dataclass
class PipelineCounters:
    """Per-run accounting surfaced in run metadata."""

    pages_searched: int = 0
    pages_fetched: int = 0
    pages_kept: int = 0
    unparseable_verdicts: int = 0
    chunks_extracted: int = 0
    empty_chunks: int = 0
    parse_skips: int = 0
    keywords_ranked: int = 0
    keywords_after_containment: int = 0
    keywords_final: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def filter_pages(pages: Sequence[SourcePage], topic: str,
                 provider: CompletionProvider, *, jobs: int = 1,
                 filter_words: int = PAGE_FILTER_WORDS,
                 counters: PipelineCounters | None = None,
                 **complete_kwargs) -> list[SourcePage]:
    """Keep pages whose title + leading words the provider judges on-topic.

    An unparseable verdict counts as NO and is logged, not raised.
    """
    counters = counters if counters is not None else PipelineCounters()

    def _verdict(page: SourcePage) -> bool:
        request = CompletionRequest(TemplateId.PAGE_FILTER, {
            "page_name": page.title,
            "topic": topic,
            "first_100_words": first_n_words(page, filter_words),
        })
        text = llm_gateway.complete(request, provider, **complete_kwargs)
        try:
            return llm_gateway.parse_yes_no(text)
        except UnparseableVerdict:
            counters.unparseable_verdicts += 1
            logger.warning("unparseable filter verdict for %r: %r",
                           page.title, text[:80])
            return False

    verdicts = _ordered_map(_verdict, pages, jobs)
    kept = [p for p, keep in zip(pages, verdicts) if keep]
    counters.pages_kept += len(kept)
    return kept


_PARAGRAPH_SPLIT_RE = re.compile(r"(?<=\n\n)")
_TOKEN_SPAN_RE = re.compile(r"\S+")


def split_page(page: SourcePage, max_chunk_tokens: int = MAX_CHUNK_TOKENS) -> list[TextChunk]:
    """Greedy paragraph packing under a whitespace-token budget.

    Paragraphs that alone exceed the budget are hard-split at token
    boundaries. Chunks concatenate back to the page body byte-for-byte.
    """
    if max_chunk_tokens < 1:
        raise ValueError("max_chunk_tokens must be >= 1")
    if not page.body:
        return []
    pieces: list[str] = []
    for segment in _PARAGRAPH_SPLIT_RE.split(page.body):
        if not segment:
            continue
        if len(_TOKEN_SPAN_RE.findall(segment)) <= max_chunk_tokens:
            pieces.append(segment)
        else:
            pieces.extend(_hard_split(segment, max_chunk_tokens))

    chunks: list[TextChunk] = []
    current: list[str] = []
    current_tokens = 0

    def _flush():
        nonlocal current, current_tokens
        if current:
            text = "".join(current)
            chunks.append(TextChunk(page.title, len(chunks), text, current_tokens))
            current = []
            current_tokens = 0

    for piece in pieces:
        n = len(_TOKEN_SPAN_RE.findall(piece))
        if current and current_tokens + n > max_chunk_tokens:
            _flush()
        current.append(piece)
        current_tokens += n
    _flush()
    return chunks


def _hard_split(text: str, max_tokens: int) -> list[str]:
    spans = [m.span() for m in _TOKEN_SPAN_RE.finditer(text)]
    parts = []
    start = 0
    for i in range(max_tokens, len(spans), max_tokens):
        cut = spans[i][0]
        parts.append(text[start:cut])
        start = cut
    parts.append(text[start:])
    return parts


def merge_chunk_keywords(page_title: str,
                         chunk_lists: Sequence[llm_gateway.ScoredKeywordList],
                         ) -> list[PageKeyword]:
    """Merge chunk-level scores into page keywords.

    Keywords are identified case-insensitively; the importance of a page
    keyword is the arithmetic mean of all its chunk-level scores, and the
    surface form of the first occurrence is kept for display.
    """
    scores: dict[str, list[float]] = {}
    hits: dict[str, set[int]] = {}
    surface: dict[str, str] = {}
    for idx, scored in enumerate(chunk_lists):
        for keyword, score in scored.entries:
            key = keyword.lower()
            if key not in surface:
                surface[key] = keyword
                scores[key] = []
                hits[key] = set()
            scores[key].append(score)
            hits[key].add(idx)
    merged = []
    for key in surface:
        vals = scores[key]
        merged.append(PageKeyword(
            keyword=surface[key],
            page_title=page_title,
            importance=math.fsum(vals) / len(vals),
            chunk_hits=len(hits[key]),
        ))
    return merged


def extract_page_keywords(page_chunks: Sequence[TextChunk], topic: str,
                          provider: CompletionProvider, *, jobs: int = 1,
                          counters: PipelineCounters | None = None,
                          **complete_kwargs) -> list[PageKeyword]:
    """Run keyword extraction over one page's chunks and merge the results.

    A page whose every chunk parses empty yields an empty list (logged), not
    an error.
    """
    if not page_chunks:
        return []
    counters = counters if counters is not None else PipelineCounters()
    page_title = page_chunks[0].page_title

    def _extract(chunk: TextChunk) -> llm_gateway.ScoredKeywordList | None:
        request = CompletionRequest(TemplateId.KEYWORD_EXTRACT, {
            "topic": topic,
            "text": chunk.text,
        })
        text = llm_gateway.complete(request, provider, **complete_kwargs)
        try:
            return llm_gateway.parse_scored_keywords(text)
        except EmptyResult:
            return None

    results = _ordered_map(_extract, page_chunks, jobs)
    chunk_lists = []
    for scored in results:
        counters.chunks_extracted += 1
        if scored is None:
            counters.empty_chunks += 1
        else:
            counters.parse_skips += scored.parse_skips
            chunk_lists.append(scored)
    if not chunk_lists:
        logger.warning("page %r yielded no keywords from %d chunks",
                       page_title, len(page_chunks))
        return []
    return merge_chunk_keywords(page_title, chunk_lists)


def aggregate_corpus(page_keywords: Iterable[PageKeyword],
                     top_n: int = TOP_N_KEYWORDS) -> list[CorpusKeyword]:
    """Sum page-level importances per keyword and keep the top_n.

    Keywords merge case-insensitively. Ranking is by importance descending
    with lexicographic tie-breaking; the result is invariant under input
    permutation because inputs are canonically ordered first.
    """
    ordered = sorted(page_keywords, key=lambda pk: (pk.page_title, pk.keyword.lower()))
    values: dict[str, list[float]] = {}
    pages: dict[str, set[str]] = {}
    surface: dict[str, str] = {}
    for pk in ordered:
        key = pk.keyword.lower()
        if key not in surface:
            surface[key] = pk.keyword
            values[key] = []
            pages[key] = set()
        values[key].append(pk.importance)
        pages[key].add(pk.page_title)
    # fsum is exactly rounded, so the total is independent of input order
    entries = [
        CorpusKeyword(surface[key], math.fsum(values[key]), tuple(sorted(pages[key])))
        for key in surface
    ]
    entries.sort(key=lambda e: (-e.importance, e.keyword.lower(), e.keyword))
    return entries[:top_n]


def containment_filter(keywords: Sequence[str]) -> list[str]:
    """Drop any keyword whose tokens contain another keyword's tokens.

    If A's token sequence occurs contiguously inside B's, B (the longer one)
    is removed. Token comparison is case-insensitive and punctuation-blind,
    so "Hamas" removes "2023 Israel-Hamas war". Keywords with identical token
    sequences keep only their first occurrence, and keywords that normalize
    to zero tokens are dropped. The result is containment-free (fixpoint).
    """
    toks: list[tuple[str, ...]] = []
    order: list[str] = []
    seen: set[tuple[str, ...]] = set()
    for kw in keywords:
        t = tuple(tokenize(kw))
        if not t or t in seen:
            continue
        seen.add(t)
        toks.append(t)
        order.append(kw)

    def _contains(inner: tuple[str, ...], outer: tuple[str, ...]) -> bool:
        if len(inner) >= len(outer):
            return False
        return any(outer[i:i + len(inner)] == inner
                   for i in range(len(outer) - len(inner) + 1))

    survivors = []
    for i, kw in enumerate(order):
        if not any(_contains(toks[j], toks[i]) for j in range(len(toks)) if j != i):
            survivors.append(kw)
    return survivors


def generic_filter(entries: Sequence[CorpusKeyword], topic: str,
                   provider: CompletionProvider, *,
                   counters: PipelineCounters | None = None,
                   **complete_kwargs) -> list[CorpusKeyword]:
    """Ask the provider to drop overly generic keywords.

    Survivors keep their original importance and rank order. An empty reply
    is a pipeline failure (LexiconEmpty).
    """
    if not entries:
        raise LexiconEmpty("no keywords to filter")
    request = CompletionRequest(TemplateId.KEYWORD_FILTER, {
        "keyword_list": ", ".join(e.keyword for e in entries),
    })
    text = llm_gateway.complete(request, provider, **complete_kwargs)
    try:
        kept_list = llm_gateway.parse_keyword_list(text)
    except EmptyResult as exc:
        raise LexiconEmpty("generic-keyword filter returned an empty list") from exc
    kept = {k.lower() for k in kept_list}
    survivors = [e for e in entries if e.keyword.lower() in kept]
    if not survivors:
        raise LexiconEmpty("no ranked keyword survived the generic filter")
    if counters is not None:
        counters.keywords_final = len(survivors)
    return survivors


def _ordered_map(fn, items: Sequence, jobs: int) -> list:
    """Map preserving input order; thread pool when jobs > 1.

    Results are reduced in input order, so output does not depend on
    completion order.
    """
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _config_fingerprint(snapshot: Mapping) -> str:
    blob = json.dumps(snapshot, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


class _StageStore:
    """JSON persistence for resumable stages, invalidated on config change."""

    def __init__(self, run_dir: str | os.PathLike | None, fingerprint: str):
        self.run_dir = Path(run_dir) if run_dir else None
        self.fingerprint = fingerprint
        if self.run_dir:
            self.run_dir.mkdir(parents=True, exist_ok=True)

    def load(self, stage: str):
        if not self.run_dir:
            return None
        path = self.run_dir / f"{stage}.json"
        if not path.exists():
            return None
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("config_fingerprint") != self.fingerprint:
            logger.info("stage %s persisted under a different config; recomputing", stage)
            return None
        return payload["data"]

    def save(self, stage: str, data) -> None:
        if not self.run_dir:
            return
        path = self.run_dir / f"{stage}.json"
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({"config_fingerprint": self.fingerprint, "data": data},
                      fh, ensure_ascii=False)
        os.replace(tmp, path)


def run_pipeline(seed_terms: Sequence[str], topic: str, *,
                 provider: CompletionProvider, page_store: PageStore,
                 per_seed_search_limit: int = PER_SEED_SEARCH_LIMIT,
                 max_chunk_tokens: int = MAX_CHUNK_TOKENS,
                 top_n: int = TOP_N_KEYWORDS,
                 page_filter_words: int = PAGE_FILTER_WORDS,
                 jobs: int = 1,
                 run_dir: str | os.PathLike | None = None,
                 config_snapshot: Mapping | None = None,
                 **complete_kwargs) -> tuple[KeywordLexicon, dict]:
    """Compose the full extraction pipeline; returns (lexicon, run metadata).

    Stage outputs persist under run_dir (when given) keyed by a config
    fingerprint, so re-running after an interruption skips completed stages.
    """
    snapshot = dict(config_snapshot or {})
    snapshot.setdefault("topic", topic)
    snapshot.setdefault("seed_terms", list(seed_terms))
    snapshot.setdefault("per_seed_search_limit", per_seed_search_limit)
    snapshot.setdefault("max_chunk_tokens", max_chunk_tokens)
    snapshot.setdefault("top_n", top_n)
    snapshot.setdefault("page_filter_words", page_filter_words)
    store = _StageStore(run_dir, _config_fingerprint(snapshot))
    counters = PipelineCounters()

    def _stage(name: str, fn):
        try:
            return fn()
        except Exception as exc:
            if isinstance(exc, PipelineStageError):
                raise
            raise PipelineStageError(name, exc) from exc

    # 1. search
    def _search():
        cached = store.load("01_search")
        if cached is not None:
            return cached
        per_seed = {}
        ordered: list[str] = []
        seen: set[str] = set()
        for seed in seed_terms:
            titles = page_store.search(seed, per_seed_search_limit)
            per_seed[seed] = titles
            for t in titles:
                if t not in seen:
                    seen.add(t)
                    ordered.append(t)
        data = {"per_seed": per_seed, "titles": ordered}
        store.save("01_search", data)
        return data

    search_data = _stage("search", _search)
    titles = search_data["titles"]
    retrieved_for = {}
    for seed in seed_terms:
        for t in search_data["per_seed"].get(seed, ()):
            retrieved_for.setdefault(t, seed)
    counters.pages_searched = len(titles)

    # 2. fetch (pages land in the page store's disk cache)
    def _fetch():
        pages = [page_store.fetch(t, retrieved_for=retrieved_for.get(t, ""))
                 for t in titles]
        store.save("02_fetch", [p.title for p in pages])
        return pages

    pages = _stage("fetch", _fetch)
    counters.pages_fetched = len(pages)

    # 3. relevance filter
    def _filter():
        cached = store.load("03_filter")
        if cached is not None:
            kept_titles = set(cached)
            kept_pages = [p for p in pages if p.title in kept_titles]
            counters.pages_kept = len(kept_pages)
            return kept_pages
        kept_pages = filter_pages(pages, topic, provider, jobs=jobs,
                                  filter_words=page_filter_words,
                                  counters=counters, **complete_kwargs)
        store.save("03_filter", [p.title for p in kept_pages])
        return kept_pages

    kept_pages = _stage("filter_pages", _filter)

    # 4. chunk + extract
    def _extract():
        cached = store.load("04_page_keywords")
        if cached is not None:
            return [PageKeyword(**row) for row in cached]
        collected: list[PageKeyword] = []
        for page in kept_pages:
            chunks = split_page(page, max_chunk_tokens)
            collected.extend(extract_page_keywords(
                chunks, topic, provider, jobs=jobs, counters=counters,
                **complete_kwargs))
        store.save("04_page_keywords", [pk.__dict__ for pk in collected])
        return collected

    page_keywords = _stage("extract_keywords", _extract)

    # 5. aggregate, containment-filter, generic-filter
    def _finalize():
        ranked = aggregate_corpus(page_keywords, top_n)
        counters.keywords_ranked = len(ranked)
        surviving = set(k.lower() for k in containment_filter(
            [e.keyword for e in ranked]))
        contained = [e for e in ranked if e.keyword.lower() in surviving]
        counters.keywords_after_containment = len(contained)
        final = generic_filter(contained, topic, provider, counters=counters,
                               **complete_kwargs)
        return final

    entries = _stage("rank_and_filter", _finalize)
    lexicon = KeywordLexicon(topic=topic, entries=entries, config_snapshot=snapshot)

    metadata = {
        "topic": topic,
        "seed_terms": list(seed_terms),
        "provider": provider.name(),
        "counters": counters.as_dict(),
        "config": snapshot,
    }
    if run_dir:
        lexicon.save(Path(run_dir) / "lexicon.json")
        meta_path = Path(run_dir) / "run_metadata.json"
        meta_path.write_text(
            json.dumps(metadata, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8")
    return lexicon, metadata
