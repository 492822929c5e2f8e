"""Text-completion gateway: prompt templates, providers, response parsers.

Prompts use [name] placeholders. The provider behind `complete` is pluggable;
the shipped StubProvider answers deterministically from the rendered prompt so
every pipeline stage can run and be golden-tested offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

import requests

from .defaults import SCORE_MAX, SCORE_MIN, MAX_KEYWORD_TOKENS
from .errors import (
    EmptyResult,
    MissingVariable,
    ProviderTransientError,
    ProviderUnavailable,
    ResponseTooLong,
    UnparseableVerdict,
)

logger = logging.getLogger(__name__)


class TemplateId(str, Enum):
    PAGE_FILTER = "page_filter"
    KEYWORD_EXTRACT = "keyword_extract"
    KEYWORD_FILTER = "keyword_filter"


@dataclass(frozen=True)
class PromptTemplate:
    template_id: TemplateId
    body: str
    placeholders: tuple[str, ...]


_PAGE_FILTER_BODY = (
    "Evaluate the content of the Wikipedia page titled [page_name] to determine "
    "if it is related to [topic]. Consider the page name and the first 100 words "
    "of the content. Output only YES if the content is related to the war; "
    "otherwise, output NO.\n"
    "First 100 words: [first_100_words]"
)

_KEYWORD_EXTRACT_BODY = (
    "Please analyze the provided text chunk from the Wikipedia page about "
    "[topic]. Your task is to extract keywords that are directly related to this "
    "topic. Each keyword should be no longer than three tokens. After "
    "identifying these keywords, evaluate their importance for the purpose of "
    "social media message filtration. Rate each keyword's importance on a scale "
    "from 0 to 5, where 0 means the keyword is least important and 5 means it is "
    "extremely important for filtering messages. Present the output as a list of "
    "keyword-importance pairs, separated by commas. Format each pair with the "
    "keyword followed by a colon and its importance rating. For example, "
    "\"keyword1: 4, keyword2: 2\". The output should be a continuous string text "
    "without any line breaks or bullet points.\n"
    "Text: [text]"
)

_KEYWORD_FILTER_BODY = (
    "Please filter the provided list of keywords based on the following criteria:\n"
    "1. Exclude any keywords that are names of countries or presidents.\n"
    "2. Exclude any keywords that are names of news organizations or social media "
    "platforms, such as \"TikTok\" or \"BBC\".\n"
    "3. In the list, if a keyword contains another keyword, remove the longer "
    "keyword. For example, if the list includes both \"2023 Israel-Hamas war\" and "
    "\"Hamas\", remove \"2023 Israel-Hamas war\".\n"
    "Your task is to process the list and return a filtered set of keywords that "
    "meet these criteria. Please present the filtered keywords in a list format.\n"
    "Keyword list: [keyword_list]"
)

TEMPLATES: dict[TemplateId, PromptTemplate] = {
    TemplateId.PAGE_FILTER: PromptTemplate(
        TemplateId.PAGE_FILTER,
        _PAGE_FILTER_BODY,
        ("page_name", "topic", "first_100_words"),
    ),
    TemplateId.KEYWORD_EXTRACT: PromptTemplate(
        TemplateId.KEYWORD_EXTRACT,
        _KEYWORD_EXTRACT_BODY,
        ("topic", "text"),
    ),
    TemplateId.KEYWORD_FILTER: PromptTemplate(
        TemplateId.KEYWORD_FILTER,
        _KEYWORD_FILTER_BODY,
        ("keyword_list",),
    ),
}

_PLACEHOLDER_RE = re.compile(r"\[([a-z0-9_]+)\]")


def render(template_id: TemplateId | str, variables: Mapping[str, str]) -> str:
    """Substitute placeholders into the template body.

    Raises MissingVariable if any placeholder is unbound. Extra variables are
    ignored here; CompletionRequest enforces exact coverage.
    """
    template = TEMPLATES[TemplateId(template_id)]
    for name in template.placeholders:
        if name not in variables:
            raise MissingVariable(name)

    def _sub(m: re.Match) -> str:
        name = m.group(1)
        if name in template.placeholders:
            return str(variables[name])
        return m.group(0)

    return _PLACEHOLDER_RE.sub(_sub, template.body)


def prompt_fingerprint(prompt: str) -> str:
    """Stable key for a rendered prompt, used by fixture response maps."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionRequest:
    template_id: TemplateId
    variables: Mapping[str, str]
    max_response_tokens: int = 800

    def __post_init__(self):
        if self.max_response_tokens <= 0:
            raise ValueError("max_response_tokens must be positive")
        expected = set(TEMPLATES[TemplateId(self.template_id)].placeholders)
        got = set(self.variables)
        missing = expected - got
        if missing:
            raise MissingVariable(sorted(missing)[0])
        extra = got - expected
        if extra:
            raise ValueError(f"unexpected template variables: {sorted(extra)}")


@dataclass(frozen=True)
class ProviderReply:
    text: str
    truncated: bool = False


class CompletionProvider(ABC):
    """A text-completion backend. Implementations must be thread-safe."""

    @abstractmethod
    def complete(self, prompt: str, max_response_tokens: int) -> ProviderReply:
        ...

    @abstractmethod
    def name(self) -> str:
        ...


class StubProvider(CompletionProvider):
    """Deterministic offline provider.

    Responses are pure functions of the rendered prompt. A fixture map
    (prompt fingerprint -> response text) takes precedence; otherwise the
    prompt kind is recognized by its leading words and a synthetic but
    parseable response is derived from the prompt content:

    - page filter prompts -> "YES"
    - keyword extraction prompts -> keywords sampled from the chunk text with
      hash-derived scores in 0..5
    - keyword filter prompts -> the input list echoed back unchanged
    - anything else -> a hash tag of the prompt
    """

    def __init__(self, fixtures: Mapping[str, str] | None = None,
                 max_keywords: int = 8):
        self.fixtures = dict(fixtures or {})
        self.max_keywords = max_keywords

    @classmethod
    def from_fixture_file(cls, path: str | os.PathLike) -> "StubProvider":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(fixtures=json.load(fh))

    def name(self) -> str:
        return "stub"

    def complete(self, prompt: str, max_response_tokens: int) -> ProviderReply:
        canned = self.fixtures.get(prompt_fingerprint(prompt))
        if canned is not None:
            return ProviderReply(canned)
        return ProviderReply(self._synthesize(prompt))

    def _synthesize(self, prompt: str) -> str:
        if prompt.startswith("Evaluate the content of the Wikipedia page titled"):
            return "YES"
        if prompt.startswith("Please analyze the provided text chunk"):
            text = prompt.split("\nText: ", 1)[-1]
            return self._synthesize_keywords(text)
        if prompt.startswith("Please filter the provided list of keywords"):
            return prompt.split("Keyword list: ", 1)[-1]
        return f"stub-response-{prompt_fingerprint(prompt)[:16]}"

    def _synthesize_keywords(self, text: str) -> str:
        chunk_tag = hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
        words = []
        seen = set()
        for word in re.findall(r"[A-Za-z]{4,}", text):
            low = word.lower()
            if low not in seen:
                seen.add(low)
                words.append(word)
            if len(words) >= self.max_keywords:
                break
        if not words:
            return "content: 1"
        pairs = []
        for word in words:
            h = hashlib.sha256(f"{word.lower()}\x00{chunk_tag}".encode()).hexdigest()
            pairs.append(f"{word}: {int(h[:8], 16) % 6}")
        return ", ".join(pairs)


class HttpProvider(CompletionProvider):
    """Chat-completions HTTP backend (endpoint, model and key configurable)."""

    def __init__(self, endpoint: str, model: str, api_key: str = "",
                 temperature: float = 0.0, timeout: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.temperature = temperature
        self.timeout = timeout

    def name(self) -> str:
        return f"http:{self.model}"

    def complete(self, prompt: str, max_response_tokens: int) -> ProviderReply:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": max_response_tokens,
            "temperature": self.temperature,
        }
        try:
            resp = requests.post(self.endpoint, json=payload, headers=headers,
                                 timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderTransientError(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise ProviderTransientError(f"HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise ProviderUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            choice = body["choices"][0]
            text = choice["message"]["content"]
            truncated = choice.get("finish_reason") == "length"
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderUnavailable(f"malformed provider response: {exc}") from exc
        return ProviderReply(text, truncated=truncated)


def complete(request: CompletionRequest, provider: CompletionProvider, *,
             max_attempts: int = 3, backoff_base: float = 0.5,
             sleep: Callable[[float], None] = time.sleep) -> str:
    """Render the request, call the provider, retry transient failures.

    Backoff doubles per attempt. Raises ProviderUnavailable once the retry
    budget is exhausted and ResponseTooLong when the reply was truncated.
    """
    prompt = render(request.template_id, request.variables)
    last: Exception | None = None
    for attempt in range(max_attempts):
        try:
            reply = provider.complete(prompt, request.max_response_tokens)
            break
        except ProviderTransientError as exc:
            last = exc
            logger.warning("provider %s transient failure (attempt %d/%d): %s",
                           provider.name(), attempt + 1, max_attempts, exc)
            if attempt + 1 < max_attempts:
                sleep(backoff_base * (2 ** attempt))
    else:
        raise ProviderUnavailable(
            f"provider {provider.name()} failed after {max_attempts} attempts: {last}"
        ) from last
    if reply.truncated:
        raise ResponseTooLong(
            f"response truncated at {request.max_response_tokens} tokens")
    return reply.text


# --- response parsers ---

_ALPHA_RUN_RE = re.compile(r"[A-Za-z]+")


def parse_yes_no(text: str) -> bool:
    """True/False from the first alphabetic token; UnparseableVerdict otherwise."""
    m = _ALPHA_RUN_RE.search(text)
    if m:
        word = m.group(0).lower()
        if word == "yes":
            return True
        if word == "no":
            return False
    raise UnparseableVerdict(f"not a YES/NO verdict: {text[:80]!r}")


@dataclass(frozen=True)
class ScoredKeywordList:
    """Ordered (keyword, importance) pairs recovered from one extraction reply.

    parse_skips counts pairs dropped for a non-numeric score, an empty
    keyword, or a keyword longer than the prompt's three-token limit.
    """

    entries: tuple[tuple[str, float], ...]
    parse_skips: int = field(default=0, compare=False)

    def __post_init__(self):
        for kw, score in self.entries:
            if not kw.strip():
                raise ValueError("empty keyword")
            if not SCORE_MIN <= score <= SCORE_MAX:
                raise ValueError(f"score out of range: {score}")
            if len(kw.split()) > MAX_KEYWORD_TOKENS:
                raise ValueError(f"keyword longer than {MAX_KEYWORD_TOKENS} tokens: {kw!r}")


def parse_scored_keywords(text: str) -> ScoredKeywordList:
    """Parse the "keyword: score, keyword: score" reply format.

    Splits on commas, then at the last colon of each pair (scores never
    contain colons; keywords occasionally might). Scores are clamped to the
    prompt's 0..5 range; malformed pairs are dropped and counted rather than
    failing the whole reply.
    """
    entries: list[tuple[str, float]] = []
    skips = 0
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        keyword, sep, score_text = part.rpartition(":")
        if not sep:
            skips += 1
            continue
        keyword = keyword.strip()
        score_text = score_text.strip()
        if not keyword:
            skips += 1
            continue
        try:
            score = float(score_text)
        except ValueError:
            skips += 1
            continue
        if not math.isfinite(score):
            skips += 1
            continue
        if len(keyword.split()) > MAX_KEYWORD_TOKENS:
            skips += 1
            continue
        entries.append((keyword, min(max(score, SCORE_MIN), SCORE_MAX)))
    if not entries:
        raise EmptyResult(f"no keyword pairs recovered from: {text[:80]!r}")
    return ScoredKeywordList(tuple(entries), parse_skips=skips)


def format_scored_keywords(scored: ScoredKeywordList) -> str:
    """Emit the comma-joined "keyword: score" form (round-trips with the parser)."""
    pieces = []
    for kw, score in scored.entries:
        rendered = str(int(score)) if score == int(score) else repr(score)
        pieces.append(f"{kw}: {rendered}")
    return ", ".join(pieces)


_BULLET_RE = re.compile(r"^\s*(?:[-*•–—]+|\d+\s*[.)])\s*")


def parse_keyword_list(text: str) -> list[str]:
    """Parse a keyword list reply: comma- or line-separated, bullets stripped.

    Case is preserved. Raises EmptyResult when nothing usable remains.
    """
    keywords: list[str] = []
    for line in text.splitlines():
        line = _BULLET_RE.sub("", line)
        for piece in line.split(","):
            piece = piece.strip()
            if piece:
                keywords.append(piece)
    if not keywords:
        raise EmptyResult("keyword list reply contained no entries")
    return keywords
