"""Run configuration: one JSON file drives every pipeline stage.

Secrets (provider API key, anonymization salt) are never stored in the file;
the config names the environment variables that hold them. A validated
snapshot of the config is embedded in every output manifest.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

from . import defaults
from .analytics import (
    ClassifierAdapter,
    FileExchangeAdapter,
    StubClassifierAdapter,
)
from .errors import MissingSalt
from .llm_gateway import CompletionProvider, HttpProvider, StubProvider
from .page_source import FixtureBackend, HttpWikiBackend, PageStore


@dataclass
class RunConfig:
    topic: str = defaults.MAIN_TOPIC
    seed_terms: tuple[str, ...] = defaults.MAIN_SEED_TERMS
    per_seed_search_limit: int = defaults.PER_SEED_SEARCH_LIMIT
    max_chunk_tokens: int = defaults.MAX_CHUNK_TOKENS
    top_n: int = defaults.TOP_N_KEYWORDS
    page_filter_words: int = defaults.PAGE_FILTER_WORDS
    max_response_tokens: int = 800
    retry_attempts: int = 3
    retry_backoff: float = 0.5
    temperature: float = 0.0

    provider: str = "stub"  # "stub" | "http"
    provider_endpoint: str = ""
    provider_model: str = ""
    provider_fixtures: str = ""  # JSON file: prompt fingerprint -> response
    api_key_env: str = defaults.API_KEY_ENV_VAR

    page_backend: str = "fixture"  # "fixture" | "http"
    page_fixture_dir: str = ""
    page_api_url: str = "https://en.wikipedia.org/w/api.php"
    cache_dir: str = ".redlex_cache"

    jobs: int = 1
    match_selftext: bool = False
    skip_ratio_threshold: float = defaults.SKIP_RATIO_THRESHOLD
    salt_env: str = defaults.SALT_ENV_VAR

    adapter: str = "stub"  # "stub" | "file-exchange"
    exchange_dir: str = ""
    classifier_batch_size: int = 64
    top_subreddits_n: int = defaults.TOP_SUBREDDITS_N

    def __post_init__(self):
        self.seed_terms = tuple(self.seed_terms)
        self.validate()

    def validate(self) -> None:
        positive = {
            "per_seed_search_limit": self.per_seed_search_limit,
            "max_chunk_tokens": self.max_chunk_tokens,
            "top_n": self.top_n,
            "page_filter_words": self.page_filter_words,
            "max_response_tokens": self.max_response_tokens,
            "retry_attempts": self.retry_attempts,
            "jobs": self.jobs,
            "classifier_batch_size": self.classifier_batch_size,
            "top_subreddits_n": self.top_subreddits_n,
        }
        for name, value in positive.items():
            if value < 1:
                raise ValueError(f"{name} must be >= 1 (got {value})")
        if self.retry_backoff < 0:
            raise ValueError("retry_backoff must be >= 0")
        if not 0 <= self.skip_ratio_threshold <= 1:
            raise ValueError("skip_ratio_threshold must be within [0,1]")
        if self.provider not in ("stub", "http"):
            raise ValueError(f"unknown provider: {self.provider!r}")
        if self.page_backend not in ("fixture", "http"):
            raise ValueError(f"unknown page backend: {self.page_backend!r}")
        if self.adapter not in ("stub", "file-exchange"):
            raise ValueError(f"unknown adapter: {self.adapter!r}")

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def snapshot(self) -> dict:
        """JSON-safe copy embedded in output manifests (contains no secrets)."""
        snap = dataclasses.asdict(self)
        snap["seed_terms"] = list(self.seed_terms)
        return snap

    # --- component factories ---

    def build_provider(self) -> CompletionProvider:
        if self.provider == "stub":
            if self.provider_fixtures:
                return StubProvider.from_fixture_file(self.provider_fixtures)
            return StubProvider()
        if not self.provider_endpoint:
            raise ValueError("provider_endpoint required for the http provider")
        return HttpProvider(
            endpoint=self.provider_endpoint,
            model=self.provider_model,
            api_key=os.environ.get(self.api_key_env, ""),
            temperature=self.temperature,
        )

    def build_page_store(self) -> PageStore:
        if self.page_backend == "fixture":
            if not self.page_fixture_dir:
                raise ValueError("page_fixture_dir required for the fixture backend")
            backend = FixtureBackend(self.page_fixture_dir)
        else:
            backend = HttpWikiBackend(self.page_api_url)
        return PageStore(backend, self.cache_dir)

    def build_adapter(self) -> ClassifierAdapter:
        if self.adapter == "stub":
            return StubClassifierAdapter()
        if not self.exchange_dir:
            raise ValueError("exchange_dir required for the file-exchange adapter")
        return FileExchangeAdapter(self.exchange_dir)

    def salt(self) -> str:
        value = os.environ.get(self.salt_env, "")
        if not value:
            raise MissingSalt(
                f"set the {self.salt_env} environment variable to an anonymization salt")
        return value
