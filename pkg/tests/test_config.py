"""Tests for run configuration loading and validation."""

import json

import pytest

from redlex import defaults
from redlex.analytics import FileExchangeAdapter, StubClassifierAdapter
from redlex.config import RunConfig
from redlex.errors import MissingSalt
from redlex.llm_gateway import HttpProvider, StubProvider


class TestDefaults:
    def test_shipped_parameter_values(self):
        cfg = RunConfig()
        assert cfg.max_chunk_tokens == 3000
        assert cfg.top_n == 200
        assert cfg.page_filter_words == 100
        assert cfg.seed_terms == defaults.MAIN_SEED_TERMS

    def test_score_bounds(self):
        assert defaults.SCORE_MIN == 0.0
        assert defaults.SCORE_MAX == 5.0


class TestValidation:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            RunConfig(top_n=0)
        with pytest.raises(ValueError):
            RunConfig(jobs=-1)

    def test_rejects_unknown_provider(self):
        with pytest.raises(ValueError):
            RunConfig(provider="quantum")

    def test_rejects_bad_skip_ratio(self):
        with pytest.raises(ValueError):
            RunConfig(skip_ratio_threshold=1.5)

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"max_chunk_tokens": 100, "typo_key": 1}), "utf-8")
        with pytest.raises(ValueError, match="typo_key"):
            RunConfig.from_file(path)

    def test_from_file_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"topic": "t", "seed_terms": ["a", "b"],
                                    "page_fixture_dir": "pages"}), "utf-8")
        cfg = RunConfig.from_file(path)
        assert cfg.topic == "t"
        assert cfg.seed_terms == ("a", "b")

    def test_snapshot_is_json_safe_and_secret_free(self):
        snap = RunConfig().snapshot()
        blob = json.dumps(snap)
        assert "REDLEX_SALT" in blob  # env var NAME is fine
        assert snap["seed_terms"] == list(defaults.MAIN_SEED_TERMS)


class TestFactories:
    def test_stub_provider(self):
        assert isinstance(RunConfig().build_provider(), StubProvider)

    def test_http_provider_requires_endpoint(self):
        cfg = RunConfig(provider="http")
        with pytest.raises(ValueError):
            cfg.build_provider()
        cfg = RunConfig(provider="http", provider_endpoint="http://x/v1",
                        provider_model="m")
        assert isinstance(cfg.build_provider(), HttpProvider)

    def test_api_key_from_env(self, monkeypatch):
        monkeypatch.setenv("REDLEX_API_KEY", "sekrit")
        cfg = RunConfig(provider="http", provider_endpoint="http://x/v1")
        provider = cfg.build_provider()
        assert provider.api_key == "sekrit"

    def test_fixture_backend_requires_dir(self):
        with pytest.raises(ValueError):
            RunConfig().build_page_store()

    def test_adapters(self, tmp_path):
        assert isinstance(RunConfig().build_adapter(), StubClassifierAdapter)
        cfg = RunConfig(adapter="file-exchange", exchange_dir=str(tmp_path))
        assert isinstance(cfg.build_adapter(), FileExchangeAdapter)

    def test_salt_from_env_only(self, monkeypatch):
        cfg = RunConfig()
        monkeypatch.delenv("REDLEX_SALT", raising=False)
        with pytest.raises(MissingSalt):
            cfg.salt()
        monkeypatch.setenv("REDLEX_SALT", "s3")
        assert cfg.salt() == "s3"
