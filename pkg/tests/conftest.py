"""Shared fixtures and record factories."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"

# 2023-10-01T00:00:00Z
EPOCH_BASE = 1_696_118_400
DAY = 86_400


def make_submission(i: int, subreddit: str = "worldnews", title: str = "a title",
                    **extra) -> dict:
    row = {
        "id": f"s{i}",
        "subreddit": subreddit,
        "title": title,
        "selftext": "",
        "author": f"author_{i % 7}",
        "created_utc": EPOCH_BASE + i * 60,
        "score": i % 50,
        "num_comments": 0,
    }
    row.update(extra)
    return row


def make_comment(i: int, link: str, parent: str | None = None,
                 subreddit: str = "worldnews", **extra) -> dict:
    row = {
        "id": f"c{i}",
        "link_id": f"t3_{link}",
        "parent_id": f"t1_{parent}" if parent else f"t3_{link}",
        "subreddit": subreddit,
        "body": f"comment body {i}",
        "author": f"author_{i % 11}",
        "created_utc": EPOCH_BASE + i * 30,
        "score": (i * 3) % 40 - 5,
        "controversiality": 1 if i % 9 == 0 else 0,
    }
    row.update(extra)
    return row


def write_ndjson(path: Path, rows: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return path


def write_ndjson_zst(path: Path, rows: list[dict]) -> Path:
    import pyarrow as pa

    raw = pa.OSFile(str(path), "wb")
    sink = pa.CompressedOutputStream(raw, "zstd")
    try:
        for row in rows:
            sink.write((json.dumps(row, sort_keys=True) + "\n").encode("utf-8"))
    finally:
        sink.close()
        raw.close()
    return path


@pytest.fixture
def fixture_pages_dir() -> Path:
    return DATA_DIR / "pages"


@pytest.fixture
def salt_env(monkeypatch):
    monkeypatch.setenv("REDLEX_SALT", "test-salt-001")
    return "test-salt-001"
