"""Daily time-series and aggregate metrics over a built corpus.

Every aggregation is a commutative reduction over records: outputs are sorted
and float sums use math.fsum, so results are identical under any input
permutation. Moral-foundation and emotion confidences come from a pluggable
classifier adapter; no model inference happens in-process.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import date, timedelta, datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .dump_ingest import CommentRecord, SubmissionRecord
from .errors import AdapterUnavailable

logger = logging.getLogger(__name__)

MORAL_LABELS = (
    "care", "harm", "fairness", "cheating", "loyalty",
    "betrayal", "authority", "subversion", "purity", "degradation",
)
EMOTION_LABELS = ("fear", "anger", "enjoyment", "sadness", "disgust_contempt")


@dataclass(frozen=True)
class LabelVector:
    """Multi-label confidences: exactly ten moral and five emotion labels in [0,1]."""

    moral: Mapping[str, float]
    emotion: Mapping[str, float]

    def __post_init__(self):
        _check_labels("moral", self.moral, MORAL_LABELS)
        _check_labels("emotion", self.emotion, EMOTION_LABELS)

    def to_json_dict(self) -> dict:
        return {
            "moral": {k: self.moral[k] for k in MORAL_LABELS},
            "emotion": {k: self.emotion[k] for k in EMOTION_LABELS},
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "LabelVector":
        return cls(moral=dict(data["moral"]), emotion=dict(data["emotion"]))


def _check_labels(kind: str, values: Mapping[str, float],
                  expected: tuple[str, ...]) -> None:
    if set(values) != set(expected):
        raise ValueError(
            f"{kind} labels must be exactly {sorted(expected)}, got {sorted(values)}")
    for label, conf in values.items():
        if not isinstance(conf, (int, float)) or not 0.0 <= float(conf) <= 1.0:
            raise ValueError(f"{kind}.{label} confidence out of [0,1]: {conf!r}")


def _utc_day(epoch: int) -> date:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).date()


@dataclass
class DailySeries:
    metric_name: str
    points: list[tuple[date, float]] = field(default_factory=list)
    gaps: list[date] = field(default_factory=list)

    @classmethod
    def from_day_map(cls, metric_name: str, day_map: Mapping[date, float]) -> "DailySeries":
        days = sorted(day_map)
        gaps = []
        if days:
            cursor = days[0]
            present = set(days)
            while cursor <= days[-1]:
                if cursor not in present:
                    gaps.append(cursor)
                cursor += timedelta(days=1)
        return cls(metric_name, [(d, day_map[d]) for d in days], gaps)

    def value_map(self) -> dict[date, float]:
        return dict(self.points)

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric_name,
            "points": [[d.isoformat(), v] for d, v in self.points],
            "gaps": [d.isoformat() for d in self.gaps],
        }

    def to_csv(self) -> str:
        lines = ["date,value"]
        for d, v in self.points:
            lines.append(f"{d.isoformat()},{_fmt_value(v)}")
        return "\n".join(lines) + "\n"


def _fmt_value(v: float) -> str:
    if isinstance(v, int) or (isinstance(v, float) and v == int(v)):
        return str(int(v))
    return repr(v)


@dataclass(frozen=True)
class SubredditControversy:
    name: str
    total_comments: int
    controversial_comments: int
    ratio: float


def daily_counts(records: Iterable[SubmissionRecord | CommentRecord],
                 metric_name: str) -> DailySeries:
    """Per-UTC-day record counts."""
    days: dict[date, float] = {}
    for rec in records:
        d = _utc_day(rec.created_utc)
        days[d] = days.get(d, 0) + 1
    return DailySeries.from_day_map(metric_name, days)


def popularity_series(comments: Iterable[CommentRecord]) -> tuple[DailySeries, DailySeries]:
    """(per-day sum, per-day mean) of comment scores (upvotes minus downvotes)."""
    sums: dict[date, int] = {}
    counts: dict[date, int] = {}
    for com in comments:
        d = _utc_day(com.created_utc)
        sums[d] = sums.get(d, 0) + com.score
        counts[d] = counts.get(d, 0) + 1
    means = {d: sums[d] / counts[d] for d in sums}
    return (
        DailySeries.from_day_map("popularity_sum", sums),
        DailySeries.from_day_map("popularity_mean", means),
    )


def unique_authors_daily(records: Iterable[SubmissionRecord | CommentRecord],
                         metric_name: str = "unique_authors") -> DailySeries:
    """Per-day count of distinct author hashes."""
    authors: dict[date, set[str]] = {}
    for rec in records:
        authors.setdefault(_utc_day(rec.created_utc), set()).add(rec.author)
    return DailySeries.from_day_map(
        metric_name, {d: len(s) for d, s in authors.items()})


def controversy_daily(comments: Iterable[CommentRecord]) -> DailySeries:
    """Per-day count of comments flagged controversial."""
    days: dict[date, float] = {}
    for com in comments:
        d = _utc_day(com.created_utc)
        days.setdefault(d, 0)
        if com.controversiality == 1:
            days[d] += 1
    return DailySeries.from_day_map("controversy_daily", days)


def subreddit_controversy(comments: Iterable[CommentRecord]) -> list[SubredditControversy]:
    """Per-subreddit controversial ratio, largest subreddits first."""
    total: dict[str, int] = {}
    flagged: dict[str, int] = {}
    for com in comments:
        total[com.subreddit] = total.get(com.subreddit, 0) + 1
        if com.controversiality == 1:
            flagged[com.subreddit] = flagged.get(com.subreddit, 0) + 1
    rows = [
        SubredditControversy(name, count, flagged.get(name, 0),
                             flagged.get(name, 0) / count)
        for name, count in total.items()
    ]
    rows.sort(key=lambda r: (-r.total_comments, r.name))
    return rows


def top_subreddits(submissions: Iterable[SubmissionRecord],
                   comments: Iterable[CommentRecord],
                   n: int = 20) -> tuple[list[tuple[str, int]], list[tuple[str, int]]]:
    """Top-n subreddits by submission count and by comment count."""
    if n < 1:
        raise ValueError("n must be >= 1")

    def _rank(records) -> list[tuple[str, int]]:
        counts: dict[str, int] = {}
        for rec in records:
            counts[rec.subreddit] = counts.get(rec.subreddit, 0) + 1
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:n]

    return _rank(submissions), _rank(comments)


# --- classifier adapter boundary ---

@dataclass
class BatchResult:
    """Per-comment outcomes of one adapter batch; failures don't poison it."""

    vectors: dict[str, LabelVector] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)


class ClassifierAdapter(ABC):
    """Produces label confidences for batches of (comment id, text) pairs."""

    @abstractmethod
    def classify_batch(self, items: Sequence[tuple[str, str]]) -> BatchResult:
        ...


class StubClassifierAdapter(ClassifierAdapter):
    """Deterministic offline adapter: confidences from a stable hash of the text."""

    def classify_batch(self, items: Sequence[tuple[str, str]]) -> BatchResult:
        result = BatchResult()
        for comment_id, text in items:
            result.vectors[comment_id] = LabelVector(
                moral={lb: _hash_confidence(lb, text) for lb in MORAL_LABELS},
                emotion={lb: _hash_confidence(lb, text) for lb in EMOTION_LABELS},
            )
        return result


def _hash_confidence(label: str, text: str) -> float:
    digest = hashlib.sha256(f"{label}\x00{text}".encode("utf-8")).hexdigest()
    return int(digest[:12], 16) / float(16 ** 12)


class FileExchangeAdapter(ClassifierAdapter):
    """Exchanges batches with an external model runner through files.

    For batch N this writes `batch_<N>.request.ndjson` ({"id","text"} rows)
    into the exchange directory and waits for `batch_<N>.response.ndjson`
    ({"id","moral":{...},"emotion":{...}} rows). The runner must write
    responses atomically (write-temp-then-rename). Missing or malformed rows
    become per-comment failures; a missing response file is AdapterUnavailable.
    """

    def __init__(self, exchange_dir: str | os.PathLike, *,
                 timeout: float = 600.0, poll_interval: float = 0.2):
        self.exchange_dir = Path(exchange_dir)
        self.exchange_dir.mkdir(parents=True, exist_ok=True)
        self.timeout = timeout
        self.poll_interval = poll_interval
        self._batch_index = 0

    def classify_batch(self, items: Sequence[tuple[str, str]]) -> BatchResult:
        self._batch_index += 1
        stem = f"batch_{self._batch_index:05d}"
        request_path = self.exchange_dir / f"{stem}.request.ndjson"
        response_path = self.exchange_dir / f"{stem}.response.ndjson"

        tmp = request_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for comment_id, text in items:
                fh.write(json.dumps({"id": comment_id, "text": text},
                                    sort_keys=True) + "\n")
        os.replace(tmp, request_path)

        deadline = time.monotonic() + self.timeout
        while not response_path.exists():
            if time.monotonic() >= deadline:
                raise AdapterUnavailable(
                    f"no response for {request_path.name} within {self.timeout}s")
            time.sleep(self.poll_interval)

        result = BatchResult()
        wanted = {comment_id for comment_id, _ in items}
        with open(response_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except ValueError as exc:
                    logger.warning("unparseable row in %s: %s", response_path.name, exc)
                    continue
                comment_id = row.get("id") if isinstance(row, dict) else None
                if comment_id not in wanted:
                    continue
                try:
                    result.vectors[comment_id] = LabelVector(
                        moral=dict(row["moral"]), emotion=dict(row["emotion"]))
                except (ValueError, KeyError, TypeError) as exc:
                    result.failures[comment_id] = str(exc)
        for comment_id in wanted:
            if comment_id not in result.vectors and comment_id not in result.failures:
                result.failures[comment_id] = "no response row"
        return result


def classify_comments(comments: Iterable[CommentRecord],
                      adapter: ClassifierAdapter, *,
                      batch_size: int = 64,
                      cache: dict[str, LabelVector] | None = None,
                      ) -> tuple[dict[str, LabelVector], dict[str, str]]:
    """Classify comments in batches, reusing cached vectors by comment id.

    Returns (vectors, failures). The cache dict is updated in place.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    by_id: dict[str, str] = {}
    for com in comments:
        by_id.setdefault(com.id, com.body)
    vectors: dict[str, LabelVector] = {}
    failures: dict[str, str] = {}
    pending: list[tuple[str, str]] = []
    for comment_id in sorted(by_id):
        if cache is not None and comment_id in cache:
            vectors[comment_id] = cache[comment_id]
        else:
            pending.append((comment_id, by_id[comment_id]))
    for start in range(0, len(pending), batch_size):
        batch = pending[start:start + batch_size]
        result = adapter.classify_batch(batch)
        vectors.update(result.vectors)
        failures.update(result.failures)
        if cache is not None:
            cache.update(result.vectors)
    return vectors, failures


def load_label_cache(path: str | os.PathLike) -> dict[str, LabelVector]:
    path = Path(path)
    if not path.exists():
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return {cid: LabelVector.from_json_dict(v) for cid, v in raw.items()}


def save_label_cache(path: str | os.PathLike, cache: Mapping[str, LabelVector]) -> None:
    payload = {cid: cache[cid].to_json_dict() for cid in sorted(cache)}
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def label_daily_mean(comments: Iterable[CommentRecord],
                     vectors: Mapping[str, LabelVector],
                     ) -> tuple[list[DailySeries], int]:
    """Per-day mean confidence per label; returns (series list, excluded count).

    Comments without a vector are excluded from the means and counted. Means
    use exactly-rounded summation so they are input-order invariant.
    """
    by_label_day: dict[str, dict[date, list[float]]] = {
        label: {} for label in MORAL_LABELS + EMOTION_LABELS}
    excluded = 0
    for com in comments:
        vector = vectors.get(com.id)
        if vector is None:
            excluded += 1
            continue
        d = _utc_day(com.created_utc)
        for label in MORAL_LABELS:
            by_label_day[label].setdefault(d, []).append(float(vector.moral[label]))
        for label in EMOTION_LABELS:
            by_label_day[label].setdefault(d, []).append(float(vector.emotion[label]))
    series = []
    for label in MORAL_LABELS + EMOTION_LABELS:
        day_map = {d: math.fsum(vals) / len(vals)
                   for d, vals in by_label_day[label].items()}
        series.append(DailySeries.from_day_map(f"label_mean_{label}", day_map))
    return series, excluded
