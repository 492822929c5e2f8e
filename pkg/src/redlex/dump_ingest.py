"""Constant-memory streaming of submission/comment records from dump files.

Dumps are newline-delimited JSON, optionally zstd-compressed; compression is
auto-detected from magic bytes. Malformed lines are skipped and counted rather
than aborting the stream, with a configurable abort threshold on the skip
ratio. Record field names follow the archival dump vocabulary; link/parent id
prefixes ("t3_"/"t1_") are preserved verbatim at this layer.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import IO, Iterator, Literal

from .defaults import SKIP_RATIO_MIN_LINES, SKIP_RATIO_THRESHOLD
from .errors import (
    CorruptCompression,
    FileUnreadable,
    MalformedRecord,
    SkipBudgetExceeded,
)

ZSTD_MAGIC = b"\x28\xb5\x2f\xfd"
_READ_SIZE = 1 << 20

RecordKind = Literal["submission", "comment"]

DELETED_AUTHOR = "[deleted]"


@dataclass(frozen=True, slots=True)
class SubmissionRecord:
    id: str
    subreddit: str
    title: str
    selftext: str
    author: str
    created_utc: int
    score: int
    num_comments: int

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "subreddit": self.subreddit,
            "title": self.title,
            "selftext": self.selftext,
            "author": self.author,
            "created_utc": self.created_utc,
            "score": self.score,
            "num_comments": self.num_comments,
        }


@dataclass(frozen=True, slots=True)
class CommentRecord:
    id: str
    link_id: str
    parent_id: str
    subreddit: str
    body: str
    author: str
    created_utc: int
    score: int
    controversiality: int

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "link_id": self.link_id,
            "parent_id": self.parent_id,
            "subreddit": self.subreddit,
            "body": self.body,
            "author": self.author,
            "created_utc": self.created_utc,
            "score": self.score,
            "controversiality": self.controversiality,
        }


@dataclass
class IngestStats:
    lines_read: int = 0
    records_parsed: int = 0
    lines_skipped_malformed: int = 0
    bytes_read: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _require_str(obj: dict, key: str) -> str:
    value = obj.get(key)
    if value is None or not isinstance(value, str) or not value:
        raise MalformedRecord(f"missing {key}")
    return value


def _int_field(obj: dict, key: str, default: int) -> int:
    value = obj.get(key)
    if value is None:
        return default
    try:
        return int(value)
    except (TypeError, ValueError):
        return default


def _required_epoch(obj: dict) -> int:
    value = obj.get("created_utc")
    if value is None:
        raise MalformedRecord("missing created_utc")
    try:
        ts = int(float(value))
    except (TypeError, ValueError) as exc:
        raise MalformedRecord(f"bad created_utc: {value!r}") from exc
    if ts <= 0:
        raise MalformedRecord(f"bad created_utc: {value!r}")
    return ts


def parse_submission(line: str | bytes | dict) -> SubmissionRecord:
    """Parse one dump line; id, subreddit, title and created_utc are required."""
    obj = _as_obj(line)
    return SubmissionRecord(
        id=_require_str(obj, "id"),
        subreddit=_require_str(obj, "subreddit"),
        title=_require_str(obj, "title"),
        selftext=str(obj.get("selftext") or ""),
        author=str(obj.get("author") or DELETED_AUTHOR),
        created_utc=_required_epoch(obj),
        score=_int_field(obj, "score", 0),
        num_comments=_int_field(obj, "num_comments", 0),
    )


def parse_comment(line: str | bytes | dict) -> CommentRecord:
    """Parse one dump line; id, link_id and created_utc are required.

    controversiality defaults to 0 and is normalized to {0, 1}; a missing
    parent_id means a top-level comment and defaults to the link_id.
    """
    obj = _as_obj(line)
    link_id = _require_str(obj, "link_id")
    controversiality = _int_field(obj, "controversiality", 0)
    return CommentRecord(
        id=_require_str(obj, "id"),
        link_id=link_id,
        parent_id=str(obj.get("parent_id") or link_id),
        subreddit=str(obj.get("subreddit") or ""),
        body=str(obj.get("body") or ""),
        author=str(obj.get("author") or DELETED_AUTHOR),
        created_utc=_required_epoch(obj),
        score=_int_field(obj, "score", 0),
        controversiality=1 if controversiality else 0,
    )


def _as_obj(line: str | bytes | dict) -> dict:
    if isinstance(line, dict):
        return line
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedRecord(f"invalid json: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedRecord("line is not a JSON object")
    return obj


def _detect_compression(path: str | os.PathLike) -> str:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    return "zstd" if magic == ZSTD_MAGIC else "none"


def _iter_raw_lines(fh: IO[bytes], stats: IngestStats, path: str,
                    decode_errors: tuple = (OSError,)) -> Iterator[bytes]:
    """Split a binary stream into lines with a fixed-size read buffer."""
    remainder = b""
    position = 0
    while True:
        try:
            block = fh.read(_READ_SIZE)
        except decode_errors as exc:
            raise CorruptCompression(
                f"{path}: stream failed near byte {position}: {exc}") from exc
        if not block:
            break
        block = bytes(block)
        position += len(block)
        stats.bytes_read += len(block)
        remainder += block
        if b"\n" in remainder:
            lines = remainder.split(b"\n")
            remainder = lines.pop()
            yield from lines
    if remainder:
        yield remainder


def open_stream(path: str | os.PathLike, kind: RecordKind, *,
                compression: str = "auto",
                skip_ratio_threshold: float = SKIP_RATIO_THRESHOLD,
                skip_ratio_min_lines: int = SKIP_RATIO_MIN_LINES,
                ) -> tuple[Iterator[SubmissionRecord | CommentRecord], IngestStats]:
    """Stream records from a dump file in file order with bounded memory.

    Returns (iterator, stats); the stats object updates as the iterator is
    consumed. Raises FileUnreadable up front, CorruptCompression mid-stream,
    and SkipBudgetExceeded when the malformed-line ratio breaches the
    threshold after `skip_ratio_min_lines` lines.
    """
    if kind not in ("submission", "comment"):
        raise ValueError(f"unknown record kind: {kind!r}")
    path = os.fspath(path)
    if compression == "auto":
        try:
            compression = _detect_compression(path)
        except OSError as exc:
            raise FileUnreadable(f"{path}: {exc}") from exc
    if compression not in ("zstd", "none"):
        raise ValueError(f"unknown compression: {compression!r}")

    stats = IngestStats()
    parse = parse_submission if kind == "submission" else parse_comment

    def _records() -> Iterator[SubmissionRecord | CommentRecord]:
        try:
            raw = open(path, "rb")
        except OSError as exc:
            raise FileUnreadable(f"{path}: {exc}") from exc
        stream = raw
        decode_errors: tuple = (OSError,)
        if compression == "zstd":
            import pyarrow as pa
            decode_errors = (OSError, pa.lib.ArrowException)
            try:
                stream = pa.CompressedInputStream(raw, "zstd")
            except Exception as exc:
                raw.close()
                raise CorruptCompression(f"{path}: {exc}") from exc
        try:
            for line in _iter_raw_lines(stream, stats, path, decode_errors):
                stats.lines_read += 1
                try:
                    yield parse(line)
                    stats.records_parsed += 1
                except MalformedRecord:
                    stats.lines_skipped_malformed += 1
                    if (stats.lines_read >= skip_ratio_min_lines and
                            stats.lines_skipped_malformed >
                            skip_ratio_threshold * stats.lines_read):
                        raise SkipBudgetExceeded(
                            f"{path}: {stats.lines_skipped_malformed} malformed "
                            f"of {stats.lines_read} lines")
        finally:
            for handle in (stream, raw):
                try:
                    handle.close()
                except Exception:
                    pass

    return _records(), stats


def write_ndjson(path: str | os.PathLike, rows, *, compression: str = "none") -> int:
    """Write dict rows as ndjson (optionally zstd); returns the row count.

    Keys are sorted so output bytes are stable.
    """
    count = 0
    if compression == "zstd":
        import pyarrow as pa
        raw = pa.OSFile(os.fspath(path), "wb")
        sink = pa.CompressedOutputStream(raw, "zstd")
        try:
            for row in rows:
                sink.write((json.dumps(row, sort_keys=True) + "\n").encode("utf-8"))
                count += 1
        finally:
            sink.close()
            raw.close()
        return count
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
            count += 1
    return count
