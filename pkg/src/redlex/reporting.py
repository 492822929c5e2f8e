"""Analysis bundle assembly and plot-ready report emission.

`analyze_corpus` computes every series and aggregate over a built corpus and
returns one JSON-safe bundle; `emit_reports` writes one CSV (or JSON) file per
series. Bundles contain no timestamps, so identical inputs produce identical
bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from . import analytics, thread_assembler
from .analytics import ClassifierAdapter, DailySeries
from .corpus_builder import read_manifest
from .dump_ingest import open_stream

SERIES_NAMES = (
    "daily_submissions",
    "daily_comments",
    "popularity_sum",
    "popularity_mean",
    "unique_authors",
    "controversy_daily",
)


def analyze_corpus(corpus_dir: str | os.PathLike, adapter: ClassifierAdapter, *,
                   batch_size: int = 64,
                   label_cache_path: str | os.PathLike | None = None,
                   top_n: int = 20,
                   config_snapshot: dict | None = None) -> dict:
    """Compute the full report bundle for a corpus directory."""
    corpus_dir = Path(corpus_dir)
    manifest = read_manifest(corpus_dir)
    manifest_sha = hashlib.sha256((corpus_dir / "manifest.json").read_bytes()).hexdigest()

    records, _ = open_stream(corpus_dir / manifest["files"]["submissions"], "submission")
    submissions = list(records)
    records, _ = open_stream(corpus_dir / manifest["files"]["comments"], "comment")
    comments = list(records)

    series: dict[str, DailySeries] = {
        "daily_submissions": analytics.daily_counts(submissions, "daily_submissions"),
        "daily_comments": analytics.daily_counts(comments, "daily_comments"),
    }
    pop_sum, pop_mean = analytics.popularity_series(comments)
    series["popularity_sum"] = pop_sum
    series["popularity_mean"] = pop_mean
    series["unique_authors"] = analytics.unique_authors_daily(comments)
    series["controversy_daily"] = analytics.controversy_daily(comments)

    cache = analytics.load_label_cache(label_cache_path) if label_cache_path else None
    vectors, failures = analytics.classify_comments(
        comments, adapter, batch_size=batch_size, cache=cache)
    if label_cache_path and cache is not None:
        analytics.save_label_cache(label_cache_path, cache)
    label_series, excluded = analytics.label_daily_mean(comments, vectors)

    conversations = thread_assembler.build_all(submissions, comments)
    histogram = thread_assembler.length_histogram(conversations)

    deleted_hash = manifest.get("deleted_author_hash")
    deleted_comments = sum(1 for c in comments if c.author == deleted_hash)

    bundle = {
        "metadata": {
            "corpus_manifest_sha256": manifest_sha,
            "manifest_counts": manifest["counts"],
            "records_analyzed": {
                "submissions": len(submissions),
                "comments": len(comments),
            },
            "conversations": len(conversations),
            "orphan_comments": sum(c.orphan_count for c in conversations),
            "controversial_conversations": sum(
                1 for c in conversations if c.is_controversial),
            "classified_comments": len(vectors),
            "classification_failures": dict(sorted(failures.items())),
            "comments_without_vectors": excluded,
            "deleted_author_comments": deleted_comments,
            "config": config_snapshot or {},
        },
        "series": {name: series[name].to_json_dict() for name in SERIES_NAMES},
        "label_means": {
            s.metric_name.removeprefix("label_mean_"): s.to_json_dict()
            for s in label_series
        },
        "subreddit_controversy": [
            {
                "subreddit": r.name,
                "total_comments": r.total_comments,
                "controversial_comments": r.controversial_comments,
                "ratio": r.ratio,
            }
            for r in analytics.subreddit_controversy(comments)
        ],
        "top_subreddits": _top_subreddits_dict(submissions, comments, top_n),
        "conversation_lengths": [
            {"bucket": label, "count": count} for label, count in histogram
        ],
    }
    return bundle


def _top_subreddits_dict(submissions, comments, n: int) -> dict:
    by_subs, by_comments = analytics.top_subreddits(submissions, comments, n)
    return {
        "by_submissions": [{"subreddit": s, "count": c} for s, c in by_subs],
        "by_comments": [{"subreddit": s, "count": c} for s, c in by_comments],
    }


def bundle_to_json(bundle: dict) -> str:
    return json.dumps(bundle, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_bundle(bundle: dict, path: str | os.PathLike) -> None:
    Path(path).write_text(bundle_to_json(bundle), encoding="utf-8")


def load_bundle(path: str | os.PathLike) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _series_csv(series_dict: dict) -> str:
    lines = ["date,value"]
    for day, value in series_dict["points"]:
        lines.append(f"{day},{_fmt(value)}")
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float) and value == int(value):
        return str(int(value))
    return repr(value) if isinstance(value, float) else str(value)


def emit_reports(bundle: dict, out_dir: str | os.PathLike,
                 fmt: str = "csv", source: str = "") -> list[Path]:
    """Write one file per figure-equivalent series; returns the paths.

    A report_manifest.json records the inputs needed to re-run the emission.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown report format: {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    label_dir = out_dir / "label_means"
    label_dir.mkdir(exist_ok=True)
    written: list[Path] = []

    def _write(path: Path, csv_text: str, json_obj) -> None:
        if fmt == "csv":
            path = path.with_suffix(".csv")
            path.write_text(csv_text, encoding="utf-8")
        else:
            path = path.with_suffix(".json")
            path.write_text(
                json.dumps(json_obj, indent=2, sort_keys=True) + "\n",
                encoding="utf-8")
        written.append(path)

    for name in SERIES_NAMES:
        series = bundle["series"][name]
        _write(out_dir / name, _series_csv(series), series)

    for label in analytics.MORAL_LABELS + analytics.EMOTION_LABELS:
        series = bundle["label_means"][label]
        _write(label_dir / label, _series_csv(series), series)

    rows = bundle["subreddit_controversy"]
    csv_text = "subreddit,total_comments,controversial_comments,ratio\n" + "".join(
        f"{r['subreddit']},{r['total_comments']},{r['controversial_comments']},"
        f"{_fmt(r['ratio'])}\n"
        for r in rows)
    _write(out_dir / "subreddit_controversy", csv_text, rows)

    tops = bundle["top_subreddits"]
    lines = ["metric,rank,subreddit,count"]
    for metric in ("by_submissions", "by_comments"):
        for rank, row in enumerate(tops[metric], start=1):
            lines.append(f"{metric},{rank},{row['subreddit']},{row['count']}")
    _write(out_dir / "top_subreddits", "\n".join(lines) + "\n", tops)

    hist = bundle["conversation_lengths"]
    csv_text = "bucket,count\n" + "".join(
        f"{r['bucket']},{r['count']}\n" for r in hist)
    _write(out_dir / "conversation_lengths", csv_text, hist)

    manifest = {
        "analysis": source,
        "format": fmt,
        "corpus_manifest_sha256": bundle["metadata"]["corpus_manifest_sha256"],
        "files": sorted(str(p.relative_to(out_dir)) for p in written),
    }
    (out_dir / "report_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    return written
