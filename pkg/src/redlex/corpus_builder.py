"""Corpus construction: lexicon matching, subreddit policy, anonymization.

Collection policy: subreddits on the centric list are collected wholesale;
subreddits on the inclusive list contribute only submissions whose title
matches the lexicon; everything else is dropped. Comments are kept exactly
when their link_id targets a kept submission, which guarantees comment
closure. Author names are salted-hashed before any record is written.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .defaults import CENTRIC_SUBREDDITS, INCLUSIVE_SUBREDDITS
from .dump_ingest import (
    CommentRecord,
    DELETED_AUTHOR,
    SubmissionRecord,
    open_stream,
)
from .errors import MissingSalt, OverlappingLists
from .matching import KeywordMatcher, naive_title_match

logger = logging.getLogger(__name__)

# 64 lowercase hex chars (SHA-256); equal authors hash equal under one salt.
AuthorHash = str

CATEGORY_CENTRIC = "centric"
CATEGORY_INCLUSIVE = "inclusive"
CATEGORY_EXCLUDED = "excluded"


@dataclass(frozen=True)
class SubredditProfile:
    name: str
    matched_submissions: int
    total_submissions_seen: int
    category: str | None = None


def anonymize(author: str, salt: str) -> AuthorHash:
    """SHA-256 of salt followed by the author name, hex-encoded."""
    if not salt:
        raise MissingSalt("author anonymization salt is not configured")
    return hashlib.sha256((salt + author).encode("utf-8")).hexdigest()


def title_matches(title: str, lexicon) -> bool:
    """True when any lexicon keyword occurs in the normalized title.

    `lexicon` is a KeywordMatcher or an iterable of keyword strings; prefer
    passing a prebuilt matcher when matching many titles.
    """
    if isinstance(lexicon, KeywordMatcher):
        return lexicon.matches(title)
    return naive_title_match(title, lexicon)


def rank_subreddits(submissions: Iterable[SubmissionRecord],
                    lexicon) -> list[SubredditProfile]:
    """Per-subreddit matched/total tallies, most-matched first."""
    matcher = lexicon if isinstance(lexicon, KeywordMatcher) else KeywordMatcher(lexicon)
    matched: dict[str, int] = {}
    total: dict[str, int] = {}
    for sub in submissions:
        total[sub.subreddit] = total.get(sub.subreddit, 0) + 1
        if matcher.matches(sub.title):
            matched[sub.subreddit] = matched.get(sub.subreddit, 0) + 1
    profiles = [
        SubredditProfile(name, matched.get(name, 0), count)
        for name, count in total.items()
    ]
    profiles.sort(key=lambda p: (-p.matched_submissions, p.name))
    return profiles


def classify_subreddits(profiles: Sequence[SubredditProfile],
                        centric_list: Sequence[str],
                        inclusive_list: Sequence[str]) -> list[SubredditProfile]:
    """Assign categories from the two explicit configuration lists.

    Names absent from both lists are excluded. Raises OverlappingLists when
    the lists share a name (case-insensitive) and refuses profiles that were
    already categorized.
    """
    centric = {name.casefold() for name in centric_list}
    inclusive = {name.casefold() for name in inclusive_list}
    overlap = centric & inclusive
    if overlap:
        raise OverlappingLists(f"subreddits in both lists: {sorted(overlap)}")
    out = []
    for profile in profiles:
        if profile.category is not None:
            raise ValueError(f"profile {profile.name!r} already categorized")
        key = profile.name.casefold()
        if key in centric:
            category = CATEGORY_CENTRIC
        elif key in inclusive:
            category = CATEGORY_INCLUSIVE
        else:
            category = CATEGORY_EXCLUDED
        out.append(replace(profile, category=category))
    return out


def suggest_centric(profiles: Sequence[SubredditProfile], *,
                    min_ratio: float = 0.5, min_matched: int = 10) -> dict:
    """Draft a centric/inclusive split from match ratios.

    Returns a config dict for human review; nothing is applied automatically.
    """
    centric, inclusive = [], []
    for p in profiles:
        if p.matched_submissions < min_matched:
            continue
        ratio = p.matched_submissions / p.total_submissions_seen
        (centric if ratio >= min_ratio else inclusive).append(p.name)
    return {
        "centric": centric,
        "inclusive": inclusive,
        "heuristic": {"min_ratio": min_ratio, "min_matched": min_matched},
    }


def load_subreddit_config(path: str | os.PathLike) -> tuple[list[str], list[str]]:
    """Read a {"centric": [...], "inclusive": [...]} JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return list(data["centric"]), list(data["inclusive"])


def default_subreddit_config() -> tuple[list[str], list[str]]:
    """Shipped default lists with the published overlap resolved centric-first."""
    centric = list(CENTRIC_SUBREDDITS)
    centric_keys = {name.casefold() for name in centric}
    inclusive = []
    for name in INCLUSIVE_SUBREDDITS:
        if name.casefold() in centric_keys:
            logger.info("subreddit %r appears in both default lists; kept centric", name)
            continue
        inclusive.append(name)
    return centric, inclusive


def _strip_ref(ref: str) -> str:
    if len(ref) > 3 and ref[0] == "t" and ref[2] == "_" and ref[1] in "12345":
        return ref[3:]
    return ref


def _utc_date(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).date().isoformat()


class _DateRange:
    def __init__(self):
        self.min: int | None = None
        self.max: int | None = None

    def add(self, epoch: int) -> None:
        if self.min is None or epoch < self.min:
            self.min = epoch
        if self.max is None or epoch > self.max:
            self.max = epoch

    def as_dict(self) -> dict:
        if self.min is None:
            return {"start": None, "end": None}
        return {"start": _utc_date(self.min), "end": _utc_date(self.max)}


def collect(submissions: Iterable[SubmissionRecord],
            comments: Iterable[CommentRecord],
            centric_list: Sequence[str],
            inclusive_list: Sequence[str],
            lexicon,
            out_dir: str | os.PathLike,
            salt: str, *,
            lexicon_ref: dict | None = None,
            match_selftext: bool = False,
            config_snapshot: dict | None = None) -> dict:
    """Apply the collection policy and write the corpus; returns the manifest.

    Two passes: submissions first (recording kept ids), then comments attached
    by link_id. Every author field is hashed before writing. Crossposts are
    not deduplicated; the manifest says so.
    """
    if not salt:
        raise MissingSalt("collect requires an anonymization salt")
    matcher = lexicon if isinstance(lexicon, KeywordMatcher) else KeywordMatcher(lexicon)
    centric = {name.casefold() for name in centric_list}
    inclusive = {name.casefold() for name in inclusive_list}
    overlap = centric & inclusive
    if overlap:
        raise OverlappingLists(f"subreddits in both lists: {sorted(overlap)}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sub_path = out_dir / "submissions.ndjson"
    com_path = out_dir / "comments.ndjson"

    counts = {
        "submissions": {"centric": 0, "inclusive": 0, "total": 0},
        "comments": {"centric": 0, "inclusive": 0, "total": 0},
    }
    dates = _DateRange()
    kept_class: dict[str, str] = {}

    with open(sub_path, "w", encoding="utf-8") as fh:
        for sub in submissions:
            key = sub.subreddit.casefold()
            if key in centric:
                category = "centric"
            elif key in inclusive:
                text = sub.title
                if match_selftext:
                    text = f"{sub.title}\n{sub.selftext}"
                if not matcher.matches(text):
                    continue
                category = "inclusive"
            else:
                continue
            kept_class[sub.id] = category
            counts["submissions"][category] += 1
            counts["submissions"]["total"] += 1
            dates.add(sub.created_utc)
            row = sub.to_json_dict()
            row["author"] = anonymize(sub.author, salt)
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    with open(com_path, "w", encoding="utf-8") as fh:
        for com in comments:
            target = _strip_ref(com.link_id)
            category = kept_class.get(target)
            if category is None:
                continue
            counts["comments"][category] += 1
            counts["comments"]["total"] += 1
            dates.add(com.created_utc)
            row = com.to_json_dict()
            row["author"] = anonymize(com.author, salt)
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    manifest = {
        "lexicon": lexicon_ref or {},
        "subreddits": {
            "centric": sorted(centric_list),
            "inclusive": sorted(inclusive_list),
        },
        "date_range": dates.as_dict(),
        "files": {"submissions": sub_path.name, "comments": com_path.name},
        "counts": counts,
        "parent_manifest_sha256": None,
        "deleted_author_hash": anonymize(DELETED_AUTHOR, salt),
        "crossposts_deduplicated": False,
        "config": config_snapshot or {},
    }
    _write_manifest(out_dir / "manifest.json", manifest)
    return manifest


def _write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8")


def read_manifest(corpus_dir: str | os.PathLike) -> dict:
    with open(Path(corpus_dir) / "manifest.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


def open_corpus(corpus_dir: str | os.PathLike, kind: str):
    """Stream records of one kind from a built corpus directory."""
    manifest = read_manifest(corpus_dir)
    name = manifest["files"]["submissions" if kind == "submission" else "comments"]
    records, _stats = open_stream(Path(corpus_dir) / name, kind)
    return records


def derive_subset(corpus_dir: str | os.PathLike, subset_lexicon,
                  out_dir: str | os.PathLike, *,
                  lexicon_ref: dict | None = None) -> dict:
    """Filter a built corpus down to submissions matching a subset lexicon.

    Comments follow their submissions. Authors are already hashed upstream;
    records are copied verbatim. The subset manifest records the parent
    manifest's hash.
    """
    corpus_dir = Path(corpus_dir)
    matcher = (subset_lexicon if isinstance(subset_lexicon, KeywordMatcher)
               else KeywordMatcher(subset_lexicon))
    manifest = read_manifest(corpus_dir)
    parent_hash = hashlib.sha256(
        (corpus_dir / "manifest.json").read_bytes()).hexdigest()
    centric = {n.casefold() for n in manifest["subreddits"]["centric"]}

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sub_path = out_dir / "submissions.ndjson"
    com_path = out_dir / "comments.ndjson"

    counts = {
        "submissions": {"centric": 0, "inclusive": 0, "total": 0},
        "comments": {"centric": 0, "inclusive": 0, "total": 0},
    }
    dates = _DateRange()
    kept_class: dict[str, str] = {}

    def _category(subreddit: str) -> str:
        return "centric" if subreddit.casefold() in centric else "inclusive"

    records, _ = open_stream(corpus_dir / manifest["files"]["submissions"], "submission")
    with open(sub_path, "w", encoding="utf-8") as fh:
        for sub in records:
            if not matcher.matches(sub.title):
                continue
            category = _category(sub.subreddit)
            kept_class[sub.id] = category
            counts["submissions"][category] += 1
            counts["submissions"]["total"] += 1
            dates.add(sub.created_utc)
            fh.write(json.dumps(sub.to_json_dict(), sort_keys=True) + "\n")

    records, _ = open_stream(corpus_dir / manifest["files"]["comments"], "comment")
    with open(com_path, "w", encoding="utf-8") as fh:
        for com in records:
            category = kept_class.get(_strip_ref(com.link_id))
            if category is None:
                continue
            counts["comments"][category] += 1
            counts["comments"]["total"] += 1
            dates.add(com.created_utc)
            fh.write(json.dumps(com.to_json_dict(), sort_keys=True) + "\n")

    subset_manifest = {
        "lexicon": lexicon_ref or {},
        "subreddits": manifest["subreddits"],
        "date_range": dates.as_dict(),
        "files": {"submissions": sub_path.name, "comments": com_path.name},
        "counts": counts,
        "parent_manifest_sha256": parent_hash,
        "deleted_author_hash": manifest.get("deleted_author_hash"),
        "crossposts_deduplicated": manifest.get("crossposts_deduplicated", False),
        "config": manifest.get("config", {}),
    }
    _write_manifest(out_dir / "manifest.json", subset_manifest)
    return subset_manifest
