"""Command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 success, 1 runtime failure (stderr names the failing stage),
2 usage error.
"""

from __future__ import annotations

import hashlib
import json
import logging
import sys
from pathlib import Path

import click

from . import defaults, lexicon_pipeline, reporting
from .config import RunConfig
from .corpus_builder import (
    collect as collect_corpus,
    default_subreddit_config,
    derive_subset,
    load_subreddit_config,
    read_manifest,
)
from .dump_ingest import open_stream
from .errors import PipelineStageError, RedlexError
from .lexicon_pipeline import KeywordLexicon
from .matching import KeywordMatcher

logger = logging.getLogger(__name__)


def _load_config(config_path: str | None) -> RunConfig:
    if config_path:
        return RunConfig.from_file(config_path)
    return RunConfig()


def _fail(stage: str, exc: Exception) -> None:
    click.echo(f"error in {stage}: {exc}", err=True)
    sys.exit(1)


def _lexicon_ref(path: Path) -> dict:
    return {
        "path": str(path),
        "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
    }


@click.group()
@click.option("--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    """Topic lexicon construction and discussion-dump analytics."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@main.command("extract-keywords")
@click.option("--seeds", required=True,
              help="Comma-separated seed terms, or a preset name "
                   f"({', '.join(sorted(defaults.SEED_PRESETS))}).")
@click.option("--topic", default=None, help="Topic phrase used in prompts.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Run configuration JSON.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Lexicon JSON output path.")
@click.option("--run-dir", type=click.Path(), default=None,
              help="Directory for resumable stage outputs and run metadata.")
@click.option("--jobs", type=int, default=None, help="Concurrent completion calls.")
def extract_keywords(seeds, topic, config_path, out_path, run_dir, jobs):
    """Build a ranked, filtered keyword lexicon from seed terms."""
    try:
        cfg = _load_config(config_path)
    except (RedlexError, ValueError, OSError) as exc:
        _fail("config", exc)
    if seeds in defaults.SEED_PRESETS:
        preset = defaults.SEED_PRESETS[seeds]
        seed_terms = list(preset["seed_terms"])
        topic = topic or preset["topic"]
    else:
        seed_terms = [s.strip() for s in seeds.split(",") if s.strip()]
    if not seed_terms:
        raise click.UsageError("no seed terms given")
    topic = topic or cfg.topic
    if jobs is not None:
        cfg.jobs = jobs

    try:
        provider = cfg.build_provider()
        page_store = cfg.build_page_store()
    except (RedlexError, ValueError, OSError) as exc:
        _fail("setup", exc)
    try:
        lexicon, metadata = lexicon_pipeline.run_pipeline(
            seed_terms, topic,
            provider=provider,
            page_store=page_store,
            per_seed_search_limit=cfg.per_seed_search_limit,
            max_chunk_tokens=cfg.max_chunk_tokens,
            top_n=cfg.top_n,
            page_filter_words=cfg.page_filter_words,
            jobs=cfg.jobs,
            run_dir=run_dir,
            config_snapshot=cfg.snapshot(),
            max_attempts=cfg.retry_attempts,
            backoff_base=cfg.retry_backoff,
        )
    except PipelineStageError as exc:
        _fail(exc.stage, exc.cause)
    except RedlexError as exc:
        _fail("pipeline", exc)
    lexicon.save(out_path)
    meta_path = Path(out_path).with_suffix(".meta.json")
    meta_path.write_text(
        json.dumps(metadata, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8")
    click.echo(f"wrote {len(lexicon.entries)} keywords to {out_path}")


def _classify_dump_path(path: Path) -> str | None:
    name = path.name.lower()
    if name.startswith("rs_") or "submission" in name:
        return "submission"
    if name.startswith("rc_") or "comment" in name:
        return "comment"
    return None


def _gather_dumps(dumps, submissions, comments) -> tuple[list[Path], list[Path]]:
    sub_paths = [Path(p) for p in submissions]
    com_paths = [Path(p) for p in comments]
    for entry in dumps:
        root = Path(entry)
        candidates = sorted(root.iterdir()) if root.is_dir() else [root]
        for path in candidates:
            if path.suffix not in (".ndjson", ".jsonl", ".zst"):
                continue
            kind = _classify_dump_path(path)
            if kind == "submission":
                sub_paths.append(path)
            elif kind == "comment":
                com_paths.append(path)
            else:
                logger.warning("cannot tell submissions from comments: %s", path)
    return sub_paths, com_paths


@main.command("collect")
@click.option("--lexicon", "lexicon_path", required=True, type=click.Path(exists=True))
@click.option("--dumps", multiple=True, type=click.Path(),
              help="Dump file or directory; kind inferred from file names "
                   "(RS_*/RC_* or *submission*/*comment*).")
@click.option("--submissions", multiple=True, type=click.Path(),
              help="Explicit submissions dump file(s).")
@click.option("--comments", multiple=True, type=click.Path(),
              help="Explicit comments dump file(s).")
@click.option("--subreddits-config", "subreddits_path", type=click.Path(exists=True),
              help="JSON with centric/inclusive lists; defaults to the shipped lists.")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def collect(lexicon_path, dumps, submissions, comments, subreddits_path,
            config_path, out_dir):
    """Filter dumps into a corpus using the collection policy."""
    try:
        cfg = _load_config(config_path)
        salt = cfg.salt()
        lexicon = KeywordLexicon.from_file(lexicon_path)
        if subreddits_path:
            centric, inclusive = load_subreddit_config(subreddits_path)
        else:
            centric, inclusive = default_subreddit_config()
    except (RedlexError, ValueError, OSError) as exc:
        _fail("setup", exc)

    sub_paths, com_paths = _gather_dumps(dumps, submissions, comments)
    if not sub_paths and not com_paths:
        raise click.UsageError("no dump files given (use --dumps/--submissions/--comments)")

    def _chain(paths, kind):
        def _records():
            for path in paths:
                records, stats = open_stream(
                    path, kind, skip_ratio_threshold=cfg.skip_ratio_threshold)
                yield from records
                logger.info("%s: %s", path, json.dumps(stats.as_dict()))
        return _records()

    try:
        manifest = collect_corpus(
            _chain(sub_paths, "submission"),
            _chain(com_paths, "comment"),
            centric, inclusive,
            KeywordMatcher(lexicon.keywords),
            out_dir,
            salt,
            lexicon_ref=_lexicon_ref(Path(lexicon_path)),
            match_selftext=cfg.match_selftext,
            config_snapshot=cfg.snapshot(),
        )
    except RedlexError as exc:
        _fail("collect", exc)
    for kind in ("submissions", "comments"):
        counts = manifest["counts"][kind]
        click.echo(f"{kind}: centric={counts['centric']} "
                   f"inclusive={counts['inclusive']} total={counts['total']}")


@main.command("subset")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--subset-lexicon", "lexicon_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def subset(corpus_dir, lexicon_path, out_dir):
    """Derive a topical subset of a built corpus."""
    try:
        lexicon = KeywordLexicon.from_file(lexicon_path)
        manifest = derive_subset(
            corpus_dir,
            KeywordMatcher(lexicon.keywords),
            out_dir,
            lexicon_ref=_lexicon_ref(Path(lexicon_path)),
        )
    except (RedlexError, ValueError, OSError) as exc:
        _fail("subset", exc)
    counts = manifest["counts"]
    click.echo(f"subset: {counts['submissions']['total']} submissions, "
               f"{counts['comments']['total']} comments")


@main.command("analyze")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--adapter", "adapter_name",
              type=click.Choice(["stub", "file-exchange"]), default=None,
              help="Classifier adapter; defaults to the config's choice.")
@click.option("--exchange-dir", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def analyze(corpus_dir, adapter_name, exchange_dir, config_path, out_dir):
    """Compute every report series over a corpus; writes analysis.json."""
    try:
        cfg = _load_config(config_path)
        if adapter_name:
            cfg.adapter = adapter_name
        if exchange_dir:
            cfg.exchange_dir = exchange_dir
        cfg.validate()
        adapter = cfg.build_adapter()
    except (RedlexError, ValueError, OSError) as exc:
        _fail("setup", exc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        bundle = reporting.analyze_corpus(
            corpus_dir, adapter,
            batch_size=cfg.classifier_batch_size,
            label_cache_path=out / "label_cache.json",
            top_n=cfg.top_subreddits_n,
            config_snapshot=cfg.snapshot(),
        )
    except RedlexError as exc:
        _fail("analyze", exc)
    reporting.write_bundle(bundle, out / "analysis.json")
    meta = bundle["metadata"]
    click.echo(f"analyzed {meta['records_analyzed']['submissions']} submissions, "
               f"{meta['records_analyzed']['comments']} comments "
               f"-> {out / 'analysis.json'}")


@main.command("report")
@click.option("--analysis", "analysis_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--out", "out_dir", required=True, type=click.Path())
def report(analysis_path, fmt, out_dir):
    """Emit one plot-ready file per series from an analysis bundle."""
    try:
        bundle = reporting.load_bundle(analysis_path)
        written = reporting.emit_reports(bundle, out_dir, fmt,
                                         source=str(analysis_path))
    except (RedlexError, ValueError, OSError, KeyError) as exc:
        _fail("report", exc)
    click.echo(f"wrote {len(written)} report files to {out_dir}")


if __name__ == "__main__":
    main()
