"""Tests for daily series, controversy aggregates, and the classifier boundary."""

import datetime
import random

import pytest

from conftest import DAY, EPOCH_BASE, make_comment, make_submission
from redlex.analytics import (
    BatchResult,
    ClassifierAdapter,
    EMOTION_LABELS,
    FileExchangeAdapter,
    LabelVector,
    MORAL_LABELS,
    StubClassifierAdapter,
    classify_comments,
    controversy_daily,
    daily_counts,
    label_daily_mean,
    load_label_cache,
    popularity_series,
    save_label_cache,
    subreddit_controversy,
    top_subreddits,
    unique_authors_daily,
)
from redlex.dump_ingest import parse_comment, parse_submission
from redlex.errors import AdapterUnavailable


def _sub(i, day=0, **kw):
    kw.setdefault("created_utc", EPOCH_BASE + day * DAY + i)
    return parse_submission(make_submission(i, **kw))


def _com(i, day=0, link="s0", **kw):
    kw.setdefault("created_utc", EPOCH_BASE + day * DAY + i)
    return parse_comment(make_comment(i, link, **kw))


DAY0 = datetime.date(2023, 10, 1)


class TestDailyCounts:
    def test_buckets_and_gaps(self):
        records = [_sub(1, day=0), _sub(2, day=0), _sub(3, day=0), _sub(4, day=2)]
        series = daily_counts(records, "daily_submissions")
        assert series.points == [(DAY0, 3), (DAY0 + datetime.timedelta(days=2), 1)]
        assert series.gaps == [DAY0 + datetime.timedelta(days=1)]

    def test_empty(self):
        series = daily_counts([], "x")
        assert series.points == [] and series.gaps == []

    def test_utc_day_boundary(self):
        before = _com(1, created_utc=EPOCH_BASE + DAY - 1)   # 23:59:59
        after = _com(2, created_utc=EPOCH_BASE + DAY + 1)    # 00:00:01 next day
        series = daily_counts([before, after], "x")
        assert len(series.points) == 2


class TestPopularity:
    def test_sum_and_mean(self):
        comments = [_com(1, score=5), _com(2, score=-2)]
        sums, means = popularity_series(comments)
        assert sums.points == [(DAY0, 3)]
        assert means.points == [(DAY0, 1.5)]

    def test_zero(self):
        sums, means = popularity_series([_com(1, score=0)])
        assert sums.points == [(DAY0, 0)]
        assert means.points == [(DAY0, 0.0)]

    def test_two_days(self):
        comments = [_com(1, day=0, score=10),
                    _com(2, day=1, score=10), _com(3, day=1, score=10)]
        sums, means = popularity_series(comments)
        assert [v for _, v in sums.points] == [10, 20]
        assert [v for _, v in means.points] == [10.0, 10.0]

    def test_mean_times_count_equals_sum(self):
        rng = random.Random(3)
        comments = [_com(i, day=rng.randint(0, 5), score=rng.randint(-40, 90))
                    for i in range(300)]
        sums, means = popularity_series(comments)
        counts = daily_counts(comments, "c").value_map()
        sum_map = sums.value_map()
        for day, mean in means.points:
            assert abs(mean * counts[day] - sum_map[day]) <= 1e-9 * max(
                1.0, abs(sum_map[day]))


class TestUniqueAuthors:
    def test_per_day_distinct(self):
        comments = [_com(1, author="h1"), _com(2, author="h1"), _com(3, author="h2")]
        series = unique_authors_daily(comments)
        assert series.points == [(DAY0, 2)]

    def test_same_author_counts_each_day(self):
        comments = [_com(1, day=0, author="h1"), _com(2, day=1, author="h1")]
        series = unique_authors_daily(comments)
        assert [v for _, v in series.points] == [1, 1]

    def test_known_overlap_schedule(self):
        # authors a0..a9 post every day; day d adds d one-off authors
        comments = []
        i = 0
        for day in range(4):
            for a in range(10):
                comments.append(_com(i, day=day, author=f"a{a}")); i += 1
            for extra in range(day):
                comments.append(_com(i, day=day, author=f"x{day}_{extra}")); i += 1
        series = unique_authors_daily(comments)
        assert [v for _, v in series.points] == [10, 11, 12, 13]


class TestControversy:
    def test_daily_count(self):
        comments = [_com(1, controversiality=1), _com(2, controversiality=0),
                    _com(3, controversiality=1)]
        series = controversy_daily(comments)
        assert series.points == [(DAY0, 2)]

    def test_none_controversial_gives_zero_days(self):
        comments = [_com(1, controversiality=0), _com(2, day=1, controversiality=0)]
        series = controversy_daily(comments)
        assert [v for _, v in series.points] == [0, 0]

    def test_step_shape_reproduced(self):
        comments = []
        i = 0
        for day, flagged in enumerate([1, 1, 8, 9]):
            for _ in range(flagged):
                comments.append(_com(i, day=day, controversiality=1)); i += 1
            comments.append(_com(i, day=day, controversiality=0)); i += 1
        series = controversy_daily(comments)
        assert [v for _, v in series.points] == [1, 1, 8, 9]

    def test_subreddit_ratios(self):
        comments = (
            [_com(i, subreddit="busy", controversiality=1 if i < 3 else 0)
             for i in range(10)] +
            [_com(i + 10, subreddit="calm", controversiality=1) for i in range(2)]
        )
        rows = subreddit_controversy(comments)
        assert rows[0].name == "busy"
        assert rows[0].ratio == pytest.approx(0.3)
        assert rows[1].name == "calm"
        assert rows[1].ratio == 1.0
        assert all(0.0 <= r.ratio <= 1.0 for r in rows)


class TestTopSubreddits:
    def test_brute_force_agreement(self):
        rng = random.Random(9)
        names = [f"r{k}" for k in range(30)]
        subs = [_sub(i, subreddit=rng.choice(names)) for i in range(200)]
        coms = [_com(i, subreddit=rng.choice(names)) for i in range(400)]
        by_subs, by_coms = top_subreddits(subs, coms, 20)

        def _oracle(records):
            counts = {}
            for r in records:
                counts[r.subreddit] = counts.get(r.subreddit, 0) + 1
            return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:20]

        assert by_subs == _oracle(subs)
        assert by_coms == _oracle(coms)

    def test_fewer_than_n(self):
        subs = [_sub(1, subreddit="only")]
        by_subs, by_coms = top_subreddits(subs, [], 20)
        assert by_subs == [("only", 1)]
        assert by_coms == []

    def test_tie_breaks_lexicographic(self):
        subs = [_sub(1, subreddit="zeta"), _sub(2, subreddit="alpha")]
        by_subs, _ = top_subreddits(subs, [], 20)
        assert by_subs == [("alpha", 1), ("zeta", 1)]


class TestLabelVector:
    def test_exact_label_sets_enforced(self):
        moral = {lb: 0.5 for lb in MORAL_LABELS}
        emotion = {lb: 0.5 for lb in EMOTION_LABELS}
        LabelVector(moral, emotion)  # valid
        with pytest.raises(ValueError):
            LabelVector({**moral, "extra": 0.1}, emotion)
        with pytest.raises(ValueError):
            LabelVector(moral, {lb: 0.5 for lb in EMOTION_LABELS[:-1]})

    def test_confidence_bounds(self):
        moral = {lb: 0.5 for lb in MORAL_LABELS}
        emotion = {lb: 0.5 for lb in EMOTION_LABELS}
        with pytest.raises(ValueError):
            LabelVector({**moral, "care": 1.5}, emotion)

    def test_json_round_trip(self):
        vec = StubClassifierAdapter().classify_batch([("c1", "text")]).vectors["c1"]
        assert LabelVector.from_json_dict(vec.to_json_dict()) == vec


class TestStubAdapter:
    def test_deterministic(self):
        a = StubClassifierAdapter().classify_batch([("c1", "some text")])
        b = StubClassifierAdapter().classify_batch([("c1", "some text")])
        assert a.vectors == b.vectors

    def test_different_text_different_vector(self):
        res = StubClassifierAdapter().classify_batch([("c1", "alpha"), ("c2", "beta")])
        assert res.vectors["c1"] != res.vectors["c2"]


class _FaultyAdapter(ClassifierAdapter):
    """Fails a fixed comment id; everything else succeeds."""

    def __init__(self, bad_id):
        self.bad_id = bad_id
        self.stub = StubClassifierAdapter()

    def classify_batch(self, items):
        result = BatchResult()
        for cid, text in items:
            if cid == self.bad_id:
                result.failures[cid] = "injected fault"
            else:
                result.vectors.update(
                    self.stub.classify_batch([(cid, text)]).vectors)
        return result


class TestClassifyComments:
    def test_partial_batch_failures_surface(self):
        comments = [_com(i) for i in range(3)]
        vectors, failures = classify_comments(comments, _FaultyAdapter("c1"))
        assert set(vectors) == {"c0", "c2"}
        assert set(failures) == {"c1"}

    def test_cache_short_circuits(self):
        comments = [_com(i) for i in range(4)]
        cache = {}
        calls = []

        class CountingAdapter(ClassifierAdapter):
            def classify_batch(self, items):
                calls.append([cid for cid, _ in items])
                return StubClassifierAdapter().classify_batch(items)

        classify_comments(comments, CountingAdapter(), cache=cache, batch_size=2)
        assert sorted(sum(calls, [])) == ["c0", "c1", "c2", "c3"]
        calls.clear()
        vectors, _ = classify_comments(comments, CountingAdapter(), cache=cache)
        assert calls == []
        assert set(vectors) == {"c0", "c1", "c2", "c3"}

    def test_batch_size_respected(self):
        comments = [_com(i) for i in range(5)]
        sizes = []

        class SizeAdapter(ClassifierAdapter):
            def classify_batch(self, items):
                sizes.append(len(items))
                return StubClassifierAdapter().classify_batch(items)

        classify_comments(comments, SizeAdapter(), batch_size=2)
        assert sizes == [2, 2, 1]

    def test_cache_files_round_trip(self, tmp_path):
        comments = [_com(i) for i in range(2)]
        cache = {}
        classify_comments(comments, StubClassifierAdapter(), cache=cache)
        path = tmp_path / "cache.json"
        save_label_cache(path, cache)
        assert load_label_cache(path) == cache
        assert load_label_cache(tmp_path / "missing.json") == {}


class TestFileExchangeAdapter:
    def _respond(self, exchange_dir, items, *, drop=(), mangle=()):
        import json as _json

        rows = []
        stub = StubClassifierAdapter()
        for cid, text in items:
            if cid in drop:
                continue
            if cid in mangle:
                rows.append({"id": cid, "moral": {"care": 0.5}, "emotion": {}})
                continue
            vec = stub.classify_batch([(cid, text)]).vectors[cid]
            rows.append({"id": cid, **vec.to_json_dict()})
        path = exchange_dir / "batch_00001.response.ndjson"
        path.write_text("".join(_json.dumps(r) + "\n" for r in rows), "utf-8")

    def test_round_trip(self, tmp_path):
        adapter = FileExchangeAdapter(tmp_path, timeout=5)
        items = [("c1", "alpha"), ("c2", "beta")]
        self._respond(tmp_path, items)
        result = adapter.classify_batch(items)
        assert set(result.vectors) == {"c1", "c2"}
        assert result.failures == {}
        request_rows = (tmp_path / "batch_00001.request.ndjson").read_text().splitlines()
        assert len(request_rows) == 2

    def test_missing_row_is_failure(self, tmp_path):
        adapter = FileExchangeAdapter(tmp_path, timeout=5)
        items = [("c1", "alpha"), ("c2", "beta")]
        self._respond(tmp_path, items, drop={"c2"})
        result = adapter.classify_batch(items)
        assert set(result.vectors) == {"c1"}
        assert result.failures == {"c2": "no response row"}

    def test_wrong_schema_is_failure(self, tmp_path):
        adapter = FileExchangeAdapter(tmp_path, timeout=5)
        items = [("c1", "alpha")]
        self._respond(tmp_path, items, mangle={"c1"})
        result = adapter.classify_batch(items)
        assert "c1" in result.failures

    def test_timeout_is_adapter_unavailable(self, tmp_path):
        adapter = FileExchangeAdapter(tmp_path, timeout=0.3, poll_interval=0.05)
        with pytest.raises(AdapterUnavailable):
            adapter.classify_batch([("c1", "alpha")])


class TestLabelDailyMean:
    def test_hand_mean(self):
        comments = [_com(1), _com(2)]
        vec = {lb: 0.0 for lb in MORAL_LABELS}
        vectors = {
            "c1": LabelVector({**vec, "harm": 0.8},
                              {lb: 0.0 for lb in EMOTION_LABELS}),
            "c2": LabelVector({**vec, "harm": 0.4},
                              {lb: 0.0 for lb in EMOTION_LABELS}),
        }
        series, excluded = label_daily_mean(comments, vectors)
        harm = next(s for s in series if s.metric_name == "label_mean_harm")
        assert harm.points[0][1] == pytest.approx(0.6)
        assert excluded == 0

    def test_single_comment_mean_is_confidence(self):
        comments = [_com(1)]
        vectors, _ = classify_comments(comments, StubClassifierAdapter())
        series, _ = label_daily_mean(comments, vectors)
        care = next(s for s in series if s.metric_name == "label_mean_care")
        assert care.points[0][1] == vectors["c1"].moral["care"]

    def test_uniform_zero(self):
        comments = [_com(1), _com(2)]
        zero = LabelVector({lb: 0.0 for lb in MORAL_LABELS},
                           {lb: 0.0 for lb in EMOTION_LABELS})
        series, _ = label_daily_mean(comments, {"c1": zero, "c2": zero})
        assert all(v == 0.0 for s in series for _, v in s.points)

    def test_missing_vectors_excluded_and_counted(self):
        comments = [_com(1), _com(2)]
        vectors, _ = classify_comments(comments[:1], StubClassifierAdapter())
        series, excluded = label_daily_mean(comments, vectors)
        assert excluded == 1

    def test_means_bounded(self):
        comments = [_com(i) for i in range(50)]
        vectors, _ = classify_comments(comments, StubClassifierAdapter())
        series, _ = label_daily_mean(comments, vectors)
        assert len(series) == 15
        for s in series:
            for _, v in s.points:
                assert 0.0 <= v <= 1.0

    def test_order_invariant_means(self):
        rng = random.Random(5)
        comments = [_com(i, day=i % 3) for i in range(60)]
        vectors, _ = classify_comments(comments, StubClassifierAdapter())
        base = [s.to_json_dict() for s in label_daily_mean(comments, vectors)[0]]
        for _ in range(5):
            rng.shuffle(comments)
            got = [s.to_json_dict() for s in label_daily_mean(comments, vectors)[0]]
            assert got == base
