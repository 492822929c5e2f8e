"""Conversation tree reconstruction from submissions and comment parent links.

A conversation is a submission plus its comment tree. Comments whose parent is
absent from the thread attach to the root with an orphan flag instead of being
dropped, so comment counts are conserved. Parent loops (malformed dumps) are
severed at the lexicographically smallest id in the loop, which then becomes
an orphan; length counts comments only, not the submission.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dump_ingest import CommentRecord, SubmissionRecord
from .errors import CrossThreadComment

_ROOT = "<root>"


def _strip_ref(ref: str) -> str:
    if len(ref) > 3 and ref[0] == "t" and ref[2] == "_" and ref[1] in "12345":
        return ref[3:]
    return ref


@dataclass
class CommentNode:
    record: CommentRecord
    children: list["CommentNode"] = field(default_factory=list)
    orphaned: bool = False

    def to_json_dict(self) -> dict:
        return {
            "id": self.record.id,
            "author": self.record.author,
            "body": self.record.body,
            "created_utc": self.record.created_utc,
            "score": self.record.score,
            "controversiality": self.record.controversiality,
            "orphaned": self.orphaned,
            "children": [c.to_json_dict() for c in self.children],
        }


@dataclass
class Conversation:
    root: SubmissionRecord
    children: list[CommentNode]
    orphan_count: int
    length: int
    is_controversial: bool

    def iter_nodes(self) -> Iterable[CommentNode]:
        stack = list(self.children)
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children)

    def to_json_dict(self) -> dict:
        return {
            "submission": self.root.to_json_dict(),
            "orphan_count": self.orphan_count,
            "length": self.length,
            "is_controversial": self.is_controversial,
            "comments": [c.to_json_dict() for c in self.children],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, ensure_ascii=False)


def build(submission: SubmissionRecord,
          comments: Sequence[CommentRecord]) -> Conversation:
    """Assemble the conversation tree for one submission.

    Output is independent of comment input order: comments are processed in
    (created_utc, id) order and children are sorted the same way. Duplicate
    comment ids keep their first occurrence in that canonical order.
    """
    ordered = sorted(comments, key=lambda c: (c.created_utc, c.id))
    by_id: dict[str, CommentRecord] = {}
    for com in ordered:
        if _strip_ref(com.link_id) != submission.id:
            raise CrossThreadComment(
                f"comment {com.id} targets {com.link_id}, not {submission.id}")
        by_id.setdefault(com.id, com)

    # parent[cid] is a comment id, or _ROOT when attached to the submission
    parent: dict[str, str] = {}
    orphaned: set[str] = set()
    for cid, com in by_id.items():
        pid = _strip_ref(com.parent_id)
        if pid == submission.id:
            parent[cid] = _ROOT
        elif pid in by_id and pid != cid:
            parent[cid] = pid
        else:
            parent[cid] = _ROOT
            orphaned.add(cid)

    _sever_cycles(parent, orphaned)

    children_map: dict[str, list[str]] = {}
    for cid in by_id:
        children_map.setdefault(parent[cid], []).append(cid)
    for ids in children_map.values():
        ids.sort(key=lambda cid: (by_id[cid].created_utc, cid))

    nodes = {cid: CommentNode(by_id[cid], orphaned=cid in orphaned)
             for cid in by_id}
    for cid, node in nodes.items():
        node.children = [nodes[k] for k in children_map.get(cid, ())]
    top = [nodes[k] for k in children_map.get(_ROOT, ())]

    return Conversation(
        root=submission,
        children=top,
        orphan_count=len(orphaned),
        length=len(by_id),
        is_controversial=any(c.controversiality == 1 for c in by_id.values()),
    )


def _sever_cycles(parent: dict[str, str], orphaned: set[str]) -> None:
    """Break parent loops by re-rooting the smallest id of each cycle."""
    state: dict[str, int] = {}  # 1 = in progress, 2 = settled
    for start in sorted(parent):
        if state.get(start):
            continue
        path: list[str] = []
        cur = start
        while cur != _ROOT and state.get(cur) is None:
            state[cur] = 1
            path.append(cur)
            cur = parent[cur]
        if cur != _ROOT and state.get(cur) == 1:
            cycle = path[path.index(cur):]
            sever = min(cycle)
            parent[sever] = _ROOT
            orphaned.add(sever)
        for cid in path:
            state[cid] = 2


def group_comments(comments: Iterable[CommentRecord]) -> dict[str, list[CommentRecord]]:
    """Bucket comments by their target submission id (link_id sans prefix)."""
    grouped: dict[str, list[CommentRecord]] = {}
    for com in comments:
        grouped.setdefault(_strip_ref(com.link_id), []).append(com)
    return grouped


def build_all(submissions: Iterable[SubmissionRecord],
              comments: Iterable[CommentRecord]) -> list[Conversation]:
    """Build one conversation per submission, in submission id order."""
    grouped = group_comments(comments)
    return [build(sub, grouped.get(sub.id, []))
            for sub in sorted(submissions, key=lambda s: s.id)]


_LOG_SINGLETON_MAX = 10


def _bucket(length: int) -> tuple[int, str]:
    """Log-scale bucket: exact through 10, then decade ranges (11-100, ...)."""
    if length <= _LOG_SINGLETON_MAX:
        return length, str(length)
    hi = 100
    while length > hi:
        hi *= 10
    lo = hi // 10 + 1
    return lo, f"{lo}-{hi}"


def length_histogram(conversations: Iterable[Conversation],
                     bucketing: str = "log") -> list[tuple[str, int]]:
    """Conversation-length histogram as ordered (bucket label, count) pairs.

    `bucketing` is "log" (exact buckets through 10, then decade ranges) or
    "exact" (one bucket per distinct length).
    """
    if bucketing not in ("log", "exact"):
        raise ValueError(f"unknown bucketing: {bucketing!r}")
    counts: dict[tuple[int, str], int] = {}
    for conv in conversations:
        if bucketing == "exact":
            key = (conv.length, str(conv.length))
        else:
            key = _bucket(conv.length)
        counts[key] = counts.get(key, 0) + 1
    return [(label, counts[(order, label)])
            for order, label in sorted(counts)]
