"""Multi-pattern phrase matching over normalized title tokens.

Titles are lowercased and split on runs of non-alphanumeric characters, so
"Israel-Hamas" yields the tokens ["israel", "hamas"]. A keyword matches a
title when its token sequence occurs contiguously in the title's token
sequence; this deliberately avoids substring matching ("Hamas" must not fire
inside "Bahamas"). KeywordMatcher scans a title once regardless of lexicon
size; naive_title_match is the per-keyword reference used to cross-check it.
"""

from __future__ import annotations

import re
from collections import deque
from typing import Iterable, Sequence

# Unicode letters and digits; underscore excluded on purpose.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


class KeywordMatcher:
    """Aho-Corasick automaton over the token alphabet.

    Built once per lexicon; matching a title costs one transition per title
    token. Keywords that normalize to an empty token sequence are ignored.
    """

    def __init__(self, keywords: Iterable[str]):
        patterns = []
        seen: set[tuple[str, ...]] = set()
        for kw in keywords:
            toks = tuple(tokenize(kw))
            if toks and toks not in seen:
                seen.add(toks)
                patterns.append(toks)
        self.patterns = patterns
        self._goto: list[dict[str, int]] = [{}]
        self._fail: list[int] = [0]
        self._hit: list[bool] = [False]
        for toks in patterns:
            self._insert(toks)
        self._link_failures()

    def _insert(self, tokens: Sequence[str]) -> None:
        state = 0
        for tok in tokens:
            nxt = self._goto[state].get(tok)
            if nxt is None:
                nxt = len(self._goto)
                self._goto[state][tok] = nxt
                self._goto.append({})
                self._fail.append(0)
                self._hit.append(False)
            state = nxt
        self._hit[state] = True

    def _link_failures(self) -> None:
        queue = deque()
        for child in self._goto[0].values():
            self._fail[child] = 0
            queue.append(child)
        while queue:
            state = queue.popleft()
            for tok, child in self._goto[state].items():
                f = self._fail[state]
                while f and tok not in self._goto[f]:
                    f = self._fail[f]
                self._fail[child] = self._goto[f].get(tok, 0)
                # any suffix of the path ending here may complete a pattern
                self._hit[child] = self._hit[child] or self._hit[self._fail[child]]
                queue.append(child)

    def match_tokens(self, tokens: Iterable[str]) -> bool:
        """True iff any pattern occurs contiguously in `tokens`."""
        goto = self._goto
        fail = self._fail
        hit = self._hit
        state = 0
        for tok in tokens:
            while state and tok not in goto[state]:
                state = fail[state]
            state = goto[state].get(tok, 0)
            if hit[state]:
                return True
        return False

    def matches(self, title: str) -> bool:
        return self.match_tokens(tokenize(title))


def naive_title_match(title: str, keywords: Iterable[str]) -> bool:
    """Reference matcher: scan the title once per keyword."""
    tokens = tokenize(title)
    n = len(tokens)
    for kw in keywords:
        pat = tokenize(kw)
        m = len(pat)
        if m == 0 or m > n:
            continue
        for i in range(n - m + 1):
            if tokens[i:i + m] == pat:
                return True
    return False
