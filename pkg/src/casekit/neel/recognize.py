"""Mention recognition over serialized chat documents.

The built-in recognizer is deliberately deterministic: gazetteer names
(participants plus knowledge-base titles) matched case-insensitively on word
boundaries, plus rule patterns for dates and money. Any recognizer producing
the same Mention records (for example a neural tagger) can replace it.
"""

from __future__ import annotations

import re

from ..entities import DATE, MONEY, TYPE_PRIORITY, Mention, mention_id_for

_MONTHS = (
    "january|february|march|april|may|june|july|august|september|october|november|december"
)

DATE_PATTERNS = [
    re.compile(r"\b\d{4}-\d{2}-\d{2}\b"),
    re.compile(r"\b\d{1,2}/\d{1,2}/\d{4}\b"),
    re.compile(rf"\b\d{{1,2}} (?:{_MONTHS})(?: \d{{4}})?\b", re.IGNORECASE),
    re.compile(rf"\b(?:{_MONTHS}) \d{{1,2}}(?:, \d{{4}})?\b", re.IGNORECASE),
]

_CURRENCY_WORDS = r"(?:euros?|dollars?|pounds?|EUR|USD|GBP)"
_NUM = r"\d+(?:[.,]\d+)*"

MONEY_PATTERNS = [
    re.compile(rf"[€$£] ?{_NUM}"),
    re.compile(rf"{_NUM} ?[€$£]"),
    re.compile(rf"\b{_NUM} ?{_CURRENCY_WORDS}\b", re.IGNORECASE),
    re.compile(rf"\b{_CURRENCY_WORDS} ?{_NUM}\b", re.IGNORECASE),
]


def _word_bounded(name: str) -> re.Pattern:
    return re.compile(rf"(?<!\w){re.escape(name)}(?!\w)", re.IGNORECASE)


def _candidates(doc: str, gazetteer: dict[str, str], rules: bool) -> list[tuple[int, int, str]]:
    spans: list[tuple[int, int, str]] = []
    for name, mtype in gazetteer.items():
        if not name.strip():
            continue
        for m in _word_bounded(name).finditer(doc):
            spans.append((m.start(), m.end(), mtype))
    if rules:
        for pat in DATE_PATTERNS:
            spans.extend((m.start(), m.end(), DATE) for m in pat.finditer(doc))
        for pat in MONEY_PATTERNS:
            spans.extend((m.start(), m.end(), MONEY) for m in pat.finditer(doc))
    return spans


def recognize_mentions(
    doc: str,
    gazetteer: dict[str, str],
    rules: bool = True,
    doc_id: str = "doc",
) -> list[Mention]:
    """Leftmost-longest non-overlapping mentions, sorted by start offset.

    Overlaps resolve to the longest span; equal-length overlaps resolve by
    type priority (PER before ORG before LOC, then DATE, MONEY, MISC).
    """
    if not doc:
        raise ValueError("document is empty")
    spans = _candidates(doc, gazetteer, rules)
    spans.sort(key=lambda s: (s[0], s[0] - s[1], TYPE_PRIORITY[s[2]]))

    accepted: list[tuple[int, int, str]] = []
    last_end = 0
    for start, end, mtype in spans:
        if start >= last_end:
            accepted.append((start, end, mtype))
            last_end = end

    return [
        Mention(
            mention_id=mention_id_for(doc_id, start, end),
            doc_id=doc_id,
            start=start,
            end=end,
            surface=doc[start:end],
            mtype=mtype,
        )
        for start, end, mtype in accepted
    ]
