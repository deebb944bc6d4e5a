"""Inverted index with faceted search over messages and transcripts.

Keyword semantics are whole-token AND after case folding; facet filters are
OR within one facet and AND across facets. Facet counts are recomputed over
the filtered result set, so clicking a value in the UI always narrows.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .annotations import AnnotatedDocument
from .casegraph import (
    CHAT,
    IN_CHAT,
    PARTICIPATES_IN,
    CaseGraph,
)
from .errors import NoDocsError, NoSuchDocError

SCHEMA_TAG = "casekit-index/1"

FACET_NAMES = (
    "participant",
    "sender",
    "chat",
    "attachment",
    "date",
    "entity",
    "entity_type",
    "source",
)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

SNIPPET_RADIUS = 40


def tokenize(text: str) -> list[str]:
    return [t.casefold() for t in _TOKEN_RE.findall(text)]


@dataclass
class IndexedMessage:
    doc_id: str
    ordinal: int
    timestamp: str
    content: str
    tokens: list[str]
    facets: dict[str, list[str]]


@dataclass
class FacetedQuery:
    keywords: list[str] = field(default_factory=list)
    filters: dict[str, set[str]] = field(default_factory=dict)
    want_facet_counts: bool = False

    def validate(self) -> None:
        if not self.keywords and not self.filters:
            raise ValueError("query needs keywords or at least one filter")
        for name in self.filters:
            if name not in FACET_NAMES:
                raise ValueError(f"unknown facet {name!r}")


@dataclass
class ChatHit:
    chat_id: str
    ordinals: list[int]
    snippets: list[str]
    last_timestamp: str


@dataclass
class SearchResult:
    chats: list[ChatHit]
    chat_count: int
    message_count: int
    transcript_count: int
    facet_counts: dict[str, dict[str, int]] | None = None

    def to_json(self) -> dict:
        return {
            "chats": [
                {
                    "chat_id": c.chat_id,
                    "ordinals": c.ordinals,
                    "snippets": c.snippets,
                    "last_timestamp": c.last_timestamp,
                }
                for c in self.chats
            ],
            "counts": {
                "chats": self.chat_count,
                "messages": self.message_count,
                "transcripts": self.transcript_count,
            },
            "facets": self.facet_counts,
        }


class SearchIndex:
    def __init__(self) -> None:
        self.schema = SCHEMA_TAG
        self.postings: dict[str, list[tuple[str, int, int]]] = {}
        self.messages: dict[tuple[str, int], IndexedMessage] = {}

    # -- construction ------------------------------------------------------

    def _add_message(self, rec: IndexedMessage) -> None:
        self.messages[(rec.doc_id, rec.ordinal)] = rec
        for pos, token in enumerate(rec.tokens):
            self.postings.setdefault(token, []).append((rec.doc_id, rec.ordinal, pos))

    def _drop_doc(self, doc_id: str) -> None:
        self.messages = {k: v for k, v in self.messages.items() if k[0] != doc_id}
        for token in list(self.postings):
            kept = [p for p in self.postings[token] if p[0] != doc_id]
            if kept:
                self.postings[token] = kept
            else:
                del self.postings[token]

    def _normalize(self) -> None:
        self.postings = {t: sorted(self.postings[t]) for t in sorted(self.postings)}
        self.messages = dict(sorted(self.messages.items()))

    # -- persistence ---------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        return {
            "schema": self.schema,
            "postings": {
                t: [[d, o, p] for d, o, p in plist] for t, plist in self.postings.items()
            },
            "messages": [
                {
                    "doc_id": m.doc_id,
                    "ordinal": m.ordinal,
                    "timestamp": m.timestamp,
                    "content": m.content,
                    "tokens": m.tokens,
                    "facets": m.facets,
                }
                for m in self.messages.values()
            ],
        }

    def save(self, path: Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), indent=1, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: Path) -> "SearchIndex":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("schema") != SCHEMA_TAG:
            raise ValueError(f"unsupported index schema {payload.get('schema')!r}")
        index = cls()
        for m in payload["messages"]:
            index.messages[(m["doc_id"], m["ordinal"])] = IndexedMessage(
                doc_id=m["doc_id"],
                ordinal=m["ordinal"],
                timestamp=m["timestamp"],
                content=m["content"],
                tokens=m["tokens"],
                facets=m["facets"],
            )
        index.postings = {
            t: [(d, o, p) for d, o, p in plist]
            for t, plist in payload["postings"].items()
        }
        return index


def _message_record(
    g: CaseGraph,
    chat_id: str,
    ordinal: int,
    msg_node: str,
    doc: AnnotatedDocument | None,
) -> IndexedMessage:
    node = g.nodes[msg_node]
    chat = g.nodes[f"chat:{chat_id}"]
    participants = sorted(
        g.nodes[e.src].props["phone"] for e in g.in_edges(chat.node_id, PARTICIPATES_IN)
    )
    content = g.message_text(msg_node) or ""
    is_audio = node.props["kind"] == "AUDIO" and content != ""

    facets: dict[str, list[str]] = {
        "participant": participants,
        "sender": [node.props["sender"]],
        "chat": [chat_id],
        "date": [node.props["timestamp"][:10]],
        "source": ["audio" if is_audio else "text"],
    }
    if node.props["kind"] != "TEXT":
        facets["attachment"] = [node.props["kind"]]

    if doc is not None and ordinal in doc.offset_map:
        lo, hi = doc.offset_map[ordinal]
        entities = sorted(
            {m.cluster_id for m in doc.mentions if lo <= m.start and m.end <= hi and m.cluster_id}
        )
        etypes = sorted(
            {m.mtype for m in doc.mentions if lo <= m.start and m.end <= hi}
        )
        if entities:
            facets["entity"] = entities
        if etypes:
            facets["entity_type"] = etypes

    return IndexedMessage(
        doc_id=chat_id,
        ordinal=ordinal,
        timestamp=node.props["timestamp"],
        content=content,
        tokens=tokenize(content),
        facets=facets,
    )


def _chat_messages(g: CaseGraph, chat_id: str) -> list[tuple[int, str]]:
    chat_node = g.require(f"chat:{chat_id}")
    nodes = sorted(
        (g.nodes[e.src] for e in g.in_edges(chat_node.node_id, IN_CHAT)),
        key=lambda n: n.props["msg_id"],
    )
    return [(i, n.node_id) for i, n in enumerate(nodes)]


def build_index(
    g: CaseGraph, docs: dict[str, AnnotatedDocument] | None = None
) -> SearchIndex:
    """Index every message of every chat; entity facets come from `docs`."""
    chat_ids = sorted(n.props["chat_id"] for n in g.nodes_of_kind(CHAT))
    if not chat_ids:
        raise NoDocsError("case has no chats to index")
    index = SearchIndex()
    for chat_id in chat_ids:
        doc = docs.get(chat_id) if docs else None
        for ordinal, msg_node in _chat_messages(g, chat_id):
            index._add_message(_message_record(g, chat_id, ordinal, msg_node, doc))
    index._normalize()
    return index


def reindex_doc(
    index: SearchIndex,
    g: CaseGraph,
    doc_id: str,
    doc: AnnotatedDocument | None = None,
) -> None:
    """Replace postings and facets for one document; others untouched."""
    if f"chat:{doc_id}" not in g.nodes:
        raise NoSuchDocError(f"unknown document {doc_id!r}")
    index._drop_doc(doc_id)
    for ordinal, msg_node in _chat_messages(g, doc_id):
        index._add_message(_message_record(g, doc_id, ordinal, msg_node, doc))
    index._normalize()


def _snippet(content: str, keywords: list[str]) -> str:
    folded = content.casefold()
    for kw in keywords:
        at = folded.find(kw)
        if at >= 0:
            lo = max(0, at - SNIPPET_RADIUS)
            hi = min(len(content), at + len(kw) + SNIPPET_RADIUS)
            prefix = "..." if lo > 0 else ""
            suffix = "..." if hi < len(content) else ""
            return f"{prefix}{content[lo:hi]}{suffix}"
    return content[: 2 * SNIPPET_RADIUS]


def search(index: SearchIndex, q: FacetedQuery) -> SearchResult:
    """Evaluate a faceted query; equivalent to a naive scan over messages."""
    q.validate()
    tokens: list[str] = []
    for kw in q.keywords:
        tokens.extend(tokenize(kw))

    if tokens:
        candidate_keys: set[tuple[str, int]] | None = None
        for token in tokens:
            keys = {(d, o) for d, o, _ in index.postings.get(token, [])}
            candidate_keys = keys if candidate_keys is None else candidate_keys & keys
            if not candidate_keys:
                break
        candidates = [index.messages[k] for k in sorted(candidate_keys or set())]
    else:
        candidates = list(index.messages.values())

    hits = []
    for rec in candidates:
        ok = True
        for facet, wanted in q.filters.items():
            values = set(rec.facets.get(facet, []))
            if not (values & wanted):
                ok = False
                break
        if ok:
            hits.append(rec)

    by_chat: dict[str, list[IndexedMessage]] = {}
    for rec in hits:
        by_chat.setdefault(rec.doc_id, []).append(rec)

    chat_hits = []
    for chat_id, recs in by_chat.items():
        recs.sort(key=lambda r: r.ordinal)
        chat_hits.append(
            ChatHit(
                chat_id=chat_id,
                ordinals=[r.ordinal for r in recs],
                snippets=[_snippet(r.content, tokens) for r in recs],
                last_timestamp=max(r.timestamp for r in recs),
            )
        )
    # recency first; stable tie-break on chat id
    chat_hits.sort(key=lambda c: c.chat_id)
    chat_hits.sort(key=lambda c: c.last_timestamp, reverse=True)

    facet_counts = None
    if q.want_facet_counts:
        facet_counts = {}
        for rec in hits:
            for facet, values in rec.facets.items():
                for value in values:
                    bucket = facet_counts.setdefault(facet, {})
                    bucket[value] = bucket.get(value, 0) + 1
        facet_counts = {f: dict(sorted(v.items())) for f, v in sorted(facet_counts.items())}

    return SearchResult(
        chats=chat_hits,
        chat_count=len(chat_hits),
        message_count=len(hits),
        transcript_count=sum(1 for r in hits if r.facets["source"] == ["audio"]),
        facet_counts=facet_counts,
    )
